// Command-line front end: one subcommand per pipeline stage, files as the
// only inter-stage contract. Exit codes: 0 success, 1 validation error,
// 2 IO error.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xmtf/audit.hpp"
#include "xmtf/error.hpp"
#include "xmtf/eval_gen.hpp"
#include "xmtf/eval_rank.hpp"
#include "xmtf/jsonl.hpp"
#include "xmtf/mixture.hpp"
#include "xmtf/pack.hpp"
#include "xmtf/scorers.hpp"
#include "xmtf/shard.hpp"
#include "xmtf/table.hpp"
#include "xmtf/template.hpp"
#include "xmtf/tokenizer.hpp"

namespace {

using xmtf::json;

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    xmtf::write_text_file(out_path, text);
  }
}

void emit_json(const std::string& out_path, const json& doc) {
  emit(out_path, doc.dump(2) + "\n");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::string text = xmtf::read_text_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::unique_ptr<xmtf::LanguageIdentifier> make_identifier(
    const std::string& kind, const std::string& table_path) {
  if (kind == "script") {
    return std::make_unique<xmtf::ScriptLanguageIdentifier>();
  }
  if (kind == "table") {
    if (table_path.empty()) {
      throw xmtf::ValidationError("table identifier needs --identifier-table");
    }
    const json doc = xmtf::read_json_file(table_path);
    std::map<std::string, xmtf::LidResult> entries;
    if (doc.contains("entries")) {
      for (const auto& [sentence, entry] : doc.at("entries").items()) {
        entries[sentence] =
            xmtf::LidResult{entry.at("language").get<std::string>(),
                            entry.value("confidence", 1.0)};
      }
    }
    xmtf::LidResult fallback{"und", 0.0};
    if (doc.contains("default")) {
      fallback = xmtf::LidResult{doc.at("default").at("language").get<std::string>(),
                                 doc.at("default").value("confidence", 0.0)};
    }
    return std::make_unique<xmtf::TableLanguageIdentifier>(
        std::move(entries), std::move(fallback), doc.value("throw_on_miss", false));
  }
  throw xmtf::ValidationError("unknown identifier kind: " + kind);
}

std::unique_ptr<xmtf::Translator> make_translator(const std::string& kind,
                                                  const std::string& table_path,
                                                  bool strict) {
  if (kind == "identity") return std::make_unique<xmtf::IdentityTranslator>();
  if (kind == "uppercase") return std::make_unique<xmtf::UppercaseTranslator>();
  if (kind == "table") {
    if (table_path.empty()) {
      throw xmtf::ValidationError("table translator needs --translator-table");
    }
    const json doc = xmtf::read_json_file(table_path);
    std::map<std::string, std::map<std::string, std::string>> by_target;
    for (const auto& [target, segments] : doc.items()) {
      for (const auto& [from, to] : segments.items()) {
        by_target[target][from] = to.get<std::string>();
      }
    }
    return std::make_unique<xmtf::TableTranslator>(std::move(by_target), strict);
  }
  throw xmtf::ValidationError("unknown translator kind: " + kind);
}

// Splits one task's prompt list into per-variant tasks over shared records.
std::map<xmtf::PromptVariant, xmtf::EvalTask> split_by_variant(
    const xmtf::EvalTask& task) {
  std::map<xmtf::PromptVariant, xmtf::EvalTask> by_variant;
  for (const xmtf::PromptTemplate& tpl : task.prompts) {
    auto [it, inserted] = by_variant.try_emplace(tpl.variant);
    if (inserted) {
      it->second.dataset = task.dataset;
      it->second.language = task.language;
      it->second.records = task.records;
      it->second.label_field = task.label_field;
    }
    it->second.prompts.push_back(tpl);
  }
  return by_variant;
}

struct RenderArgs {
  std::string specs_path;
  std::string out;
};

void cmd_render(const RenderArgs& args) {
  const std::vector<xmtf::DatasetSpec> specs =
      xmtf::load_dataset_specs(args.specs_path);
  std::string out;
  for (const xmtf::DatasetSpec& spec : specs) {
    std::vector<xmtf::Record> records;
    for (const json& j : xmtf::read_jsonl(spec.records_path)) {
      records.push_back(xmtf::record_from_json(j));
    }
    for (const xmtf::Record& record : records) {
      for (const xmtf::PromptTemplate& tpl : spec.templates) {
        out += xmtf::to_jsonl_line(xmtf::render(tpl, record, spec.language));
        out += '\n';
      }
    }
  }
  emit(args.out, out);
}

struct MixArgs {
  std::string specs_path;
  std::string config_path;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t jobs = 1;
  std::string translator = "none";
  std::string translator_table;
  bool strict_translator = false;
};

void cmd_mix(const MixArgs& args) {
  std::vector<xmtf::DatasetSpec> specs =
      xmtf::load_dataset_specs(args.specs_path);

  const json config = xmtf::read_json_file(args.config_path);
  xmtf::MixtureConfig cfg;
  if (!config.contains("target_proportions") ||
      !config.contains("total_examples")) {
    throw xmtf::ValidationError(
        "mixture config needs target_proportions and total_examples");
  }
  for (const auto& [language, p] : config.at("target_proportions").items()) {
    cfg.target_proportions[language] = p.get<double>();
  }
  cfg.total_examples = config.at("total_examples").get<std::uint64_t>();
  cfg.seed = config.value("seed", std::uint64_t{0});
  if (args.seed_given) cfg.seed = args.seed;
  cfg.variant = xmtf::mixture_variant_from_string(
      config.value("variant", std::string("en_only")));
  cfg.jobs = args.jobs;

  if (args.translator != "none") {
    auto translator = make_translator(args.translator, args.translator_table,
                                      args.strict_translator);
    xmtf::MtDerivation derived = xmtf::derive_mt_variant(specs, *translator);
    for (const std::string& line : derived.dropped) {
      std::cerr << "warning: dropped MT template " << line << "\n";
    }
    specs = std::move(derived.specs);
  }

  xmtf::MixtureResult result = xmtf::build_mixture(specs, cfg);
  for (const std::string& language : result.manifest.excluded_languages) {
    std::cerr << "warning: language '" << language
              << "' has specs but no target proportion; excluded\n";
  }

  if (args.out.empty()) {
    for (const xmtf::RenderedExample& ex : result.examples) {
      std::cout << xmtf::to_jsonl_line(ex) << '\n';
    }
  } else {
    xmtf::write_mixture(args.out, result.examples);
  }
  const json manifest_json = xmtf::to_json(result.manifest);
  if (!args.manifest.empty()) {
    xmtf::write_json_file(args.manifest, manifest_json);
  } else if (!args.out.empty()) {
    xmtf::write_json_file(args.out + ".manifest.json", manifest_json);
  }
  std::cerr << xmtf::render_language_table(result.manifest);
}

struct PackArgs {
  std::string in;
  std::string out_dir;
  std::string tokenizer = "whitespace";
  std::string separator = "space";
  std::string attention = "causal";
  std::uint32_t l_max = 2048;
  std::size_t shard_size = 4096;
  std::string out;
};

void cmd_pack(const PackArgs& args) {
  const std::vector<xmtf::RenderedExample> examples =
      xmtf::read_mixture(args.in);
  auto tok = xmtf::make_tokenizer(args.tokenizer);
  const xmtf::SeparatorPolicy separator =
      xmtf::separator_policy_from_string(args.separator);
  const xmtf::AttentionPolicy attention =
      xmtf::attention_policy_from_string(args.attention);

  std::vector<xmtf::SerializedPair> pairs;
  pairs.reserve(examples.size());
  for (const xmtf::RenderedExample& ex : examples) {
    pairs.push_back(xmtf::serialize_pair(ex, *tok, separator));
  }
  xmtf::PackStats stats;
  const std::vector<xmtf::PackedSequence> seqs =
      xmtf::pack(pairs, args.l_max, attention, &stats);
  const xmtf::ShardIndex index =
      xmtf::write_shards(seqs, args.out_dir, args.shard_size, args.l_max);

  json report{{"pairs_seen", stats.pairs_seen},
              {"pairs_packed", stats.pairs_packed},
              {"skipped", stats.skipped},
              {"sequences", stats.sequences},
              {"tokens_emitted", stats.tokens_emitted},
              {"fill_ratio", stats.fill_ratio()},
              {"shards", index.shards.size()},
              {"config",
               {{"tokenizer", args.tokenizer},
                {"separator", args.separator},
                {"attention", args.attention},
                {"l_max", args.l_max},
                {"shard_size", args.shard_size}}}};
  emit_json(args.out, report);
}

struct EvalArgs {
  std::vector<std::string> tasks;
  std::string scorer_path;
  bool length_normalize = false;
  std::string tokenizer = "whitespace";
  std::size_t jobs = 1;
  std::string model_tag = "scorer";
  std::string out;
};

void cmd_eval(const EvalArgs& args) {
  auto scorer = xmtf::load_scorer(args.scorer_path);
  xmtf::EvalOptions options;
  options.length_normalize = args.length_normalize;
  options.tokenizer = args.tokenizer;
  options.jobs = args.jobs;

  json reports = json::array();
  std::string tables;
  for (const std::string& path : args.tasks) {
    const xmtf::EvalTask task = xmtf::load_eval_task(path);
    const auto by_variant = split_by_variant(task);
    const auto variant_reports =
        xmtf::compare_prompt_variants(*scorer, by_variant, options);
    tables += xmtf::render_variant_table(variant_reports, args.model_tag);
    tables += '\n';
    for (const auto& [variant, report] : variant_reports) {
      json entry = xmtf::to_json(report);
      entry["variant"] = xmtf::to_string(variant);
      reports.push_back(std::move(entry));
    }
  }
  std::cout << tables;
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, reports);
  }
}

struct AuditArgs {
  std::string corpus;
  std::string identifier = "script";
  std::string identifier_table;
  double sample_rate = 1.0;
  std::uint64_t seed = 0;
  double confidence_threshold = 0.7;
  std::uint64_t corpus_total_tokens = 0;
  std::size_t jobs = 1;
  std::string out;
};

void cmd_audit(const AuditArgs& args) {
  const std::vector<xmtf::AuditDoc> docs = xmtf::load_audit_docs(args.corpus);
  auto lid = make_identifier(args.identifier, args.identifier_table);
  xmtf::AuditOptions options;
  options.sample_rate = args.sample_rate;
  options.seed = args.seed;
  options.confidence_threshold = args.confidence_threshold;
  options.jobs = args.jobs;
  xmtf::AuditReport report = xmtf::audit_corpus(docs, *lid, options);
  if (args.corpus_total_tokens > 0) {
    xmtf::extrapolate_tokens(report, args.corpus_total_tokens);
  }
  std::cout << xmtf::render_fraction_table(report);
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, xmtf::to_json(report));
  }
}

struct LabelDistArgs {
  std::string samples;
  std::size_t jobs = 1;
  std::string out;
};

void cmd_labeldist(const LabelDistArgs& args) {
  const std::vector<xmtf::LabelSample> samples =
      xmtf::load_label_samples(args.samples);
  const xmtf::LabelDistanceReport report =
      xmtf::label_distance_report(samples, args.jobs);
  std::cout << xmtf::render_label_distance_table(report);
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, xmtf::to_json(report));
  }
}

struct PassKArgs {
  std::uint64_t n = 0;
  std::uint64_t c = 0;
  bool counts_given = false;
  std::string problems;
  std::vector<std::uint64_t> ks;
  std::string model_tag = "model";
  std::string out;
};

void cmd_passk(const PassKArgs& args) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> problems;
  if (!args.problems.empty()) {
    for (const json& j : xmtf::read_jsonl(args.problems)) {
      if (!j.is_object() || !j.contains("n") || !j.contains("c")) {
        throw xmtf::ValidationError("problem lines need n and c");
      }
      problems.emplace_back(j.at("n").get<std::uint64_t>(),
                            j.at("c").get<std::uint64_t>());
    }
  } else if (args.counts_given) {
    problems.emplace_back(args.n, args.c);
  } else {
    throw xmtf::ValidationError("passk needs --problems or --n/--c");
  }
  std::vector<std::uint64_t> ks = args.ks;
  if (ks.empty()) ks.push_back(1);

  std::cout << xmtf::render_pass_table({{args.model_tag, problems}}, ks);
  json scores = json::object();
  for (std::uint64_t k : ks) {
    scores["pass@" + std::to_string(k)] = xmtf::mean_pass_at_k(problems, k);
  }
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, json{{"model", args.model_tag},
                                         {"problems", problems.size()},
                                         {"scores", std::move(scores)}});
  }
}

struct BleuArgs {
  std::string hyp;
  std::vector<std::string> refs;
  std::size_t max_order = 4;
  double smoothing = 0.0;
  std::string out;
};

void cmd_bleu(const BleuArgs& args) {
  const std::vector<std::string> hyps = read_lines(args.hyp);
  std::vector<std::vector<std::string>> reference_lists(hyps.size());
  for (const std::string& ref_path : args.refs) {
    const std::vector<std::string> refs = read_lines(ref_path);
    if (refs.size() != hyps.size()) {
      throw xmtf::ValidationError("reference file " + ref_path + " has " +
                                  std::to_string(refs.size()) + " lines, " +
                                  "expected " + std::to_string(hyps.size()));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      reference_lists[i].push_back(refs[i]);
    }
  }
  const xmtf::BleuResult result =
      xmtf::corpus_bleu(hyps, reference_lists, args.max_order, args.smoothing);
  std::cout << "BLEU = " << xmtf::format_fixed(result.bleu, 4) << "\n";
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, xmtf::to_json(result));
  }
}

struct GenStatsArgs {
  std::string in;
  std::string marker = "#";
  std::string model_tag = "model";
  std::string out;
};

void cmd_genstats(const GenStatsArgs& args) {
  std::vector<std::string> outputs;
  for (const json& j : xmtf::read_jsonl(args.in)) {
    if (!j.is_string()) {
      throw xmtf::ValidationError(
          "genstats input lines must be JSON strings");
    }
    outputs.push_back(j.get<std::string>());
  }
  const xmtf::GenStats stats = xmtf::generation_stats(outputs, args.marker);
  std::cout << xmtf::render_genstats_table({{args.model_tag, stats}});
  if (!args.out.empty()) {
    xmtf::write_json_file(args.out, xmtf::to_json(stats));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crosslingual multitask finetuning data and evaluation toolkit"};
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render = app.add_subcommand(
      "render", "Render every (record, template) pair to JSON-lines");
  render->add_option("--specs", render_args.specs_path, "Dataset specs file")
      ->required();
  render->add_option("--out", render_args.out, "Output path (default stdout)");

  MixArgs mix_args;
  auto* mix = app.add_subcommand(
      "mix", "Build a language-proportioned training mixture");
  mix->add_option("--specs", mix_args.specs_path, "Dataset specs file")
      ->required();
  mix->add_option("--config", mix_args.config_path, "Mixture config file")
      ->required();
  mix->add_option("--out", mix_args.out, "Mixture JSON-lines path");
  mix->add_option("--manifest", mix_args.manifest, "Manifest path");
  auto* mix_seed =
      mix->add_option("--seed", mix_args.seed, "Seed override")
          ->envname("XMTF_SEED");
  mix->add_option("--jobs", mix_args.jobs, "Worker threads");
  mix->add_option("--translator", mix_args.translator,
                  "MT derivation: none|identity|uppercase|table");
  mix->add_option("--translator-table", mix_args.translator_table,
                  "Translation table file");
  mix->add_flag("--strict-translator", mix_args.strict_translator,
                "Fail on unsupported language pairs");

  PackArgs pack_args;
  auto* pack = app.add_subcommand(
      "pack", "Tokenize, pack, and write training shards");
  pack->add_option("--in", pack_args.in, "Mixture JSON-lines path")->required();
  pack->add_option("--out-dir", pack_args.out_dir, "Shard directory")
      ->required();
  pack->add_option("--tokenizer", pack_args.tokenizer, "whitespace|byte");
  pack->add_option("--separator", pack_args.separator,
                   "space|eos|new_special|encoder_decoder");
  pack->add_option("--attention", pack_args.attention, "causal|prefix");
  pack->add_option("--l-max", pack_args.l_max, "Max sequence length");
  pack->add_option("--shard-size", pack_args.shard_size,
                   "Sequences per shard");
  pack->add_option("--out", pack_args.out, "Stats path (default stdout)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand(
      "eval", "Rank-classification evaluation over task files");
  eval->add_option("--task", eval_args.tasks, "Task file (repeatable)")
      ->required();
  eval->add_option("--scorer", eval_args.scorer_path, "Scorer config file")
      ->required();
  eval->add_flag("--length-normalize", eval_args.length_normalize,
                 "Divide scores by continuation token count");
  eval->add_option("--tokenizer", eval_args.tokenizer,
                   "Tokenizer for length normalization");
  eval->add_option("--jobs", eval_args.jobs, "Worker threads");
  eval->add_option("--model-tag", eval_args.model_tag, "Score column label");
  eval->add_option("--out", eval_args.out, "JSON report path");

  AuditArgs audit_args;
  auto* audit = app.add_subcommand(
      "audit", "Language-contamination audit of a corpus");
  audit->add_option("--corpus", audit_args.corpus, "Corpus JSON-lines path")
      ->required();
  audit->add_option("--identifier", audit_args.identifier, "script|table");
  audit->add_option("--identifier-table", audit_args.identifier_table,
                    "Identifier table file");
  audit->add_option("--sample-rate", audit_args.sample_rate,
                    "Document sampling rate in (0, 1]");
  audit->add_option("--seed", audit_args.seed, "Sampling seed")
      ->envname("XMTF_SEED");
  audit->add_option("--confidence-threshold", audit_args.confidence_threshold,
                    "Below it, sentences count as und");
  audit->add_option("--corpus-total-tokens", audit_args.corpus_total_tokens,
                    "Token total for extrapolation");
  audit->add_option("--jobs", audit_args.jobs, "Worker threads");
  audit->add_option("--out", audit_args.out, "JSON report path");

  LabelDistArgs labeldist_args;
  auto* labeldist = app.add_subcommand(
      "labeldist", "Premise/hypothesis edit distance by label");
  labeldist->add_option("--samples", labeldist_args.samples,
                        "Samples JSON-lines path")
      ->required();
  labeldist->add_option("--jobs", labeldist_args.jobs, "Worker threads");
  labeldist->add_option("--out", labeldist_args.out, "JSON report path");

  PassKArgs passk_args;
  auto* passk = app.add_subcommand("passk", "pass@k from (n, c) counts");
  auto* passk_n = passk->add_option("--n", passk_args.n, "Samples per problem");
  passk->add_option("--c", passk_args.c, "Correct samples")->needs(passk_n);
  passk->add_option("--problems", passk_args.problems,
                    "JSON-lines of {n, c} problems");
  passk->add_option("--k", passk_args.ks, "k value (repeatable)");
  passk->add_option("--model-tag", passk_args.model_tag, "Row label");
  passk->add_option("--out", passk_args.out, "JSON report path");

  BleuArgs bleu_args;
  auto* bleu = app.add_subcommand("bleu", "Corpus BLEU");
  bleu->add_option("--hyp", bleu_args.hyp, "Hypotheses, one per line")
      ->required();
  bleu->add_option("--refs", bleu_args.refs,
                   "Reference file, parallel lines (repeatable)")
      ->required();
  bleu->add_option("--max-order", bleu_args.max_order, "Highest n-gram order");
  bleu->add_option("--smoothing", bleu_args.smoothing,
                   "Additive smoothing for orders >= 2");
  bleu->add_option("--out", bleu_args.out, "JSON report path");

  GenStatsArgs genstats_args;
  auto* genstats = app.add_subcommand(
      "genstats", "Length and comment statistics of generations");
  genstats->add_option("--in", genstats_args.in,
                       "JSON-lines of generated strings")
      ->required();
  genstats->add_option("--marker", genstats_args.marker, "Comment marker");
  genstats->add_option("--model-tag", genstats_args.model_tag, "Row label");
  genstats->add_option("--out", genstats_args.out, "JSON report path");

  try {
    app.parse(argc, argv);
    mix_args.seed_given = mix_seed->count() > 0 || std::getenv("XMTF_SEED");
    if (render->parsed()) cmd_render(render_args);
    if (mix->parsed()) cmd_mix(mix_args);
    if (pack->parsed()) cmd_pack(pack_args);
    if (eval->parsed()) cmd_eval(eval_args);
    if (audit->parsed()) cmd_audit(audit_args);
    if (labeldist->parsed()) cmd_labeldist(labeldist_args);
    if (passk->parsed()) {
      passk_args.counts_given = passk_n->count() > 0;
      cmd_passk(passk_args);
    }
    if (bleu->parsed()) cmd_bleu(bleu_args);
    if (genstats->parsed()) cmd_genstats(genstats_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const xmtf::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const xmtf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
