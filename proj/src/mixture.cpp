#include "xmtf/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "xmtf/error.hpp"
#include "xmtf/parallel.hpp"
#include "xmtf/rng.hpp"
#include "xmtf/table.hpp"

namespace xmtf {
namespace {

constexpr double kProportionSumTolerance = 1e-9;

const char* kClusterNames[] = {
    "translation",        "simplification",
    "program_synthesis",  "misc_code",
    "qa_closed",          "qa_extractive",
    "qa_multiple_choice", "paraphrase",
    "sentiment",          "topic_classification",
    "structure_to_text",  "summarization",
    "coreference",        "nli",
    "sentence_completion", "word_sense_disambiguation",
};

std::string primary_subtag(const std::string& language) {
  const std::size_t dash = language.find('-');
  return dash == std::string::npos ? language : language.substr(0, dash);
}

// A spec with its loaded records and the templates usable for a variant.
struct LoadedSpec {
  const DatasetSpec* spec = nullptr;
  std::vector<Record> records;
  std::vector<const PromptTemplate*> templates;
};

bool template_usable(const PromptTemplate& tpl, MixtureVariant variant) {
  switch (tpl.variant) {
    case PromptVariant::EN:
      return true;
    case PromptVariant::MT:
      return variant == MixtureVariant::EN_PLUS_MT;
    case PromptVariant::HT:
      return false;  // human-translated prompts are evaluation-only
  }
  return false;
}

// Largest-remainder apportionment of total over the positive proportions.
std::map<std::string, std::uint64_t> apportion(
    const std::map<std::string, double>& proportions, std::uint64_t total) {
  struct Share {
    std::string language;
    std::uint64_t base;
    double remainder;
  };
  std::vector<Share> shares;
  std::uint64_t assigned = 0;
  for (const auto& [language, p] : proportions) {
    if (p <= 0.0) continue;
    const double exact = p * static_cast<double>(total);
    const std::uint64_t base = static_cast<std::uint64_t>(exact);
    shares.push_back({language, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return a.language < b.language;
  });
  std::uint64_t leftover = total - assigned;
  for (Share& share : shares) {
    if (leftover == 0) break;
    share.base += 1;
    leftover -= 1;
  }
  std::map<std::string, std::uint64_t> counts;
  for (const Share& share : shares) counts[share.language] = share.base;
  return counts;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return std::string(buf);
}

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::vector<std::string> sorted_spans(const std::string& src) {
  std::vector<std::string> spans = TemplateAst::parse(src).brace_spans();
  std::sort(spans.begin(), spans.end());
  return spans;
}

}  // namespace

std::string to_string(TaskCluster cluster) {
  return kClusterNames[static_cast<std::size_t>(cluster)];
}

TaskCluster task_cluster_from_string(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kClusterNames); ++i) {
    if (s == kClusterNames[i]) return static_cast<TaskCluster>(i);
  }
  throw ValidationError("unknown task cluster: " + std::string(s));
}

std::string to_string(MixtureVariant v) {
  return v == MixtureVariant::EN_ONLY ? "en_only" : "en_plus_mt";
}

MixtureVariant mixture_variant_from_string(std::string_view s) {
  if (s == "en_only") return MixtureVariant::EN_ONLY;
  if (s == "en_plus_mt") return MixtureVariant::EN_PLUS_MT;
  throw ValidationError("unknown mixture variant: " + std::string(s));
}

std::string mixture_checksum(const std::vector<RenderedExample>& examples) {
  Fnv1a64 hash;
  for (const RenderedExample& ex : examples) {
    hash.update(to_jsonl_line(ex));
    hash.update_byte('\n');
  }
  return hex64(hash.digest());
}

MixtureResult build_mixture(const std::vector<DatasetSpec>& specs,
                            const MixtureConfig& cfg) {
  if (cfg.total_examples == 0) {
    throw ValidationError("mixture total_examples must be positive");
  }
  double sum = 0.0;
  for (const auto& [language, p] : cfg.target_proportions) {
    if (p < 0.0 || p > 1.0) {
      throw ValidationError("target proportion for '" + language +
                            "' outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProportionSumTolerance) {
    throw ValidationError("target proportions sum to " + std::to_string(sum) +
                          ", expected 1");
  }

  // Holdout specs never reach the draw pools; languages not named in the
  // target distribution are excluded (reported, not fatal).
  std::map<std::string, std::vector<const DatasetSpec*>> by_language;
  std::vector<std::string> excluded;
  std::map<std::string, bool> seen_names;
  for (const DatasetSpec& spec : specs) {
    if (seen_names.count(spec.name)) {
      throw ValidationError("duplicate dataset spec name '" + spec.name + "'");
    }
    seen_names[spec.name] = true;
    if (spec.holdout) continue;
    if (!cfg.target_proportions.count(spec.language)) {
      if (std::find(excluded.begin(), excluded.end(), spec.language) ==
          excluded.end()) {
        excluded.push_back(spec.language);
      }
      continue;
    }
    by_language[spec.language].push_back(&spec);
  }
  std::sort(excluded.begin(), excluded.end());

  const std::map<std::string, std::uint64_t> counts =
      apportion(cfg.target_proportions, cfg.total_examples);

  // Load records and filter templates for every language that will draw.
  std::map<std::string, std::vector<LoadedSpec>> pools;
  for (const auto& [language, count] : counts) {
    auto specs_it = by_language.find(language);
    std::vector<LoadedSpec> pool;
    if (specs_it != by_language.end()) {
      for (const DatasetSpec* spec : specs_it->second) {
        LoadedSpec loaded;
        loaded.spec = spec;
        for (const PromptTemplate& tpl : spec->templates) {
          if (template_usable(tpl, cfg.variant)) loaded.templates.push_back(&tpl);
        }
        if (loaded.templates.empty()) continue;
        for (const json& j : read_jsonl(spec->records_path)) {
          loaded.records.push_back(record_from_json(j));
        }
        if (loaded.records.empty()) continue;
        pool.push_back(std::move(loaded));
      }
    }
    if (pool.empty()) {
      throw ValidationError("empty language '" + language +
                            "': nonzero target proportion but no usable "
                            "non-holdout dataset");
    }
    pools.emplace(language, std::move(pool));
  }

  // One seeded stream per language; languages are generated independently
  // (parallel-safe) and concatenated in sorted language order, so the
  // result does not depend on jobs.
  std::vector<std::string> languages;
  for (const auto& [language, pool] : pools) languages.push_back(language);

  struct LanguageOutput {
    std::vector<RenderedExample> examples;
    std::map<std::string, std::uint64_t> per_dataset;
  };
  std::vector<LanguageOutput> outputs(languages.size());
  parallel_for(languages.size(), cfg.jobs, [&](std::size_t li) {
    const std::string& language = languages[li];
    const std::vector<LoadedSpec>& pool = pools.at(language);
    const std::uint64_t count = counts.at(language);
    LanguageOutput& out = outputs[li];
    out.examples.reserve(count);
    std::mt19937_64 rng(derive_seed(cfg.seed, language));
    for (std::uint64_t i = 0; i < count; ++i) {
      const LoadedSpec& loaded =
          pool[static_cast<std::size_t>(uniform_below(rng, pool.size()))];
      const PromptTemplate& tpl = *loaded.templates[static_cast<std::size_t>(
          uniform_below(rng, loaded.templates.size()))];
      const Record& record = loaded.records[static_cast<std::size_t>(
          uniform_below(rng, loaded.records.size()))];
      out.examples.push_back(render(tpl, record, loaded.spec->language));
      out.per_dataset[loaded.spec->name] += 1;
    }
  });

  MixtureResult result;
  result.examples.reserve(cfg.total_examples);
  for (std::size_t li = 0; li < languages.size(); ++li) {
    LanguageOutput& out = outputs[li];
    result.examples.insert(result.examples.end(),
                           std::make_move_iterator(out.examples.begin()),
                           std::make_move_iterator(out.examples.end()));
    for (const auto& [name, c] : out.per_dataset) {
      result.manifest.per_dataset_counts[name] += c;
    }
  }

  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  seeded_shuffle(result.examples, shuffle_rng);

  MixtureManifest& manifest = result.manifest;
  manifest.total_examples = cfg.total_examples;
  manifest.seed = cfg.seed;
  manifest.variant = cfg.variant;
  manifest.excluded_languages = excluded;
  for (const auto& [language, count] : counts) {
    manifest.per_language[language] = LanguageCount{
        count,
        static_cast<double>(count) / static_cast<double>(cfg.total_examples)};
  }
  manifest.sampling =
      "per-language largest-remainder apportionment; with-replacement draws "
      "uniform by dataset, then template, then record; per-language seeded "
      "substreams; seeded global shuffle";
  manifest.checksum = mixture_checksum(result.examples);
  return result;
}

std::vector<std::string> IdentityTranslator::translate(
    const std::string&, const std::string&,
    const std::vector<std::string>& segments) const {
  return segments;
}

std::vector<std::string> UppercaseTranslator::translate(
    const std::string&, const std::string&,
    const std::vector<std::string>& segments) const {
  std::vector<std::string> out = segments;
  for (std::string& segment : out) {
    for (char& c : segment) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
  }
  return out;
}

TableTranslator::TableTranslator(
    std::map<std::string, std::map<std::string, std::string>> by_target,
    bool strict)
    : by_target_(std::move(by_target)), strict_(strict) {}

std::vector<std::string> TableTranslator::translate(
    const std::string& source_lang, const std::string& target_lang,
    const std::vector<std::string>& segments) const {
  auto it = by_target_.find(target_lang);
  if (it == by_target_.end()) {
    if (strict_) {
      throw UnsupportedLanguagePairError("no translations for " + source_lang +
                                         " -> " + target_lang);
    }
    return segments;
  }
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const std::string& segment : segments) {
    auto entry = it->second.find(segment);
    out.push_back(entry == it->second.end() ? segment : entry->second);
  }
  return out;
}

std::string mask_brace_spans(const std::string& src,
                             std::vector<std::string>& spans_out) {
  spans_out.clear();
  std::string masked;
  const TemplateAst ast = TemplateAst::parse(src);
  for (const TemplateNode& node : ast.nodes()) {
    if (node.kind == TemplateNode::Kind::Literal) {
      masked += node.text;
    } else {
      masked += "[[[" + std::to_string(spans_out.size()) + "]]]";
      spans_out.push_back(node.text);
    }
  }
  return masked;
}

std::string restore_brace_spans(const std::string& masked,
                                const std::vector<std::string>& spans) {
  std::string restored = masked;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const std::string placeholder = "[[[" + std::to_string(k) + "]]]";
    if (count_occurrences(restored, placeholder) != 1) {
      throw TranslationBrokeTemplateError(
          "placeholder " + placeholder +
          " does not appear exactly once after translation");
    }
    restored.replace(restored.find(placeholder), placeholder.size(), spans[k]);
  }
  return restored;
}

MtDerivation derive_mt_variant(const std::vector<DatasetSpec>& specs,
                               const Translator& translator) {
  MtDerivation result;
  result.specs = specs;
  for (DatasetSpec& spec : result.specs) {
    if (primary_subtag(spec.language) == "en" ||
        spec.language == "crosslingual") {
      continue;  // crosslingual prompts stay English; English is a no-op
    }
    std::vector<PromptTemplate> siblings;
    for (const PromptTemplate& tpl : spec.templates) {
      if (tpl.variant != PromptVariant::EN) continue;
      const bool exists =
          std::any_of(spec.templates.begin(), spec.templates.end(),
                      [&tpl](const PromptTemplate& other) {
                        return other.variant == PromptVariant::MT &&
                               other.name == tpl.name;
                      });
      if (exists) continue;  // already derived; keep this idempotent

      try {
        std::vector<std::string> input_spans;
        std::vector<std::string> target_spans;
        std::vector<std::string> segments{
            mask_brace_spans(tpl.input_src, input_spans),
            mask_brace_spans(tpl.target_src, target_spans)};
        if (tpl.answer_choices) {
          segments.insert(segments.end(), tpl.answer_choices->begin(),
                          tpl.answer_choices->end());
        }
        const std::vector<std::string> translated =
            translator.translate("en", spec.language, segments);
        if (translated.size() != segments.size()) {
          throw ValidationError(
              "translator returned " + std::to_string(translated.size()) +
              " segments for " + std::to_string(segments.size()));
        }

        PromptTemplate sibling = tpl;
        sibling.variant = PromptVariant::MT;
        sibling.prompt_language = spec.language;
        sibling.input_src = restore_brace_spans(translated[0], input_spans);
        sibling.target_src = restore_brace_spans(translated[1], target_spans);
        if (tpl.answer_choices) {
          sibling.answer_choices =
              std::vector<std::string>(translated.begin() + 2,
                                       translated.end());
          for (const std::string& choice : *sibling.answer_choices) {
            if (choice.empty()) {
              throw TranslationBrokeTemplateError(
                  "translated answer choice is empty");
            }
          }
        }
        if (sorted_spans(sibling.input_src) != sorted_spans(tpl.input_src) ||
            sorted_spans(sibling.target_src) != sorted_spans(tpl.target_src)) {
          throw TranslationBrokeTemplateError(
              "substitution spans changed under translation");
        }
        validate_template(sibling);
        siblings.push_back(std::move(sibling));
      } catch (const TranslationBrokeTemplateError& e) {
        result.dropped.push_back(spec.name + "/" + tpl.name + ": " + e.what());
      } catch (const TemplateParseError& e) {
        result.dropped.push_back(spec.name + "/" + tpl.name + ": " + e.what());
      }
    }
    spec.templates.insert(spec.templates.end(),
                          std::make_move_iterator(siblings.begin()),
                          std::make_move_iterator(siblings.end()));
  }
  return result;
}

std::map<std::string, LanguageCount> report_language_distribution(
    const MixtureManifest& manifest) {
  if (manifest.total_examples == 0 || manifest.per_language.empty()) {
    throw ValidationError("empty manifest");
  }
  std::map<std::string, LanguageCount> out;
  for (const auto& [language, entry] : manifest.per_language) {
    out[language] = LanguageCount{
        entry.count, static_cast<double>(entry.count) /
                         static_cast<double>(manifest.total_examples)};
  }
  return out;
}

std::string render_language_table(const MixtureManifest& manifest) {
  const std::map<std::string, LanguageCount> dist =
      report_language_distribution(manifest);
  std::vector<std::pair<std::string, LanguageCount>> rows(dist.begin(),
                                                          dist.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.first < b.first;
  });
  TextTable table({"Language", "Examples", "Fraction"});
  table.set_numeric(1);
  table.set_numeric(2);
  for (const auto& [language, entry] : rows) {
    table.add_row({language, std::to_string(entry.count),
                   format_percent(entry.proportion, 2)});
  }
  return table.render();
}

json to_json(const MixtureManifest& manifest) {
  json per_language = json::object();
  for (const auto& [language, entry] : manifest.per_language) {
    per_language[language] = {{"count", entry.count},
                              {"proportion", entry.proportion}};
  }
  return json{{"total_examples", manifest.total_examples},
              {"seed", manifest.seed},
              {"variant", to_string(manifest.variant)},
              {"checksum", manifest.checksum},
              {"per_dataset_counts", manifest.per_dataset_counts},
              {"per_language", std::move(per_language)},
              {"excluded_languages", manifest.excluded_languages},
              {"sampling", manifest.sampling}};
}

MixtureManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  MixtureManifest manifest;
  manifest.total_examples = j.value("total_examples", std::uint64_t{0});
  manifest.seed = j.value("seed", std::uint64_t{0});
  manifest.variant =
      mixture_variant_from_string(j.value("variant", std::string("en_only")));
  manifest.checksum = j.value("checksum", std::string());
  if (j.contains("per_dataset_counts")) {
    for (const auto& [name, count] : j.at("per_dataset_counts").items()) {
      manifest.per_dataset_counts[name] = count.get<std::uint64_t>();
    }
  }
  if (j.contains("per_language")) {
    for (const auto& [language, entry] : j.at("per_language").items()) {
      manifest.per_language[language] =
          LanguageCount{entry.at("count").get<std::uint64_t>(),
                        entry.value("proportion", 0.0)};
    }
  }
  if (j.contains("excluded_languages")) {
    for (const json& language : j.at("excluded_languages")) {
      manifest.excluded_languages.push_back(language.get<std::string>());
    }
  }
  manifest.sampling = j.value("sampling", std::string());
  return manifest;
}

std::vector<DatasetSpec> load_dataset_specs(
    const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_array()) {
    throw ValidationError("dataset specs file must hold a JSON array");
  }
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<DatasetSpec> specs;
  for (const json& j : doc) {
    if (!j.is_object() || !j.contains("name") || !j.contains("language") ||
        !j.contains("task_cluster") || !j.contains("records_path")) {
      throw ValidationError(
          "dataset spec " + std::to_string(specs.size() + 1) +
          " needs name, language, task_cluster, records_path");
    }
    DatasetSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.language = j.at("language").get<std::string>();
    spec.task_cluster =
        task_cluster_from_string(j.at("task_cluster").get<std::string>());
    spec.records_path = resolve(j.at("records_path").get<std::string>());
    spec.holdout = j.value("holdout", false);

    std::vector<PromptTemplate> templates;
    if (j.contains("templates")) {
      templates = templates_from_json(j.at("templates"));
    } else if (j.contains("templates_path")) {
      templates = load_templates(resolve(j.at("templates_path").get<std::string>()));
    } else {
      throw ValidationError("dataset spec '" + spec.name +
                            "' needs templates or templates_path");
    }
    for (PromptTemplate& tpl : templates) {
      if (tpl.dataset == spec.name) spec.templates.push_back(std::move(tpl));
    }
    if (spec.templates.empty()) {
      throw ValidationError("no templates for dataset '" + spec.name + "'");
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

void write_mixture(const std::filesystem::path& path,
                   const std::vector<RenderedExample>& examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const RenderedExample& ex : examples) {
    out << to_jsonl_line(ex) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<RenderedExample> read_mixture(const std::filesystem::path& path) {
  std::vector<RenderedExample> examples;
  for (const json& j : read_jsonl(path)) {
    examples.push_back(rendered_example_from_json(j));
  }
  return examples;
}

}  // namespace xmtf
