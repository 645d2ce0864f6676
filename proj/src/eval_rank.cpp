#include "xmtf/eval_rank.hpp"

#include <algorithm>
#include <cstdio>

#include "xmtf/error.hpp"
#include "xmtf/parallel.hpp"
#include "xmtf/table.hpp"

namespace xmtf {
namespace {

// A prompt with both sides pre-parsed so per-record work stays cheap.
struct PreparedPrompt {
  const PromptTemplate* tpl = nullptr;
  TemplateAst input_ast;
  TemplateAst target_ast;
  bool choice_target = false;
  std::vector<std::string> choice_fields;
};

PreparedPrompt prepare(const PromptTemplate& tpl) {
  validate_template(tpl);
  PreparedPrompt p;
  p.tpl = &tpl;
  p.input_ast = TemplateAst::parse(tpl.input_src);
  p.target_ast = TemplateAst::parse(tpl.target_src);
  p.choice_target = p.target_ast.has_choice_ref();
  p.choice_fields = p.target_ast.choice_fields();
  return p;
}

std::vector<std::string> options_for(const PreparedPrompt& p,
                                     const Record& record) {
  if (!p.tpl->answer_choices || p.tpl->answer_choices->empty()) {
    throw ValidationError("prompt '" + p.tpl->name +
                          "' has no answer choices; cannot rank-classify");
  }
  const std::vector<std::string>& choices = *p.tpl->answer_choices;
  if (!p.choice_target) return choices;
  std::vector<std::string> options;
  options.reserve(choices.size());
  for (std::size_t idx = 0; idx < choices.size(); ++idx) {
    Record probe = record;
    for (const std::string& field : p.choice_fields) {
      probe[field] = RecordValue(static_cast<std::int64_t>(idx));
    }
    options.push_back(p.target_ast.render(probe, &choices));
  }
  return options;
}

}  // namespace

std::size_t rank_classify(Scorer& scorer, const std::string& context,
                          const std::vector<std::string>& options,
                          bool length_normalize, Tokenizer* tok) {
  if (options.size() < 2) {
    throw ValidationError("rank classification needs at least two options");
  }
  for (const std::string& option : options) {
    if (option.empty()) {
      throw ValidationError("rank classification options must be non-empty");
    }
  }
  if (length_normalize && tok == nullptr) {
    throw ValidationError("length normalization requires a tokenizer");
  }
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    double score;
    try {
      score = scorer.loglikelihood(context, options[i]);
    } catch (const ScorerError& e) {
      throw ScorerError("option " + std::to_string(i) + ": " + e.what());
    }
    if (length_normalize) {
      const std::size_t n = tok->encode(options[i]).size();
      if (n == 0) {
        throw ValidationError("option " + std::to_string(i) +
                              " has no tokens under the active tokenizer");
      }
      score /= static_cast<double>(n);
    }
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

std::vector<std::string> build_options(const PromptTemplate& tpl,
                                       const Record& record) {
  return options_for(prepare(tpl), record);
}

std::size_t gold_index(const Record& record, const std::string& label_field,
                       std::size_t num_options) {
  auto it = record.find(label_field);
  if (it == record.end()) {
    throw ValidationError("record is missing label field '" + label_field +
                          "'");
  }
  const std::optional<std::int64_t> value = it->second.as_int();
  if (!value) {
    throw ValidationError("label field '" + label_field +
                          "' is not an integer");
  }
  if (*value < 0 || static_cast<std::size_t>(*value) >= num_options) {
    throw ValidationError("label index " + std::to_string(*value) +
                          " out of range for " +
                          std::to_string(num_options) + " options");
  }
  return static_cast<std::size_t>(*value);
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

EvalReport evaluate_task(Scorer& scorer, const EvalTask& task,
                         const EvalOptions& options) {
  if (task.records.empty()) throw ValidationError("empty records");
  if (task.prompts.empty()) throw ValidationError("task has no prompts");

  std::vector<PreparedPrompt> prompts;
  prompts.reserve(task.prompts.size());
  for (const PromptTemplate& tpl : task.prompts) prompts.push_back(prepare(tpl));

  std::shared_ptr<Tokenizer> tok;
  if (options.length_normalize) tok = make_tokenizer(options.tokenizer);

  EvalReport report;
  report.dataset = task.dataset;
  report.language = task.language;
  report.num_records = task.records.size();
  report.length_normalized = options.length_normalize;

  const std::size_t n = task.records.size();
  double baseline_sum = 0.0;
  for (const PreparedPrompt& prompt : prompts) {
    std::vector<std::uint8_t> correct(n, 0);
    std::vector<std::size_t> option_counts(n, 0);
    parallel_for(n, options.jobs, [&](std::size_t i) {
      const Record& record = task.records[i];
      const std::vector<std::string> opts = options_for(prompt, record);
      const std::string context =
          prompt.input_ast.render(record, prompt.tpl->answer_choices
                                              ? &*prompt.tpl->answer_choices
                                              : nullptr);
      const std::size_t gold = gold_index(record, task.label_field, opts.size());
      const std::size_t chosen = rank_classify(
          scorer, context, opts, options.length_normalize, tok.get());
      correct[i] = chosen == gold ? 1 : 0;
      option_counts[i] = opts.size();
    });
    PromptAccuracy acc;
    acc.prompt_name = prompt.tpl->name;
    acc.total = n;
    for (std::size_t i = 0; i < n; ++i) {
      acc.correct += correct[i];
      baseline_sum += 1.0 / static_cast<double>(option_counts[i]);
    }
    acc.accuracy = static_cast<double>(acc.correct) / static_cast<double>(n);
    report.per_prompt.push_back(std::move(acc));
  }

  std::vector<double> accuracies;
  accuracies.reserve(report.per_prompt.size());
  for (const PromptAccuracy& acc : report.per_prompt) {
    accuracies.push_back(acc.accuracy);
  }
  report.median_accuracy = median_of(accuracies);
  report.max_accuracy = *std::max_element(accuracies.begin(), accuracies.end());
  report.min_accuracy = *std::min_element(accuracies.begin(), accuracies.end());
  report.random_baseline =
      baseline_sum / static_cast<double>(prompts.size() * n);
  return report;
}

std::map<PromptVariant, EvalReport> compare_prompt_variants(
    Scorer& scorer, const std::map<PromptVariant, EvalTask>& tasks,
    const EvalOptions& options) {
  if (tasks.empty()) throw ValidationError("no variant tasks given");
  const EvalTask& first = tasks.begin()->second;
  for (const auto& [variant, task] : tasks) {
    if (task.records != first.records || task.label_field != first.label_field) {
      throw ValidationError("mismatched records across prompt variants");
    }
  }
  std::map<PromptVariant, EvalReport> reports;
  for (const auto& [variant, task] : tasks) {
    reports.emplace(variant, evaluate_task(scorer, task, options));
  }
  return reports;
}

json to_json(const EvalReport& report) {
  json per_prompt = json::array();
  for (const PromptAccuracy& acc : report.per_prompt) {
    per_prompt.push_back({{"prompt", acc.prompt_name},
                          {"correct", acc.correct},
                          {"total", acc.total},
                          {"accuracy", acc.accuracy}});
  }
  return json{{"dataset", report.dataset},
              {"language", report.language},
              {"num_records", report.num_records},
              {"length_normalized", report.length_normalized},
              {"random_baseline", report.random_baseline},
              {"median_accuracy", report.median_accuracy},
              {"max_accuracy", report.max_accuracy},
              {"min_accuracy", report.min_accuracy},
              {"per_prompt", std::move(per_prompt)}};
}

std::string render_variant_table(
    const std::map<PromptVariant, EvalReport>& reports,
    const std::string& model_tag) {
  TextTable table({"Task", "Variant", model_tag + " median", "max",
                   "baseline"});
  table.set_numeric(2);
  table.set_numeric(3);
  table.set_numeric(4);
  for (const auto& [variant, report] : reports) {
    std::string task = report.dataset;
    if (!report.language.empty()) task += " (" + report.language + ")";
    table.add_row({task, to_string(variant),
                   format_fixed(100.0 * report.median_accuracy, 1),
                   format_fixed(100.0 * report.max_accuracy, 1),
                   format_fixed(100.0 * report.random_baseline, 1)});
  }
  return table.render();
}

EvalTask load_eval_task(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw ValidationError("eval task file must hold a JSON object");
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  EvalTask task;
  if (!doc.contains("dataset")) {
    throw ValidationError("eval task needs a dataset field");
  }
  task.dataset = doc.at("dataset").get<std::string>();
  task.language = doc.value("language", std::string());
  task.label_field = doc.value("label_field", std::string("label"));

  if (doc.contains("prompts")) {
    task.prompts = templates_from_json(doc.at("prompts"));
  } else if (doc.contains("prompts_path")) {
    task.prompts = load_templates(resolve(doc.at("prompts_path").get<std::string>()));
  } else {
    throw ValidationError("eval task needs prompts or prompts_path");
  }

  if (doc.contains("records")) {
    const json& records = doc.at("records");
    if (!records.is_array()) {
      throw ValidationError("eval task records must be an array");
    }
    for (const json& r : records) task.records.push_back(record_from_json(r));
  } else if (doc.contains("records_path")) {
    for (const json& r :
         read_jsonl(resolve(doc.at("records_path").get<std::string>()))) {
      task.records.push_back(record_from_json(r));
    }
  } else {
    throw ValidationError("eval task needs records or records_path");
  }
  return task;
}

}  // namespace xmtf
