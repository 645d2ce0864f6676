#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xmtf/jsonl.hpp"
#include "xmtf/scorer.hpp"
#include "xmtf/template.hpp"
#include "xmtf/tokenizer.hpp"

namespace xmtf {

// One evaluation split: a handful of prompts (typically 5) applied to every
// record. The gold option index lives in `label_field`.
struct EvalTask {
  std::string dataset;
  std::string language;  // BCP-47
  std::vector<PromptTemplate> prompts;
  std::vector<Record> records;
  std::string label_field = "label";
};

struct EvalOptions {
  bool length_normalize = false;
  std::string tokenizer = "whitespace";  // consulted only when normalizing
  std::size_t jobs = 1;  // scorer must be thread-safe when > 1
};

struct PromptAccuracy {
  std::string prompt_name;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::string language;
  std::vector<PromptAccuracy> per_prompt;
  double median_accuracy = 0.0;
  double max_accuracy = 0.0;
  double min_accuracy = 0.0;
  // Mean of 1/num_options over every scored (prompt, record) pair; equals
  // the per-record mean when all prompts share an option count.
  double random_baseline = 0.0;
  std::size_t num_records = 0;
  bool length_normalized = false;
};

// Argmax of scorer log-likelihood over candidate continuations. With
// length_normalize each score is divided by the candidate's token count
// under `tok` (required in that mode). Ties go to the lowest index.
std::size_t rank_classify(Scorer& scorer, const std::string& context,
                          const std::vector<std::string>& options,
                          bool length_normalize = false,
                          Tokenizer* tok = nullptr);

// Candidate continuations for one (prompt, record): when the target carries
// a Choices[...] reference, the target is re-rendered once per choice
// index; otherwise the answer choices themselves are the candidates.
std::vector<std::string> build_options(const PromptTemplate& tpl,
                                       const Record& record);

// 0-based gold option index from the label field; must be < num_options.
std::size_t gold_index(const Record& record, const std::string& label_field,
                       std::size_t num_options);

// Median with the usual mean-of-middle-two convention for even counts.
double median_of(std::vector<double> values);

EvalReport evaluate_task(Scorer& scorer, const EvalTask& task,
                         const EvalOptions& options = {});

// The same records evaluated under each variant's prompt set; record lists
// must be identical across variants.
std::map<PromptVariant, EvalReport> compare_prompt_variants(
    Scorer& scorer, const std::map<PromptVariant, EvalTask>& tasks,
    const EvalOptions& options = {});

json to_json(const EvalReport& report);

// Rows are task x prompt-variant; the single score column (labelled with
// model_tag) holds "median / max" percent accuracies.
std::string render_variant_table(
    const std::map<PromptVariant, EvalReport>& reports,
    const std::string& model_tag);

// Task file: JSON object with dataset, language, optional label_field,
// prompts (inline array) or prompts_path, and records (inline array of
// objects) or records_path (JSON-lines). Relative paths resolve against
// the task file's directory.
EvalTask load_eval_task(const std::filesystem::path& path);

}  // namespace xmtf
