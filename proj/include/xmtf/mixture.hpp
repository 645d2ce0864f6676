#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xmtf/jsonl.hpp"
#include "xmtf/template.hpp"

namespace xmtf {

// Task taxonomy: the twelve inherited clusters plus translation,
// simplification, program synthesis, and miscellaneous code.
enum class TaskCluster {
  Translation,
  Simplification,
  ProgramSynthesis,
  MiscCode,
  QaClosed,
  QaExtractive,
  QaMultipleChoice,
  Paraphrase,
  Sentiment,
  TopicClassification,
  StructureToText,
  Summarization,
  Coreference,
  Nli,
  SentenceCompletion,
  WordSenseDisambiguation,
};

std::string to_string(TaskCluster cluster);
TaskCluster task_cluster_from_string(std::string_view s);

struct DatasetSpec {
  std::string name;
  std::string language;  // BCP-47 tag, or "crosslingual"
  TaskCluster task_cluster = TaskCluster::QaClosed;
  std::filesystem::path records_path;
  std::vector<PromptTemplate> templates;
  bool holdout = false;  // held-out specs never enter a training mixture
};

enum class MixtureVariant { EN_ONLY, EN_PLUS_MT };

std::string to_string(MixtureVariant v);
MixtureVariant mixture_variant_from_string(std::string_view s);

struct MixtureConfig {
  // language -> fraction; must sum to 1. Keys may include "crosslingual".
  std::map<std::string, double> target_proportions;
  std::uint64_t total_examples = 0;
  std::uint64_t seed = 0;
  MixtureVariant variant = MixtureVariant::EN_ONLY;
  std::size_t jobs = 1;
};

struct LanguageCount {
  std::uint64_t count = 0;
  double proportion = 0.0;
};

struct MixtureManifest {
  std::map<std::string, std::uint64_t> per_dataset_counts;
  std::map<std::string, LanguageCount> per_language;
  std::uint64_t total_examples = 0;
  std::uint64_t seed = 0;
  MixtureVariant variant = MixtureVariant::EN_ONLY;
  std::string checksum;  // 64-bit FNV-1a over the emitted JSON-lines, hex
  // Languages present in specs but absent from target_proportions.
  std::vector<std::string> excluded_languages;
  std::string sampling;  // human-readable record of the sampling scheme
};

struct MixtureResult {
  std::vector<RenderedExample> examples;
  MixtureManifest manifest;
};

// Draws total_examples rendered examples whose language distribution
// matches the target: per-language example counts by largest-remainder
// apportionment, then seeded with-replacement draws, uniform by dataset,
// then by template, then by record. Output order is a seeded global
// shuffle. Deterministic for a fixed (specs order, config), regardless of
// jobs. Training variants use EN prompts only (EN_ONLY) or EN plus MT
// (EN_PLUS_MT); human-translated prompts are evaluation-only.
MixtureResult build_mixture(const std::vector<DatasetSpec>& specs,
                            const MixtureConfig& cfg);

// Checksum of an emitted example stream (FNV-1a 64 over the canonical
// JSON-lines serialization), as stored in the manifest.
std::string mixture_checksum(const std::vector<RenderedExample>& examples);

class Translator {
 public:
  virtual ~Translator() = default;

  // One translation per segment, same order and count. Must tolerate
  // concurrent calls. Throws UnsupportedLanguagePairError for pairs the
  // implementation cannot serve.
  virtual std::vector<std::string> translate(
      const std::string& source_lang, const std::string& target_lang,
      const std::vector<std::string>& segments) const = 0;
};

class IdentityTranslator final : public Translator {
 public:
  std::vector<std::string> translate(
      const std::string& source_lang, const std::string& target_lang,
      const std::vector<std::string>& segments) const override;
};

// Uppercases ASCII letters; a visible stand-in translation that leaves the
// masking placeholders (which contain no letters) intact.
class UppercaseTranslator final : public Translator {
 public:
  std::vector<std::string> translate(
      const std::string& source_lang, const std::string& target_lang,
      const std::vector<std::string>& segments) const override;
};

// Lookup by target language then source segment; unknown segments pass
// through unchanged. When strict, an unknown target language throws
// UnsupportedLanguagePairError.
class TableTranslator final : public Translator {
 public:
  // by_target: target language -> (segment -> translation).
  explicit TableTranslator(
      std::map<std::string, std::map<std::string, std::string>> by_target,
      bool strict = false);

  std::vector<std::string> translate(
      const std::string& source_lang, const std::string& target_lang,
      const std::vector<std::string>& segments) const override;

 private:
  std::map<std::string, std::map<std::string, std::string>> by_target_;
  bool strict_;
};

struct MtDerivation {
  std::vector<DatasetSpec> specs;
  // "dataset/template: reason" for every dropped MT sibling.
  std::vector<std::string> dropped;
};

// Adds a machine-translated sibling for every EN template of each
// monolingual non-English spec. {{...}} spans are masked with opaque
// placeholders before translation and restored afterwards, so they survive
// byte-for-byte; answer choices are translated as standalone strings.
// English and crosslingual specs pass through unchanged. Siblings whose
// translation breaks the template are dropped and recorded, not fatal.
MtDerivation derive_mt_variant(const std::vector<DatasetSpec>& specs,
                               const Translator& translator);

// Masking helpers, exposed for tests: replace each {{...}} span with
// [[[k]]] and back.
std::string mask_brace_spans(const std::string& src,
                             std::vector<std::string>& spans_out);
std::string restore_brace_spans(const std::string& masked,
                                const std::vector<std::string>& spans);

// Per-language counts and fractions recomputed from the manifest.
std::map<std::string, LanguageCount> report_language_distribution(
    const MixtureManifest& manifest);

// Language-composition table, largest share first.
std::string render_language_table(const MixtureManifest& manifest);

json to_json(const MixtureManifest& manifest);
MixtureManifest manifest_from_json(const json& j);

// Specs file: JSON array of {name, language, task_cluster, records_path,
// templates (inline) or templates_path, holdout}. Relative paths resolve
// against the specs file's directory.
std::vector<DatasetSpec> load_dataset_specs(const std::filesystem::path& path);

// Mixture output: one RenderedExample JSON object per line.
void write_mixture(const std::filesystem::path& path,
                   const std::vector<RenderedExample>& examples);
std::vector<RenderedExample> read_mixture(const std::filesystem::path& path);

}  // namespace xmtf
