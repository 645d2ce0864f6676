#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xmtf/jsonl.hpp"

namespace xmtf {

struct LidResult {
  std::string language;  // BCP-47
  double confidence = 0.0;
};

// Sentence-level language identification. Implementations must be
// deterministic and safe for concurrent identify() calls.
class LanguageIdentifier {
 public:
  virtual ~LanguageIdentifier() = default;
  virtual LidResult identify(const std::string& sentence) const = 0;
};

// Exact-sentence lookup with a default; optionally throws LidError on a
// miss so error counting can be exercised.
class TableLanguageIdentifier final : public LanguageIdentifier {
 public:
  TableLanguageIdentifier() = default;
  explicit TableLanguageIdentifier(std::map<std::string, LidResult> entries,
                                   LidResult fallback = {"und", 0.0},
                                   bool throw_on_miss = false);

  void add(const std::string& sentence, const std::string& language,
           double confidence = 1.0);

  LidResult identify(const std::string& sentence) const override;

 private:
  std::map<std::string, LidResult> entries_;
  LidResult fallback_{"und", 0.0};
  bool throw_on_miss_ = false;
};

// Votes by Unicode script range (Latin -> en, Cyrillic -> ru, Greek -> el,
// Thai -> th, Han -> zh, kana -> ja, ...); confidence is the winning
// script's share of the votes. A rough stand-in for a real identifier, with
// the same interface shape.
class ScriptLanguageIdentifier final : public LanguageIdentifier {
 public:
  LidResult identify(const std::string& sentence) const override;
};

// Splits on sentence terminators (. ! ? and their fullwidth forms, plus
// newline); the ASCII ones only end a sentence when followed by whitespace
// or end of text. Sentences with fewer than 3 non-space characters are
// dropped.
std::vector<std::string> split_sentences(const std::string& text);

struct AuditDoc {
  std::string meta_language;
  std::string text;
};

struct AuditOptions {
  double sample_rate = 1.0;  // Bernoulli per document
  std::uint64_t seed = 0;
  double confidence_threshold = 0.7;  // below it, sentences tally as "und"
  std::size_t jobs = 1;
};

struct AuditReport {
  // meta language -> detected language -> sentence count.
  std::map<std::string, std::map<std::string, std::uint64_t>> matrix;
  // Fraction of classified sentences per detected language ("und"
  // included); sums to 1.
  std::map<std::string, double> detected_fractions;
  double sample_rate = 1.0;
  double sample_fraction = 0.0;  // realized docs_sampled / docs_total
  std::uint64_t seed = 0;
  double confidence_threshold = 0.7;
  std::uint64_t docs_total = 0;
  std::uint64_t docs_sampled = 0;
  std::uint64_t sentences_classified = 0;
  std::uint64_t lid_errors = 0;
  std::optional<std::uint64_t> corpus_total_tokens;
  std::map<std::string, std::uint64_t> extrapolated_tokens;
};

// Seeded Bernoulli document sample, sentence split, identify, tally.
// Identifier failures are counted, not fatal. Deterministic for a fixed
// (docs, seed, rate), independent of jobs.
AuditReport audit_corpus(const std::vector<AuditDoc>& docs,
                         const LanguageIdentifier& lid,
                         const AuditOptions& options = {});

// Token estimate per detected language: fraction x corpus_total_tokens,
// rounded to nearest. Fills the report's extrapolation fields and returns
// the map. Inherits the assumption that a language's token fraction equals
// its sentence fraction.
std::map<std::string, std::uint64_t> extrapolate_tokens(
    AuditReport& report, std::uint64_t corpus_total_tokens);

// Edit distance over Unicode scalar values; O(|a|*|b|) time, O(min) memory.
std::size_t levenshtein(const std::string& a, const std::string& b);

struct LabelSample {
  std::string language;
  std::string label;  // entailment | neutral | contradiction
  std::string premise;
  std::string hypothesis;
};

struct LabelCell {
  double mean_distance = 0.0;
  std::uint64_t count = 0;
};

struct LabelDistanceReport {
  // language -> label -> cell.
  std::map<std::string, std::map<std::string, LabelCell>> cells;
};

extern const std::vector<std::string> kNliLabels;

LabelDistanceReport label_distance_report(const std::vector<LabelSample>& samples,
                                          std::size_t jobs = 1);

// Corpus file: JSON-lines of {"meta_language": ..., "text": ...}.
std::vector<AuditDoc> load_audit_docs(const std::filesystem::path& path);

// Sample file: JSON-lines of {"language", "label", "premise", "hypothesis"}.
std::vector<LabelSample> load_label_samples(const std::filesystem::path& path);

json to_json(const AuditReport& report);
json to_json(const LabelDistanceReport& report);

// Language-composition table, largest fraction first.
std::string render_fraction_table(const AuditReport& report);

// Mean premise/hypothesis distance per language x label.
std::string render_label_distance_table(const LabelDistanceReport& report);

}  // namespace xmtf
