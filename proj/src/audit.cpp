#include "xmtf/audit.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>

#include "xmtf/error.hpp"
#include "xmtf/parallel.hpp"
#include "xmtf/rng.hpp"
#include "xmtf/table.hpp"
#include "xmtf/utf8.hpp"

namespace xmtf {
namespace {

bool is_ascii_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v';
}

// Script bucket for one code point; nullptr means "does not vote".
const char* script_of(char32_t cp) {
  if ((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z')) return "en";
  if (cp >= 0x00C0 && cp <= 0x024F) return "en";  // accented Latin
  if (cp >= 0x0370 && cp <= 0x03FF) return "el";
  if (cp >= 0x0400 && cp <= 0x04FF) return "ru";
  if (cp >= 0x0590 && cp <= 0x05FF) return "he";
  if (cp >= 0x0600 && cp <= 0x06FF) return "ar";
  if (cp >= 0x0900 && cp <= 0x097F) return "hi";
  if (cp >= 0x0E00 && cp <= 0x0E7F) return "th";
  if (cp >= 0x1000 && cp <= 0x109F) return "my";
  if (cp >= 0x1100 && cp <= 0x11FF) return "ko";
  if (cp >= 0x3040 && cp <= 0x30FF) return "ja";  // hiragana + katakana
  if (cp >= 0x3400 && cp <= 0x4DBF) return "zh";
  if (cp >= 0x4E00 && cp <= 0x9FFF) return "zh";
  if (cp >= 0xAC00 && cp <= 0xD7AF) return "ko";
  return nullptr;
}

std::string trim_ascii_ws(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  auto blank = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (begin < end && blank(s[begin])) ++begin;
  while (end > begin && blank(s[end - 1])) --end;
  return s.substr(begin, end - begin);
}

}  // namespace

TableLanguageIdentifier::TableLanguageIdentifier(
    std::map<std::string, LidResult> entries, LidResult fallback,
    bool throw_on_miss)
    : entries_(std::move(entries)),
      fallback_(std::move(fallback)),
      throw_on_miss_(throw_on_miss) {}

void TableLanguageIdentifier::add(const std::string& sentence,
                                  const std::string& language,
                                  double confidence) {
  entries_[sentence] = LidResult{language, confidence};
}

LidResult TableLanguageIdentifier::identify(const std::string& sentence) const {
  auto it = entries_.find(sentence);
  if (it != entries_.end()) return it->second;
  if (throw_on_miss_) throw LidError("no table entry for sentence");
  return fallback_;
}

LidResult ScriptLanguageIdentifier::identify(const std::string& sentence) const {
  std::map<std::string, std::uint64_t> votes;
  std::uint64_t total = 0;
  for (char32_t cp : decode_utf8(sentence)) {
    const char* script = script_of(cp);
    if (script == nullptr) continue;
    votes[script] += 1;
    total += 1;
  }
  if (total == 0) return {"und", 0.0};
  std::string best;
  std::uint64_t best_votes = 0;
  for (const auto& [language, count] : votes) {
    if (count > best_votes) {  // map order makes ties lexicographic
      best = language;
      best_votes = count;
    }
  }
  return {best, static_cast<double>(best_votes) / static_cast<double>(total)};
}

std::vector<std::string> split_sentences(const std::string& text) {
  const std::vector<char32_t> cps = decode_utf8(text);
  std::vector<std::string> sentences;
  std::string current;

  auto finalize = [&]() {
    const std::string sentence = trim_ascii_ws(current);
    current.clear();
    if (sentence.empty()) return;
    std::size_t visible = 0;
    for (char32_t cp : decode_utf8(sentence)) {
      if (!is_ascii_space(cp)) ++visible;
    }
    if (visible >= 3) sentences.push_back(sentence);
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (cp == U'\n') {
      finalize();
      continue;
    }
    current += encode_utf8(cp);
    const bool fullwidth = cp == U'。' || cp == U'！' || cp == U'？';
    const bool ascii_term = cp == U'.' || cp == U'!' || cp == U'?';
    if (fullwidth ||
        (ascii_term && (i + 1 == cps.size() || is_ascii_space(cps[i + 1])))) {
      finalize();
    }
  }
  finalize();
  return sentences;
}

AuditReport audit_corpus(const std::vector<AuditDoc>& docs,
                         const LanguageIdentifier& lid,
                         const AuditOptions& options) {
  if (!(options.sample_rate > 0.0) || options.sample_rate > 1.0) {
    throw ValidationError("sample rate must be in (0, 1]");
  }
  if (options.confidence_threshold < 0.0 || options.confidence_threshold > 1.0) {
    throw ValidationError("confidence threshold must be in [0, 1]");
  }

  AuditReport report;
  report.sample_rate = options.sample_rate;
  report.seed = options.seed;
  report.confidence_threshold = options.confidence_threshold;
  report.docs_total = docs.size();

  // The selection draw is one sequential pass so the chosen set depends
  // only on (docs, seed, rate), never on jobs.
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> sampled;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (uniform_unit(rng) < options.sample_rate) sampled.push_back(i);
  }
  report.docs_sampled = sampled.size();
  report.sample_fraction =
      docs.empty() ? 0.0
                   : static_cast<double>(sampled.size()) /
                         static_cast<double>(docs.size());

  std::mutex merge_mutex;
  parallel_chunks(sampled.size(), options.jobs,
                  [&](std::size_t begin, std::size_t end) {
    std::map<std::string, std::map<std::string, std::uint64_t>> matrix;
    std::uint64_t classified = 0;
    std::uint64_t errors = 0;
    for (std::size_t s = begin; s < end; ++s) {
      const AuditDoc& doc = docs[sampled[s]];
      for (const std::string& sentence : split_sentences(doc.text)) {
        LidResult result;
        try {
          result = lid.identify(sentence);
        } catch (const LidError&) {
          ++errors;
          continue;
        }
        const std::string detected =
            result.confidence < options.confidence_threshold ? "und"
                                                             : result.language;
        matrix[doc.meta_language][detected] += 1;
        ++classified;
      }
    }
    // Integer tallies merge commutatively, so lock order cannot matter.
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (const auto& [meta, row] : matrix) {
      for (const auto& [detected, count] : row) {
        report.matrix[meta][detected] += count;
      }
    }
    report.sentences_classified += classified;
    report.lid_errors += errors;
  });

  if (report.sentences_classified > 0) {
    std::map<std::string, std::uint64_t> per_detected;
    for (const auto& [meta, row] : report.matrix) {
      for (const auto& [detected, count] : row) per_detected[detected] += count;
    }
    for (const auto& [detected, count] : per_detected) {
      report.detected_fractions[detected] =
          static_cast<double>(count) /
          static_cast<double>(report.sentences_classified);
    }
  }
  return report;
}

std::map<std::string, std::uint64_t> extrapolate_tokens(
    AuditReport& report, std::uint64_t corpus_total_tokens) {
  if (corpus_total_tokens == 0) {
    throw ValidationError("corpus token total must be positive");
  }
  report.corpus_total_tokens = corpus_total_tokens;
  report.extrapolated_tokens.clear();
  for (const auto& [language, fraction] : report.detected_fractions) {
    report.extrapolated_tokens[language] = static_cast<std::uint64_t>(
        std::llround(fraction * static_cast<double>(corpus_total_tokens)));
  }
  return report.extrapolated_tokens;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<char32_t> left = decode_utf8(a);
  std::vector<char32_t> right = decode_utf8(b);
  if (left.size() < right.size()) std::swap(left, right);
  std::vector<std::size_t> prev(right.size() + 1);
  std::vector<std::size_t> cur(right.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= left.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= right.size(); ++j) {
      const std::size_t sub =
          prev[j - 1] + (left[i - 1] == right[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[right.size()];
}

const std::vector<std::string> kNliLabels = {"entailment", "neutral",
                                             "contradiction"};

LabelDistanceReport label_distance_report(
    const std::vector<LabelSample>& samples, std::size_t jobs) {
  if (samples.empty()) throw ValidationError("no label samples");
  for (const LabelSample& sample : samples) {
    if (std::find(kNliLabels.begin(), kNliLabels.end(), sample.label) ==
        kNliLabels.end()) {
      throw ValidationError("unknown label '" + sample.label + "'");
    }
  }
  std::vector<std::uint64_t> distances(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    distances[i] = levenshtein(samples[i].premise, samples[i].hypothesis);
  });

  std::map<std::string, std::map<std::string, std::pair<std::uint64_t,
                                                        std::uint64_t>>> sums;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& [sum, count] = sums[samples[i].language][samples[i].label];
    sum += distances[i];
    count += 1;
  }
  LabelDistanceReport report;
  for (const auto& [language, row] : sums) {
    for (const auto& [label, cell] : row) {
      report.cells[language][label] = LabelCell{
          static_cast<double>(cell.first) / static_cast<double>(cell.second),
          cell.second};
    }
  }
  return report;
}

std::vector<AuditDoc> load_audit_docs(const std::filesystem::path& path) {
  std::vector<AuditDoc> docs;
  for (const json& j : read_jsonl(path)) {
    if (!j.is_object() || !j.contains("meta_language") || !j.contains("text")) {
      throw ValidationError("corpus line " + std::to_string(docs.size() + 1) +
                            " needs meta_language and text");
    }
    docs.push_back(AuditDoc{j.at("meta_language").get<std::string>(),
                            j.at("text").get<std::string>()});
  }
  return docs;
}

std::vector<LabelSample> load_label_samples(const std::filesystem::path& path) {
  std::vector<LabelSample> samples;
  for (const json& j : read_jsonl(path)) {
    if (!j.is_object() || !j.contains("language") || !j.contains("label") ||
        !j.contains("premise") || !j.contains("hypothesis")) {
      throw ValidationError(
          "sample line " + std::to_string(samples.size() + 1) +
          " needs language, label, premise, hypothesis");
    }
    samples.push_back(LabelSample{j.at("language").get<std::string>(),
                                  j.at("label").get<std::string>(),
                                  j.at("premise").get<std::string>(),
                                  j.at("hypothesis").get<std::string>()});
  }
  return samples;
}

json to_json(const AuditReport& report) {
  json matrix = json::object();
  for (const auto& [meta, row] : report.matrix) {
    json cells = json::object();
    for (const auto& [detected, count] : row) cells[detected] = count;
    matrix[meta] = std::move(cells);
  }
  json j{{"matrix", std::move(matrix)},
         {"detected_fractions", report.detected_fractions},
         {"sample_rate", report.sample_rate},
         {"sample_fraction", report.sample_fraction},
         {"seed", report.seed},
         {"confidence_threshold", report.confidence_threshold},
         {"docs_total", report.docs_total},
         {"docs_sampled", report.docs_sampled},
         {"sentences_classified", report.sentences_classified},
         {"lid_errors", report.lid_errors}};
  if (report.corpus_total_tokens) {
    j["corpus_total_tokens"] = *report.corpus_total_tokens;
    j["extrapolated_tokens"] = report.extrapolated_tokens;
    j["note"] =
        "token estimates assume each language's token fraction matches its "
        "sentence fraction";
  }
  return j;
}

json to_json(const LabelDistanceReport& report) {
  json cells = json::object();
  for (const auto& [language, row] : report.cells) {
    json labels = json::object();
    for (const auto& [label, cell] : row) {
      labels[label] = {{"mean_distance", cell.mean_distance},
                       {"count", cell.count}};
    }
    cells[language] = std::move(labels);
  }
  return json{{"cells", std::move(cells)}};
}

std::string render_fraction_table(const AuditReport& report) {
  std::map<std::string, std::uint64_t> per_detected;
  for (const auto& [meta, row] : report.matrix) {
    for (const auto& [detected, count] : row) per_detected[detected] += count;
  }
  std::vector<std::pair<std::string, std::uint64_t>> rows(per_detected.begin(),
                                                          per_detected.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const bool extrapolated = !report.extrapolated_tokens.empty();
  std::vector<std::string> header{"Language", "Sentences", "Fraction"};
  if (extrapolated) header.push_back("Est. tokens");
  TextTable table(header);
  table.set_numeric(1);
  table.set_numeric(2);
  if (extrapolated) table.set_numeric(3);
  for (const auto& [language, count] : rows) {
    std::vector<std::string> cells{
        language, std::to_string(count),
        format_percent(report.detected_fractions.at(language), 3)};
    if (extrapolated) {
      const auto it = report.extrapolated_tokens.find(language);
      cells.push_back(std::to_string(
          it == report.extrapolated_tokens.end() ? 0 : it->second));
    }
    table.add_row(std::move(cells));
  }
  return table.render();
}

std::string render_label_distance_table(const LabelDistanceReport& report) {
  TextTable table({"Language", "Entailment", "Neutral", "Contradiction"});
  table.set_numeric(1);
  table.set_numeric(2);
  table.set_numeric(3);
  for (const auto& [language, row] : report.cells) {
    std::vector<std::string> cells{language};
    for (const std::string& label : kNliLabels) {
      auto it = row.find(label);
      cells.push_back(it == row.end() ? "-"
                                      : format_fixed(it->second.mean_distance, 2));
    }
    table.add_row(std::move(cells));
  }
  return table.render();
}

}  // namespace xmtf
