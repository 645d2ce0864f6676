#include "xmtf/eval_gen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "xmtf/error.hpp"
#include "xmtf/table.hpp"
#include "xmtf/utf8.hpp"

namespace xmtf {
namespace {

// Exact C(n, k) for n <= 62 (peak value C(62, 31) fits in 64 bits); the
// running product is kept exact through a 128-bit intermediate.
std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = static_cast<std::uint64_t>(
        static_cast<unsigned __int128>(r) * (n - k + i) / i);
  }
  return r;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

// N-gram multiset; grams are joined with a length-prefixed encoding so
// token boundaries cannot collide.
std::map<std::string, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t order) {
  std::map<std::string, std::size_t> counts;
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < order; ++j) {
      const std::string& t = tokens[i + j];
      key += std::to_string(t.size());
      key.push_back(':');
      key += t;
    }
    counts[key] += 1;
  }
  return counts;
}

}  // namespace

double pass_at_k(const PassAtKInput& inp) {
  if (inp.n == 0) throw ValidationError("pass@k needs n >= 1");
  if (inp.c > inp.n) throw ValidationError("pass@k needs c <= n");
  if (inp.k == 0 || inp.k > inp.n) {
    throw ValidationError("pass@k needs 1 <= k <= n");
  }
  if (inp.c == 0) return 0.0;
  if (inp.c == inp.n) return 1.0;
  if (inp.k > inp.n - inp.c) return 1.0;  // every k-subset hits a correct one
  if (inp.k == 1) {
    return static_cast<double>(inp.c) / static_cast<double>(inp.n);
  }
  if (inp.n <= 62) {
    const std::uint64_t den = binomial_u64(inp.n, inp.k);
    const std::uint64_t miss = binomial_u64(inp.n - inp.c, inp.k);
    return static_cast<double>(den - miss) / static_cast<double>(den);
  }
  double ratio = 1.0;
  for (std::uint64_t i = 0; i < inp.k; ++i) {
    ratio *= static_cast<double>(inp.n - inp.c - i) /
             static_cast<double>(inp.n - i);
  }
  return 1.0 - ratio;
}

double mean_pass_at_k(
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& problems,
    std::uint64_t k) {
  if (problems.empty()) throw ValidationError("pass@k needs at least one problem");
  double sum = 0.0;
  for (const auto& [n, c] : problems) sum += pass_at_k({n, c, k});
  return sum / static_cast<double>(problems.size());
}

BleuResult corpus_bleu(
    const std::vector<std::string>& hypotheses,
    const std::vector<std::vector<std::string>>& reference_lists,
    std::size_t max_order, double smoothing) {
  if (hypotheses.size() != reference_lists.size()) {
    throw ValidationError("length mismatch: " +
                          std::to_string(hypotheses.size()) +
                          " hypotheses vs " +
                          std::to_string(reference_lists.size()) +
                          " reference lists");
  }
  if (max_order < 1) throw ValidationError("BLEU order must be >= 1");
  if (smoothing < 0.0) throw ValidationError("BLEU smoothing must be >= 0");

  BleuResult result;
  result.max_order = max_order;
  result.smoothing = smoothing;

  std::vector<std::size_t> matched(max_order, 0);
  std::vector<std::size_t> total(max_order, 0);

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (reference_lists[i].empty()) {
      throw ValidationError("hypothesis " + std::to_string(i) +
                            " has no references");
    }
    const std::vector<std::string> hyp = split_tokens(hypotheses[i]);
    std::vector<std::vector<std::string>> refs;
    refs.reserve(reference_lists[i].size());
    for (const std::string& r : reference_lists[i]) {
      refs.push_back(split_tokens(r));
    }

    result.hypothesis_length += hyp.size();
    std::size_t best_len = refs[0].size();
    for (const std::vector<std::string>& r : refs) {
      const auto dist = [&](std::size_t len) {
        return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
      };
      if (dist(r.size()) < dist(best_len) ||
          (dist(r.size()) == dist(best_len) && r.size() < best_len)) {
        best_len = r.size();
      }
    }
    result.reference_length += best_len;

    for (std::size_t order = 1; order <= max_order; ++order) {
      const auto hyp_counts = ngram_counts(hyp, order);
      std::map<std::string, std::size_t> ref_max;
      for (const std::vector<std::string>& r : refs) {
        for (const auto& [gram, count] : ngram_counts(r, order)) {
          std::size_t& slot = ref_max[gram];
          slot = std::max(slot, count);
        }
      }
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_max.find(gram);
        if (it != ref_max.end()) {
          matched[order - 1] += std::min(count, it->second);
        }
      }
      if (hyp.size() >= order) total[order - 1] += hyp.size() - order + 1;
    }
  }

  result.precisions.resize(max_order, 0.0);
  bool zero_precision = false;
  for (std::size_t order = 1; order <= max_order; ++order) {
    const double s = order > 1 ? smoothing : 0.0;
    const double num = static_cast<double>(matched[order - 1]) + s;
    const double den = static_cast<double>(total[order - 1]) + s;
    result.precisions[order - 1] = den > 0.0 ? num / den : 0.0;
    if (result.precisions[order - 1] == 0.0) zero_precision = true;
  }

  if (result.hypothesis_length == 0) {
    result.brevity_penalty = 0.0;
  } else if (result.hypothesis_length < result.reference_length) {
    result.brevity_penalty =
        std::exp(1.0 - static_cast<double>(result.reference_length) /
                           static_cast<double>(result.hypothesis_length));
  } else {
    result.brevity_penalty = 1.0;
  }

  if (zero_precision || result.hypothesis_length == 0) {
    result.bleu = 0.0;
    return result;
  }
  double log_sum = 0.0;
  for (double p : result.precisions) log_sum += std::log(p);
  result.bleu = result.brevity_penalty *
                std::exp(log_sum / static_cast<double>(max_order));
  return result;
}

std::string generate_with_min_tokens(Scorer& scorer, const std::string& context,
                                     const GenParams& params) {
  validate(params);
  if (params.min_new_tokens == 0) return scorer.generate(context, params);
  auto* stepwise = dynamic_cast<StepwiseGenerator*>(&scorer);
  if (stepwise == nullptr) {
    throw ScorerError(
        "minimum-token generation needs a stepwise-capable scorer");
  }
  return generate_text(*stepwise, context, params);
}

GenStats generation_stats(const std::vector<std::string>& outputs,
                          const std::string& comment_marker) {
  if (comment_marker.empty()) {
    throw ValidationError("comment marker must be non-empty");
  }
  GenStats stats;
  stats.count = outputs.size();
  stats.empty = outputs.empty();
  if (outputs.empty()) return stats;

  double char_sum = 0.0;
  double comment_sum = 0.0;
  for (const std::string& out : outputs) {
    char_sum += static_cast<double>(count_codepoints(out));
    std::size_t line_start = 0;
    while (line_start <= out.size()) {
      std::size_t line_end = out.find('\n', line_start);
      if (line_end == std::string::npos) line_end = out.size();
      std::size_t p = line_start;
      while (p < line_end && (out[p] == ' ' || out[p] == '\t')) ++p;
      if (line_end - p >= comment_marker.size() &&
          out.compare(p, comment_marker.size(), comment_marker) == 0) {
        comment_sum += 1.0;
      }
      if (line_end == out.size()) break;
      line_start = line_end + 1;
    }
  }
  stats.avg_chars = char_sum / static_cast<double>(outputs.size());
  stats.avg_comment_markers = comment_sum / static_cast<double>(outputs.size());
  return stats;
}

json to_json(const BleuResult& result) {
  return json{{"bleu", result.bleu},
              {"precisions", result.precisions},
              {"brevity_penalty", result.brevity_penalty},
              {"hypothesis_length", result.hypothesis_length},
              {"reference_length", result.reference_length},
              {"max_order", result.max_order},
              {"smoothing", result.smoothing}};
}

json to_json(const GenStats& stats) {
  return json{{"avg_chars", stats.avg_chars},
              {"avg_comment_markers", stats.avg_comment_markers},
              {"count", stats.count},
              {"empty", stats.empty}};
}

std::string render_pass_table(const std::vector<PassRow>& rows,
                              const std::vector<std::uint64_t>& ks) {
  std::vector<std::string> header{"Model"};
  for (std::uint64_t k : ks) header.push_back("pass@" + std::to_string(k));
  TextTable table(header);
  for (std::size_t c = 1; c < header.size(); ++c) table.set_numeric(c);
  for (const PassRow& row : rows) {
    std::vector<std::string> cells{row.model};
    for (std::uint64_t k : ks) {
      cells.push_back(format_fixed(100.0 * mean_pass_at_k(row.problems, k), 2));
    }
    table.add_row(std::move(cells));
  }
  return table.render();
}

std::string render_genstats_table(
    const std::vector<std::pair<std::string, GenStats>>& rows) {
  TextTable table({"Model", "Characters", "Comments"});
  table.set_numeric(1);
  table.set_numeric(2);
  for (const auto& [model, stats] : rows) {
    table.add_row({model, format_fixed(stats.avg_chars, 0),
                   format_fixed(stats.avg_comment_markers, 2)});
  }
  return table.render();
}

}  // namespace xmtf
