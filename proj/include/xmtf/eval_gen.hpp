#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xmtf/jsonl.hpp"
#include "xmtf/scorer.hpp"

namespace xmtf {

// Functional-correctness counts for one problem: n samples, c correct.
struct PassAtKInput {
  std::uint64_t n = 0;
  std::uint64_t c = 0;
  std::uint64_t k = 0;
};

// Probability that a uniformly chosen k-subset of the n samples contains at
// least one correct one: 1 - C(n-c, k)/C(n, k). Exact integer arithmetic up
// to n = 62, stable product form beyond; pass@1 is exactly c/n.
double pass_at_k(const PassAtKInput& inp);

// Mean pass@k over per-problem (n, c) counts.
double mean_pass_at_k(
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& problems,
    std::uint64_t k);

struct BleuResult {
  double bleu = 0.0;
  std::vector<double> precisions;  // modified n-gram precision per order
  double brevity_penalty = 1.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  std::size_t max_order = 4;
  double smoothing = 0.0;
};

// Corpus BLEU over whitespace-tokenized text. Unsmoothed by default: any
// zero precision zeroes the score. A positive smoothing value is added to
// numerator and denominator for orders >= 2. Reference length uses the
// closest reference (ties to the shorter one).
BleuResult corpus_bleu(
    const std::vector<std::string>& hypotheses,
    const std::vector<std::vector<std::string>>& reference_lists,
    std::size_t max_order = 4, double smoothing = 0.0);

// Generation with EOS suppressed for the first min_new_tokens tokens. With
// min_new_tokens == 0 this is exactly scorer.generate. Otherwise the scorer
// must support stepwise generation.
std::string generate_with_min_tokens(Scorer& scorer, const std::string& context,
                                     const GenParams& params);

struct GenStats {
  double avg_chars = 0.0;            // mean Unicode code points per output
  double avg_comment_markers = 0.0;  // mean count of comment lines per output
  std::size_t count = 0;
  bool empty = true;
};

// A line counts as a comment when its first non-blank characters start with
// the marker.
GenStats generation_stats(const std::vector<std::string>& outputs,
                          const std::string& comment_marker = "#");

json to_json(const BleuResult& result);
json to_json(const GenStats& stats);

// One model per row, one pass@k column per requested k.
struct PassRow {
  std::string model;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> problems;  // (n, c)
};
std::string render_pass_table(const std::vector<PassRow>& rows,
                              const std::vector<std::uint64_t>& ks);

// Characters / comment-marker averages, one model per row.
std::string render_genstats_table(
    const std::vector<std::pair<std::string, GenStats>>& rows);

}  // namespace xmtf
