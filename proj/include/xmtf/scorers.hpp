#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xmtf/jsonl.hpp"
#include "xmtf/scorer.hpp"

namespace xmtf {

// Log-likelihoods from an explicit lookup table; pairs absent from the
// table fall back to a fixed default. Generation is unsupported.
class TableScorer : public Scorer {
 public:
  explicit TableScorer(double default_ll = -1e9) : default_ll_(default_ll) {}

  void set(const std::string& context, const std::string& continuation,
           double ll);

  double loglikelihood(const std::string& context,
                       const std::string& continuation) override;
  std::string generate(const std::string& context,
                       const GenParams& params) override;

  // {"default": -20.0, "entries": [{"context": ..., "continuation": ...,
  //  "loglikelihood": ...}, ...]}
  static TableScorer from_json(const json& config);
  static TableScorer load(const std::string& path);

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  double default_ll_;
};

// Character-level add-alpha n-gram model. Tokens are single Unicode code
// points with ASCII whitespace dropped, and the vocabulary is exactly the
// set of tokens observed in the fitted corpus. For every history the
// probabilities over that vocabulary sum to one; a token outside the
// vocabulary still receives the raw alpha mass, on top of that total.
class NGramScorer : public Scorer, public StepwiseGenerator {
 public:
  NGramScorer(std::size_t order, double alpha);

  void fit(const std::vector<std::string>& corpus);

  double loglikelihood(const std::string& context,
                       const std::string& continuation) override;
  std::string generate(const std::string& context,
                       const GenParams& params) override;

  std::optional<std::string> next_token(const std::string& context,
                                        const std::vector<std::string>& generated,
                                        bool allow_eos,
                                        const GenParams& params) override;
  std::string detokenize(const std::vector<std::string>& tokens) const override;

  std::size_t order() const { return order_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  // P(token | history); history longer than order-1 is clipped from the left.
  double token_probability(const std::vector<std::string>& history,
                           const std::string& token) const;

  // Distribution over the vocabulary in lexicographic token order.
  std::vector<std::pair<std::string, double>> next_distribution(
      const std::vector<std::string>& history) const;

  static std::vector<std::string> tokenize(const std::string& text);

 private:
  std::string history_key(const std::vector<std::string>& history) const;

  std::size_t order_;
  double alpha_;
  std::set<std::string> vocab_;
  std::map<std::string, std::map<std::string, std::uint64_t>> counts_;
  std::map<std::string, std::uint64_t> totals_;
};

// Deterministic stand-in for an uninformed model: the score is a pure
// function of (context, continuation, seed), uniform over (0, 1] before the
// log. Useful for chance baselines. Generation is unsupported.
class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed = 0) : seed_(seed) {}

  double loglikelihood(const std::string& context,
                       const std::string& continuation) override;
  std::string generate(const std::string& context,
                       const GenParams& params) override;

 private:
  std::uint64_t seed_;
};

// Emits a fixed token sequence and then end-of-sequence; when EOS is
// suppressed it emits the fallback token instead. Exercises minimum-length
// generation logic.
class FixedSequenceScorer : public Scorer, public StepwiseGenerator {
 public:
  explicit FixedSequenceScorer(std::vector<std::string> tokens,
                               std::string fallback = "<pad>");

  double loglikelihood(const std::string& context,
                       const std::string& continuation) override;
  std::string generate(const std::string& context,
                       const GenParams& params) override;

  std::optional<std::string> next_token(const std::string& context,
                                        const std::vector<std::string>& generated,
                                        bool allow_eos,
                                        const GenParams& params) override;

 private:
  std::vector<std::string> tokens_;
  std::string fallback_;
};

// Convenience trainer for a single text.
NGramScorer ngram_train(const std::string& text, std::size_t order,
                        double alpha);

// Builds a scorer from a JSON description with a "type" discriminator:
// table, ngram, random, or fixed. Paths inside the config are taken as-is.
std::unique_ptr<Scorer> scorer_from_json(const json& config);
std::unique_ptr<Scorer> load_scorer(const std::string& path);

}  // namespace xmtf
