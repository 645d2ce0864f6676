#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace xmtf {

struct GenParams {
  std::size_t max_new_tokens = 64;
  std::size_t min_new_tokens = 0;  // EOS is suppressed below this count
  double temperature = 0.0;        // 0 = greedy
  std::size_t top_k = 0;           // 0 = unrestricted
  std::vector<std::string> stop_sequences;
  std::uint64_t seed = 0;
};

void validate(const GenParams& params);

// Conditional log-likelihood and generation provider. Implementations must
// be deterministic for fixed inputs and finite for non-empty continuations.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual double loglikelihood(const std::string& context,
                               const std::string& continuation) = 0;

  virtual std::string generate(const std::string& context,
                               const GenParams& params) = 0;
};

// Token-at-a-time generation. nullopt means end-of-sequence and is only
// legal when allow_eos is set; with allow_eos unset the implementation must
// produce its best non-EOS token instead.
class StepwiseGenerator {
 public:
  virtual ~StepwiseGenerator() = default;

  virtual std::optional<std::string> next_token(
      const std::string& context, const std::vector<std::string>& generated,
      bool allow_eos, const GenParams& params) = 0;

  // Joins emitted tokens into the output string. Word-level generators keep
  // the default; character-level ones concatenate.
  virtual std::string detokenize(const std::vector<std::string>& tokens) const;
};

// Runs the stepwise loop: honors max_new_tokens, suppresses EOS until
// min_new_tokens have been emitted, and applies stop sequences only after
// the minimum is met.
std::vector<std::string> generate_tokens(StepwiseGenerator& gen,
                                         const std::string& context,
                                         const GenParams& params);

std::string generate_text(StepwiseGenerator& gen, const std::string& context,
                          const GenParams& params);

}  // namespace xmtf
