#include "xmtf/scorer.hpp"

#include "xmtf/error.hpp"

namespace xmtf {

void validate(const GenParams& params) {
  if (params.min_new_tokens > params.max_new_tokens) {
    throw ValidationError("min_new_tokens exceeds max_new_tokens");
  }
  if (params.temperature < 0.0) {
    throw ValidationError("temperature must be >= 0");
  }
}

std::string StepwiseGenerator::detokenize(
    const std::vector<std::string>& tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> generate_tokens(StepwiseGenerator& gen,
                                         const std::string& context,
                                         const GenParams& params) {
  validate(params);
  std::vector<std::string> generated;
  while (generated.size() < params.max_new_tokens) {
    const bool allow_eos = generated.size() >= params.min_new_tokens;
    std::optional<std::string> token =
        gen.next_token(context, generated, allow_eos, params);
    if (!token) {
      if (!allow_eos) {
        throw ScorerError("generator emitted EOS while suppressed");
      }
      break;
    }
    generated.push_back(std::move(*token));
    if (generated.size() >= params.min_new_tokens &&
        !params.stop_sequences.empty()) {
      const std::string text = gen.detokenize(generated);
      bool stop = false;
      for (const std::string& s : params.stop_sequences) {
        if (!s.empty() && text.size() >= s.size() &&
            text.compare(text.size() - s.size(), s.size(), s) == 0) {
          stop = true;
          break;
        }
      }
      if (stop) break;
    }
  }
  return generated;
}

std::string generate_text(StepwiseGenerator& gen, const std::string& context,
                          const GenParams& params) {
  return gen.detokenize(generate_tokens(gen, context, params));
}

}  // namespace xmtf
