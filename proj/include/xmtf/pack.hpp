#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "xmtf/template.hpp"
#include "xmtf/tokenizer.hpp"

namespace xmtf {

// How the tokenized input and target of one example are joined in a decoder
// training stream. ENCODER_DECODER keeps them disjoint (inputs feed the
// encoder, so no separator is injected).
enum class SeparatorPolicy { SPACE, EOS_TOKEN, NEW_SPECIAL, ENCODER_DECODER };

std::string_view to_string(SeparatorPolicy p);
SeparatorPolicy separator_policy_from_string(std::string_view s);

enum class AttentionPolicy : std::uint8_t {
  CAUSAL = 0,
  PREFIX_NONCAUSAL = 1,  // bidirectional over each segment's input span
};

std::string_view to_string(AttentionPolicy p);
AttentionPolicy attention_policy_from_string(std::string_view s);

struct SerializedPair {
  // input_ids ends with the separator token under EOS_TOKEN / NEW_SPECIAL;
  // under SPACE the separating space is tokenized into the input side.
  std::vector<std::uint32_t> input_ids;
  std::vector<std::uint32_t> target_ids;
  SeparatorPolicy policy = SeparatorPolicy::SPACE;

  std::size_t total_length() const {
    return input_ids.size() + target_ids.size();
  }
};

SerializedPair serialize_pair(const RenderedExample& ex, Tokenizer& tok,
                              SeparatorPolicy policy);

// One training row. The three parallel lists share one length <= L_max;
// segment_ids are 1-based and contiguous; prefix_lengths holds each
// segment's input length (loss-masked span).
struct PackedSequence {
  std::vector<std::uint32_t> token_ids;
  std::vector<double> loss_weights;
  std::vector<std::uint16_t> segment_ids;
  AttentionPolicy attention = AttentionPolicy::CAUSAL;
  std::vector<std::uint32_t> prefix_lengths;

  std::size_t segment_count() const { return prefix_lengths.size(); }
};

struct PackStats {
  std::uint64_t pairs_seen = 0;
  std::uint64_t pairs_packed = 0;
  std::uint64_t skipped = 0;  // pairs longer than L_max
  std::uint64_t sequences = 0;
  std::uint64_t tokens_emitted = 0;
  std::uint32_t l_max = 0;

  double fill_ratio() const {
    if (sequences == 0) return 0.0;
    return static_cast<double>(tokens_emitted) /
           (static_cast<double>(sequences) * static_cast<double>(l_max));
  }
};

// Greedy first-fit in arrival order: a pair joins the open sequence if it
// fits, otherwise the open sequence is emitted and a new one started. Pairs
// longer than L_max are skipped and counted, never split.
class Packer {
 public:
  Packer(std::uint32_t l_max, AttentionPolicy attention);

  // Returns a completed sequence whenever the incoming pair forces an emit.
  std::optional<PackedSequence> add(const SerializedPair& pair);

  // Flushes the open sequence, if any.
  std::optional<PackedSequence> finish();

  const PackStats& stats() const { return stats_; }

 private:
  void append_segment(const SerializedPair& pair);

  std::uint32_t l_max_;
  AttentionPolicy attention_;
  PackedSequence open_;
  PackStats stats_;
};

// Recomputes loss weights from segment boundaries: input positions weigh 0,
// each token of a length-T target weighs 1/T.
void assign_loss_weights(PackedSequence& seq);

std::vector<PackedSequence> pack(const std::vector<SerializedPair>& pairs,
                                 std::uint32_t l_max,
                                 AttentionPolicy attention, PackStats* stats);

}  // namespace xmtf
