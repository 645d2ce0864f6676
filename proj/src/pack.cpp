#include "xmtf/pack.hpp"

#include <algorithm>

#include "xmtf/error.hpp"

namespace xmtf {

std::string_view to_string(SeparatorPolicy p) {
  switch (p) {
    case SeparatorPolicy::SPACE: return "space";
    case SeparatorPolicy::EOS_TOKEN: return "eos";
    case SeparatorPolicy::NEW_SPECIAL: return "new_special";
    case SeparatorPolicy::ENCODER_DECODER: return "encoder_decoder";
  }
  return "space";
}

SeparatorPolicy separator_policy_from_string(std::string_view s) {
  if (s == "space") return SeparatorPolicy::SPACE;
  if (s == "eos") return SeparatorPolicy::EOS_TOKEN;
  if (s == "new_special") return SeparatorPolicy::NEW_SPECIAL;
  if (s == "encoder_decoder") return SeparatorPolicy::ENCODER_DECODER;
  throw ValidationError("unknown separator policy '" + std::string(s) + "'");
}

std::string_view to_string(AttentionPolicy p) {
  return p == AttentionPolicy::CAUSAL ? "causal" : "prefix";
}

AttentionPolicy attention_policy_from_string(std::string_view s) {
  if (s == "causal") return AttentionPolicy::CAUSAL;
  if (s == "prefix") return AttentionPolicy::PREFIX_NONCAUSAL;
  throw ValidationError("unknown attention policy '" + std::string(s) + "'");
}

SerializedPair serialize_pair(const RenderedExample& ex, Tokenizer& tok,
                              SeparatorPolicy policy) {
  if (ex.input_text.empty() || ex.target_text.empty()) {
    throw ValidationError("serialize_pair requires non-empty input and target");
  }
  SerializedPair pair;
  pair.policy = policy;
  switch (policy) {
    case SeparatorPolicy::SPACE: {
      pair.input_ids = tok.encode(ex.input_text + " ");
      pair.target_ids = tok.encode(ex.target_text);
      // The recorded boundary must be a true split of the joint stream.
      std::vector<std::uint32_t> joint =
          tok.encode(ex.input_text + " " + ex.target_text);
      if (joint.size() != pair.total_length() ||
          !std::equal(pair.input_ids.begin(), pair.input_ids.end(),
                      joint.begin()) ||
          !std::equal(pair.target_ids.begin(), pair.target_ids.end(),
                      joint.begin() + pair.input_ids.size())) {
        throw TokenizerError(
            "tokenizer does not split cleanly at the space boundary");
      }
      break;
    }
    case SeparatorPolicy::EOS_TOKEN:
      pair.input_ids = tok.encode(ex.input_text);
      pair.input_ids.push_back(tok.eos_id());
      pair.target_ids = tok.encode(ex.target_text);
      break;
    case SeparatorPolicy::NEW_SPECIAL:
      pair.input_ids = tok.encode(ex.input_text);
      pair.input_ids.push_back(tok.separator_id());
      pair.target_ids = tok.encode(ex.target_text);
      break;
    case SeparatorPolicy::ENCODER_DECODER:
      pair.input_ids = tok.encode(ex.input_text);
      pair.target_ids = tok.encode(ex.target_text);
      break;
  }
  if (pair.target_ids.empty()) {
    throw TokenizerError("target tokenized to zero tokens");
  }
  return pair;
}

Packer::Packer(std::uint32_t l_max, AttentionPolicy attention)
    : l_max_(l_max), attention_(attention) {
  if (l_max < 2) throw ValidationError("L_max must be >= 2");
  stats_.l_max = l_max;
  open_.attention = attention;
}

void Packer::append_segment(const SerializedPair& pair) {
  std::uint16_t segment = static_cast<std::uint16_t>(open_.segment_count() + 1);
  const double target_weight =
      1.0 / static_cast<double>(pair.target_ids.size());
  for (std::uint32_t id : pair.input_ids) {
    open_.token_ids.push_back(id);
    open_.loss_weights.push_back(0.0);
    open_.segment_ids.push_back(segment);
  }
  for (std::uint32_t id : pair.target_ids) {
    open_.token_ids.push_back(id);
    open_.loss_weights.push_back(target_weight);
    open_.segment_ids.push_back(segment);
  }
  open_.prefix_lengths.push_back(
      static_cast<std::uint32_t>(pair.input_ids.size()));
}

std::optional<PackedSequence> Packer::add(const SerializedPair& pair) {
  ++stats_.pairs_seen;
  if (pair.total_length() > l_max_) {
    ++stats_.skipped;
    return std::nullopt;
  }
  std::optional<PackedSequence> emitted;
  // Segment ids are u16 in the shard format; emit early in the (degenerate)
  // case of 65535 open segments.
  if (open_.token_ids.size() + pair.total_length() > l_max_ ||
      open_.segment_count() == 0xFFFF) {
    if (!open_.token_ids.empty()) {
      emitted = std::move(open_);
      open_ = PackedSequence{};
      open_.attention = attention_;
      ++stats_.sequences;
      stats_.tokens_emitted += emitted->token_ids.size();
    }
  }
  append_segment(pair);
  ++stats_.pairs_packed;
  return emitted;
}

std::optional<PackedSequence> Packer::finish() {
  if (open_.token_ids.empty()) return std::nullopt;
  PackedSequence seq = std::move(open_);
  open_ = PackedSequence{};
  open_.attention = attention_;
  ++stats_.sequences;
  stats_.tokens_emitted += seq.token_ids.size();
  return seq;
}

void assign_loss_weights(PackedSequence& seq) {
  seq.loss_weights.assign(seq.token_ids.size(), 0.0);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < seq.prefix_lengths.size(); ++s) {
    std::size_t len = 0;
    while (pos + len < seq.segment_ids.size() &&
           seq.segment_ids[pos + len] == s + 1) {
      ++len;
    }
    std::size_t prefix = seq.prefix_lengths[s];
    if (prefix > len) {
      throw ValidationError("prefix length exceeds segment length");
    }
    std::size_t target_len = len - prefix;
    if (target_len == 0) {
      throw ValidationError("segment without target tokens");
    }
    const double w = 1.0 / static_cast<double>(target_len);
    for (std::size_t i = prefix; i < len; ++i) seq.loss_weights[pos + i] = w;
    pos += len;
  }
  if (pos != seq.token_ids.size()) {
    throw ValidationError("segment ids are not contiguous");
  }
}

std::vector<PackedSequence> pack(const std::vector<SerializedPair>& pairs,
                                 std::uint32_t l_max,
                                 AttentionPolicy attention, PackStats* stats) {
  Packer packer(l_max, attention);
  std::vector<PackedSequence> out;
  for (const SerializedPair& pair : pairs) {
    if (auto seq = packer.add(pair)) out.push_back(std::move(*seq));
  }
  if (auto seq = packer.finish()) out.push_back(std::move(*seq));
  if (stats != nullptr) *stats = packer.stats();
  return out;
}

}  // namespace xmtf
