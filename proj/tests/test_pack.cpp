#include <doctest.h>

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "xmtf/error.hpp"
#include "xmtf/pack.hpp"
#include "xmtf/rng.hpp"
#include "xmtf/tokenizer.hpp"

using namespace xmtf;

namespace {

// A pair with the requested input/target token counts; ids are arbitrary
// but distinct enough to catch reordering.
SerializedPair make_pair(std::size_t input_len, std::size_t target_len,
                         std::uint32_t base = 1000) {
  SerializedPair pair;
  pair.policy = SeparatorPolicy::ENCODER_DECODER;
  for (std::size_t i = 0; i < input_len; ++i) {
    pair.input_ids.push_back(base + static_cast<std::uint32_t>(i));
  }
  for (std::size_t i = 0; i < target_len; ++i) {
    pair.target_ids.push_back(base + 500 + static_cast<std::uint32_t>(i));
  }
  return pair;
}

RenderedExample make_example(const std::string& input,
                             const std::string& target) {
  RenderedExample ex;
  ex.input_text = input;
  ex.target_text = target;
  ex.language = "en";
  ex.dataset = "d";
  ex.prompt_name = "p";
  return ex;
}

// Tokenizer that swallows the byte after each space; it cannot reproduce
// the input/target split of the joint stream.
class MergingTokenizer final : public Tokenizer {
 public:
  std::vector<std::uint32_t> encode(std::string_view text) override {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == ' ' && i + 1 < text.size()) ++i;  // merge
      ids.push_back(static_cast<unsigned char>(text[i]));
    }
    return ids;
  }
  std::string decode(std::span<const std::uint32_t>) const override {
    return {};
  }
  std::uint32_t eos_id() const override { return 256; }
  std::uint32_t separator_id() const override { return 257; }
  std::uint32_t vocab_size() const override { return 258; }
};

}  // namespace

TEST_CASE("policy names round-trip") {
  for (auto policy :
       {SeparatorPolicy::SPACE, SeparatorPolicy::EOS_TOKEN,
        SeparatorPolicy::NEW_SPECIAL, SeparatorPolicy::ENCODER_DECODER}) {
    CHECK(separator_policy_from_string(to_string(policy)) == policy);
  }
  CHECK_THROWS_AS(separator_policy_from_string("bogus"), ValidationError);
  for (auto policy :
       {AttentionPolicy::CAUSAL, AttentionPolicy::PREFIX_NONCAUSAL}) {
    CHECK(attention_policy_from_string(to_string(policy)) == policy);
  }
  CHECK_THROWS_AS(attention_policy_from_string("bogus"), ValidationError);
}

TEST_CASE("space separator splits the joint token stream") {
  WhitespaceTokenizer tok;
  const RenderedExample ex =
      make_example("Translate to English: Je t'aime.", "I love you.");
  const SerializedPair pair = serialize_pair(ex, tok, SeparatorPolicy::SPACE);
  CHECK(pair.input_ids.size() == 5);
  CHECK(pair.target_ids.size() == 3);
  // The boundary is a true split: re-encoding the joined text reproduces
  // input then target.
  std::vector<std::uint32_t> joint =
      tok.encode("Translate to English: Je t'aime. I love you.");
  REQUIRE(joint.size() == 8);
  std::vector<std::uint32_t> cat = pair.input_ids;
  cat.insert(cat.end(), pair.target_ids.begin(), pair.target_ids.end());
  CHECK(cat == joint);
}

TEST_CASE("space separator rejects tokenizers that merge across it") {
  MergingTokenizer tok;
  const RenderedExample ex = make_example("ab", "cd");
  CHECK_THROWS_AS(serialize_pair(ex, tok, SeparatorPolicy::SPACE),
                  TokenizerError);
}

TEST_CASE("eos and new-special separators append one marker token") {
  WhitespaceTokenizer tok;
  const RenderedExample ex = make_example("a b", "c");
  const SerializedPair eos =
      serialize_pair(ex, tok, SeparatorPolicy::EOS_TOKEN);
  REQUIRE(eos.input_ids.size() == 3);
  CHECK(eos.input_ids.back() == tok.eos_id());

  const SerializedPair sep =
      serialize_pair(ex, tok, SeparatorPolicy::NEW_SPECIAL);
  REQUIRE(sep.input_ids.size() == 3);
  CHECK(sep.input_ids.back() == tok.separator_id());

  const SerializedPair enc =
      serialize_pair(ex, tok, SeparatorPolicy::ENCODER_DECODER);
  CHECK(enc.input_ids.size() == 2);
  CHECK(enc.target_ids.size() == 1);
}

TEST_CASE("serialize_pair validates its inputs") {
  WhitespaceTokenizer tok;
  CHECK_THROWS_AS(
      serialize_pair(make_example("", "t"), tok, SeparatorPolicy::SPACE),
      ValidationError);
  CHECK_THROWS_AS(
      serialize_pair(make_example("i", ""), tok, SeparatorPolicy::SPACE),
      ValidationError);
  // A target of pure whitespace tokenizes to nothing.
  CHECK_THROWS_AS(
      serialize_pair(make_example("i", " "), tok, SeparatorPolicy::EOS_TOKEN),
      TokenizerError);
}

TEST_CASE("a 4-3-5 stream at capacity ten packs as [[4,3],[5]]") {
  const std::vector<SerializedPair> pairs = {
      make_pair(2, 2), make_pair(1, 2), make_pair(2, 3)};
  PackStats stats;
  const std::vector<PackedSequence> seqs =
      pack(pairs, 10, AttentionPolicy::CAUSAL, &stats);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].token_ids.size() == 7);
  CHECK(seqs[0].segment_count() == 2);
  CHECK(seqs[0].segment_ids.front() == 1);
  CHECK(seqs[0].segment_ids.back() == 2);
  CHECK(seqs[1].token_ids.size() == 5);
  CHECK(seqs[1].segment_count() == 1);
  CHECK(stats.pairs_seen == 3);
  CHECK(stats.pairs_packed == 3);
  CHECK(stats.skipped == 0);
  CHECK(stats.sequences == 2);
  CHECK(stats.tokens_emitted == 12);
  CHECK(stats.fill_ratio() == doctest::Approx(12.0 / 20.0));
}

TEST_CASE("oversized pairs are skipped, never split") {
  const std::vector<SerializedPair> pairs = {
      make_pair(3, 3), make_pair(8, 8), make_pair(2, 2)};
  PackStats stats;
  const std::vector<PackedSequence> seqs =
      pack(pairs, 10, AttentionPolicy::CAUSAL, &stats);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].token_ids.size() == 10);
  CHECK(stats.skipped == 1);
  CHECK(stats.pairs_packed == 2);
  for (const PackedSequence& seq : seqs) {
    CHECK(seq.token_ids.size() <= 10);
  }
}

TEST_CASE("an exactly full pair occupies one sequence") {
  const std::vector<SerializedPair> pairs = {make_pair(5, 5), make_pair(1, 1)};
  const std::vector<PackedSequence> seqs =
      pack(pairs, 10, AttentionPolicy::CAUSAL, nullptr);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].token_ids.size() == 10);
  CHECK(seqs[1].token_ids.size() == 2);
}

TEST_CASE("loss weights are zero on inputs and exactly 1/T on targets") {
  const std::vector<SerializedPair> pairs = {
      make_pair(4, 3), make_pair(1, 7), make_pair(2, 1)};
  const std::vector<PackedSequence> seqs =
      pack(pairs, 64, AttentionPolicy::CAUSAL, nullptr);
  REQUIRE(seqs.size() == 1);
  const PackedSequence& seq = seqs[0];
  std::size_t pos = 0;
  for (const SerializedPair& pair : pairs) {
    for (std::size_t i = 0; i < pair.input_ids.size(); ++i) {
      CHECK(seq.loss_weights[pos++] == 0.0);
    }
    const double expected = 1.0 / static_cast<double>(pair.target_ids.size());
    for (std::size_t i = 0; i < pair.target_ids.size(); ++i) {
      CHECK(seq.loss_weights[pos++] == expected);
    }
  }
  CHECK(pos == seq.loss_weights.size());
}

TEST_CASE("per-segment weights sum to one within 1e-9") {
  std::mt19937_64 rng(2024);
  std::vector<SerializedPair> pairs;
  for (int i = 0; i < 2000; ++i) {
    pairs.push_back(make_pair(1 + uniform_below(rng, 6),
                              1 + uniform_below(rng, 9)));
  }
  const std::vector<PackedSequence> seqs =
      pack(pairs, 96, AttentionPolicy::CAUSAL, nullptr);
  for (const PackedSequence& seq : seqs) {
    for (std::size_t s = 1; s <= seq.segment_count(); ++s) {
      double sum = 0.0;
      for (std::size_t i = 0; i < seq.token_ids.size(); ++i) {
        if (seq.segment_ids[i] == s) sum += seq.loss_weights[i];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("greedy packing replay matches an independent oracle") {
  std::mt19937_64 rng(77);
  const std::uint32_t l_max = 32;
  std::vector<SerializedPair> pairs;
  std::vector<std::size_t> lengths;
  for (int i = 0; i < 5000; ++i) {
    // Lengths 2..40: some exceed L_max and must be skipped.
    const std::size_t input = 1 + uniform_below(rng, 20);
    const std::size_t target = 1 + uniform_below(rng, 20);
    pairs.push_back(make_pair(input, target,
                              static_cast<std::uint32_t>(i * 100)));
    lengths.push_back(input + target);
  }
  PackStats stats;
  const std::vector<PackedSequence> seqs =
      pack(pairs, l_max, AttentionPolicy::CAUSAL, &stats);

  // Oracle: one open bin, flush when the next kept pair does not fit.
  std::vector<std::vector<std::size_t>> expected;
  std::vector<std::size_t> open;
  std::size_t open_len = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] > l_max) {
      ++skipped;
      continue;
    }
    if (open_len + lengths[i] > l_max && !open.empty()) {
      expected.push_back(open);
      open.clear();
      open_len = 0;
    }
    open.push_back(i);
    open_len += lengths[i];
  }
  if (!open.empty()) expected.push_back(open);

  CHECK(stats.skipped == skipped);
  REQUIRE(seqs.size() == expected.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const PackedSequence& seq = seqs[s];
    CHECK(seq.token_ids.size() <= l_max);
    CHECK(seq.segment_count() == expected[s].size());
    // Token content equals the concatenation of the expected pairs.
    std::vector<std::uint32_t> want;
    std::vector<std::uint32_t> want_prefix;
    for (std::size_t pi : expected[s]) {
      want.insert(want.end(), pairs[pi].input_ids.begin(),
                  pairs[pi].input_ids.end());
      want.insert(want.end(), pairs[pi].target_ids.begin(),
                  pairs[pi].target_ids.end());
      want_prefix.push_back(
          static_cast<std::uint32_t>(pairs[pi].input_ids.size()));
    }
    CHECK(seq.token_ids == want);
    CHECK(seq.prefix_lengths == want_prefix);
    // Segment ids are 1-based, contiguous, non-decreasing.
    std::uint16_t prev = 1;
    CHECK(seq.segment_ids.front() == 1);
    for (std::uint16_t id : seq.segment_ids) {
      CHECK(id >= prev);
      CHECK(id <= prev + 1);
      prev = id;
    }
  }
}

TEST_CASE("attention policy is stamped on every sequence") {
  const std::vector<SerializedPair> pairs = {make_pair(2, 2), make_pair(9, 9)};
  for (auto policy :
       {AttentionPolicy::CAUSAL, AttentionPolicy::PREFIX_NONCAUSAL}) {
    for (const PackedSequence& seq : pack(pairs, 20, policy, nullptr)) {
      CHECK(seq.attention == policy);
    }
  }
}

TEST_CASE("assign_loss_weights reproduces the packer weights") {
  std::mt19937_64 rng(5);
  std::vector<SerializedPair> pairs;
  for (int i = 0; i < 200; ++i) {
    pairs.push_back(make_pair(1 + uniform_below(rng, 5),
                              1 + uniform_below(rng, 5)));
  }
  for (PackedSequence seq : pack(pairs, 48, AttentionPolicy::CAUSAL, nullptr)) {
    const std::vector<double> original = seq.loss_weights;
    seq.loss_weights.clear();
    assign_loss_weights(seq);
    CHECK(seq.loss_weights == original);
  }
}

TEST_CASE("assign_loss_weights rejects malformed sequences") {
  PackedSequence seq;
  seq.token_ids = {1, 2, 3};
  seq.segment_ids = {1, 1, 1};
  seq.prefix_lengths = {3};  // no target tokens
  CHECK_THROWS_AS(assign_loss_weights(seq), ValidationError);

  seq.prefix_lengths = {4};  // prefix longer than the segment
  CHECK_THROWS_AS(assign_loss_weights(seq), ValidationError);

  seq.segment_ids = {1, 3, 3};  // gap in segment ids
  seq.prefix_lengths = {0};
  CHECK_THROWS_AS(assign_loss_weights(seq), ValidationError);
}

TEST_CASE("packer validates L_max") {
  CHECK_THROWS_AS(Packer(1, AttentionPolicy::CAUSAL), ValidationError);
  CHECK_NOTHROW(Packer(2, AttentionPolicy::CAUSAL));
}

TEST_CASE("segment ids cannot overflow sixteen bits") {
  // 70,000 two-token pairs against a huge capacity: the packer must close
  // the sequence at 65,535 segments to keep ids in range.
  Packer packer(1 << 20, AttentionPolicy::CAUSAL);
  std::vector<PackedSequence> seqs;
  const SerializedPair tiny = make_pair(1, 1);
  for (int i = 0; i < 70000; ++i) {
    if (auto seq = packer.add(tiny)) seqs.push_back(std::move(*seq));
  }
  if (auto seq = packer.finish()) seqs.push_back(std::move(*seq));
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].segment_count() == 0xFFFF);
  CHECK(seqs[1].segment_count() == 70000 - 0xFFFF);
  CHECK(seqs[0].segment_ids.back() == 0xFFFF);
}
