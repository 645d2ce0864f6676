#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmtf/pack.hpp"

namespace xmtf {

// Shard file layout (little-endian throughout):
//   magic "XMFS" | version u32 = 1 | L_max u32 | sequence count u32
// then per sequence:
//   n u32 | token_ids n*u32 | loss_weights n*f32 | segment_ids n*u16 |
//   attention_policy u8 (0 = causal, 1 = prefix) |
//   segment count u16 | prefix_lengths (that many) u32
// Weights are narrowed to f32 on write and widened on read; everything else
// round-trips bit-for-bit.

struct ShardEntry {
  std::string path;  // relative to the index file
  std::uint32_t count = 0;
  std::uint64_t checksum = 0;  // FNV-1a 64 over the shard file bytes
};

struct ShardIndex {
  std::uint32_t l_max = 0;
  std::uint64_t total_sequences = 0;
  std::vector<ShardEntry> shards;
};

// Splits `seqs` into shards of at most `shard_size` sequences under `dir`
// and writes `dir`/index.json describing them.
ShardIndex write_shards(const std::vector<PackedSequence>& seqs,
                        const std::filesystem::path& dir,
                        std::size_t shard_size, std::uint32_t l_max);

std::string encode_shard(const std::vector<PackedSequence>& seqs,
                         std::size_t begin, std::size_t end,
                         std::uint32_t l_max);

std::vector<PackedSequence> decode_shard(const std::string& bytes,
                                         std::uint32_t* l_max_out = nullptr);

// Reads every shard listed by an index file, verifying counts and checksums.
std::vector<PackedSequence> read_shards(const std::filesystem::path& index_path,
                                        ShardIndex* index_out = nullptr);

}  // namespace xmtf
