#include "xmtf/shard.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

#include "xmtf/error.hpp"
#include "xmtf/hash.hpp"
#include "xmtf/jsonl.hpp"

namespace xmtf {

namespace {

constexpr char kMagic[4] = {'X', 'M', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint16_t u16() {
    const char* p = take(2);
    return static_cast<std::uint16_t>(
        static_cast<unsigned char>(p[0]) |
        (static_cast<unsigned char>(p[1]) << 8));
  }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw ValidationError("truncated shard");
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string shard_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%05zu.xmfs", i);
  return buf;
}

std::string checksum_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t checksum_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

}  // namespace

std::string encode_shard(const std::vector<PackedSequence>& seqs,
                         std::size_t begin, std::size_t end,
                         std::uint32_t l_max) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, l_max);
  put_u32(out, static_cast<std::uint32_t>(end - begin));
  for (std::size_t s = begin; s < end; ++s) {
    const PackedSequence& seq = seqs[s];
    const std::size_t n = seq.token_ids.size();
    if (seq.loss_weights.size() != n || seq.segment_ids.size() != n) {
      throw ValidationError("packed sequence lists differ in length");
    }
    if (n > l_max) {
      throw ValidationError("packed sequence exceeds L_max");
    }
    put_u32(out, static_cast<std::uint32_t>(n));
    for (std::uint32_t id : seq.token_ids) put_u32(out, id);
    for (double w : seq.loss_weights) put_f32(out, static_cast<float>(w));
    for (std::uint16_t id : seq.segment_ids) put_u16(out, id);
    put_u8(out, static_cast<std::uint8_t>(seq.attention));
    put_u16(out, static_cast<std::uint16_t>(seq.prefix_lengths.size()));
    for (std::uint32_t p : seq.prefix_lengths) put_u32(out, p);
  }
  return out;
}

std::vector<PackedSequence> decode_shard(const std::string& bytes,
                                         std::uint32_t* l_max_out) {
  Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("bad shard magic");
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ValidationError("unsupported shard version " +
                          std::to_string(version));
  }
  std::uint32_t l_max = r.u32();
  if (l_max_out != nullptr) *l_max_out = l_max;
  std::uint32_t count = r.u32();
  std::vector<PackedSequence> seqs;
  seqs.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    PackedSequence seq;
    std::uint32_t n = r.u32();
    seq.token_ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) seq.token_ids.push_back(r.u32());
    seq.loss_weights.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      seq.loss_weights.push_back(static_cast<double>(r.f32()));
    }
    seq.segment_ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) seq.segment_ids.push_back(r.u16());
    seq.attention = static_cast<AttentionPolicy>(r.u8());
    std::uint16_t segments = r.u16();
    seq.prefix_lengths.reserve(segments);
    for (std::uint16_t i = 0; i < segments; ++i) {
      seq.prefix_lengths.push_back(r.u32());
    }
    seqs.push_back(std::move(seq));
  }
  if (!r.done()) {
    throw ValidationError("trailing bytes after last sequence");
  }
  return seqs;
}

ShardIndex write_shards(const std::vector<PackedSequence>& seqs,
                        const std::filesystem::path& dir,
                        std::size_t shard_size, std::uint32_t l_max) {
  if (shard_size == 0) throw ValidationError("shard_size must be positive");
  std::filesystem::create_directories(dir);
  ShardIndex index;
  index.l_max = l_max;
  index.total_sequences = seqs.size();
  std::size_t shard_no = 0;
  for (std::size_t begin = 0; begin < seqs.size(); begin += shard_size) {
    std::size_t end = std::min(begin + shard_size, seqs.size());
    std::string bytes = encode_shard(seqs, begin, end, l_max);
    ShardEntry entry;
    entry.path = shard_name(shard_no++);
    entry.count = static_cast<std::uint32_t>(end - begin);
    entry.checksum = fnv1a64(bytes);
    write_text_file(dir / entry.path, bytes);
    index.shards.push_back(std::move(entry));
  }
  json doc{{"magic", "XMFS"},
           {"version", kVersion},
           {"l_max", index.l_max},
           {"shard_size", shard_size},
           {"total_sequences", index.total_sequences}};
  json shards = json::array();
  for (const ShardEntry& entry : index.shards) {
    shards.push_back({{"path", entry.path},
                      {"count", entry.count},
                      {"checksum", checksum_hex(entry.checksum)}});
  }
  doc["shards"] = shards;
  write_json_file(dir / "index.json", doc);
  return index;
}

std::vector<PackedSequence> read_shards(const std::filesystem::path& index_path,
                                        ShardIndex* index_out) {
  json doc = read_json_file(index_path);
  ShardIndex index;
  index.l_max = doc.at("l_max").get<std::uint32_t>();
  index.total_sequences = doc.at("total_sequences").get<std::uint64_t>();
  const std::filesystem::path dir = index_path.parent_path();
  std::vector<PackedSequence> all;
  for (const json& j : doc.at("shards")) {
    ShardEntry entry;
    entry.path = j.at("path").get<std::string>();
    entry.count = j.at("count").get<std::uint32_t>();
    entry.checksum = checksum_from_hex(j.at("checksum").get<std::string>());
    std::string bytes = read_text_file(dir / entry.path);
    if (fnv1a64(bytes) != entry.checksum) {
      throw ValidationError("checksum mismatch for " + entry.path);
    }
    std::uint32_t l_max = 0;
    std::vector<PackedSequence> seqs = decode_shard(bytes, &l_max);
    if (l_max != index.l_max) {
      throw ValidationError("shard L_max disagrees with index");
    }
    if (seqs.size() != entry.count) {
      throw ValidationError("sequence count mismatch for " + entry.path);
    }
    index.shards.push_back(std::move(entry));
    for (PackedSequence& seq : seqs) all.push_back(std::move(seq));
  }
  if (all.size() != index.total_sequences) {
    throw ValidationError("index total_sequences disagrees with shards");
  }
  if (index_out != nullptr) *index_out = std::move(index);
  return all;
}

}  // namespace xmtf
