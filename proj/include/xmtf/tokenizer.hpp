#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmtf {

// Abstract tokenizer behind the packing pipeline. Real model tokenizers plug
// in here; the two reference implementations below back all tests.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<std::uint32_t> encode(std::string_view text) = 0;
  virtual std::string decode(std::span<const std::uint32_t> ids) const = 0;

  virtual std::uint32_t eos_id() const = 0;
  // Reserved id for the NEW_SPECIAL separator policy; never produced by
  // encode().
  virtual std::uint32_t separator_id() const = 0;
  virtual std::uint32_t vocab_size() const = 0;
};

// One id per byte (0..255); ids 256/257 are EOS and the reserved separator.
// decode(encode(s)) == s for every string.
class ByteTokenizer final : public Tokenizer {
 public:
  std::vector<std::uint32_t> encode(std::string_view text) override;
  std::string decode(std::span<const std::uint32_t> ids) const override;
  std::uint32_t eos_id() const override { return 256; }
  std::uint32_t separator_id() const override { return 257; }
  std::uint32_t vocab_size() const override { return 258; }
};

// Splits on runs of ASCII whitespace and assigns ids on first sight. Ids 0
// and 1 are EOS and the reserved separator. decode joins with single spaces,
// so round-trips hold for canonical single-space text. The growing vocab is
// mutex-guarded for concurrent encode calls.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  WhitespaceTokenizer();
  std::vector<std::uint32_t> encode(std::string_view text) override;
  std::string decode(std::span<const std::uint32_t> ids) const override;
  std::uint32_t eos_id() const override { return 0; }
  std::uint32_t separator_id() const override { return 1; }
  std::uint32_t vocab_size() const override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::uint32_t, std::less<>> ids_;
  std::vector<std::string> tokens_;
};

std::shared_ptr<Tokenizer> make_tokenizer(std::string_view name);

}  // namespace xmtf
