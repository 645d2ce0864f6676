#include "xmtf/tokenizer.hpp"

#include "xmtf/error.hpp"

namespace xmtf {

std::vector<std::uint32_t> ByteTokenizer::encode(std::string_view text) {
  std::vector<std::uint32_t> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(c);
  return ids;
}

std::string ByteTokenizer::decode(std::span<const std::uint32_t> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (std::uint32_t id : ids) {
    if (id < 256) out.push_back(static_cast<char>(id));
  }
  return out;
}

WhitespaceTokenizer::WhitespaceTokenizer() : tokens_{"</s>", "<sep>"} {
  ids_.emplace(tokens_[0], 0);
  ids_.emplace(tokens_[1], 1);
}

std::vector<std::uint32_t> WhitespaceTokenizer::encode(std::string_view text) {
  std::vector<std::uint32_t> ids;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  std::lock_guard<std::mutex> lock(mutex_);
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    if (i == start) break;
    std::string_view token = text.substr(start, i - start);
    auto it = ids_.find(token);
    if (it == ids_.end()) {
      std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
      tokens_.emplace_back(token);
      it = ids_.emplace(tokens_.back(), id).first;
    }
    ids.push_back(it->second);
  }
  return ids;
}

std::string WhitespaceTokenizer::decode(
    std::span<const std::uint32_t> ids) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string out;
  bool first = true;
  for (std::uint32_t id : ids) {
    if (id >= tokens_.size()) {
      throw ValidationError("token id " + std::to_string(id) +
                            " outside vocabulary");
    }
    if (id <= 1) continue;  // specials render as nothing
    if (!first) out.push_back(' ');
    out += tokens_[id];
    first = false;
  }
  return out;
}

std::uint32_t WhitespaceTokenizer::vocab_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return static_cast<std::uint32_t>(tokens_.size());
}

std::shared_ptr<Tokenizer> make_tokenizer(std::string_view name) {
  if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  if (name == "byte") return std::make_shared<ByteTokenizer>();
  throw ValidationError("unknown tokenizer '" + std::string(name) +
                        "' (expected 'whitespace' or 'byte')");
}

}  // namespace xmtf
