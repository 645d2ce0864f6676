#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xmtf {

// Decodes UTF-8 to Unicode scalar values. Malformed bytes decode to U+FFFD,
// one replacement per bad byte, so corrupt corpora still audit.
std::vector<char32_t> decode_utf8(std::string_view text);

std::size_t count_codepoints(std::string_view text);

std::string encode_utf8(char32_t cp);

}  // namespace xmtf
