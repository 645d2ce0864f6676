#include "xmtf/table.hpp"

#include <algorithm>
#include <cstdio>

namespace xmtf {

TextTable::TextTable(std::vector<std::string> header)
    : header_(std::move(header)), numeric_(header_.size(), false) {}

void TextTable::add_row(std::vector<std::string> cells) {
  cells.resize(header_.size());
  rows_.push_back(std::move(cells));
}

void TextTable::set_numeric(std::size_t column) {
  if (column < numeric_.size()) numeric_[column] = true;
}

std::string TextTable::render() const {
  std::vector<std::size_t> widths(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) widths[c] = header_[c].size();
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }

  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < header_.size(); ++c) {
      const std::string& cell = c < row.size() ? row[c] : std::string();
      std::string pad(widths[c] - cell.size(), ' ');
      line += numeric_[c] ? pad + cell : cell + pad;
      if (c + 1 < header_.size()) line += "  ";
    }
    std::size_t end = line.find_last_not_of(' ');
    line.erase(end == std::string::npos ? 0 : end + 1);
    return line + "\n";
  };

  std::size_t total = 0;
  for (std::size_t c = 0; c < widths.size(); ++c) {
    total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
  }

  std::string text = emit(header_);
  text += std::string(total, '-');
  text += '\n';
  for (const auto& row : rows_) text += emit(row);
  return text;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string format_percent(double fraction, int decimals) {
  return format_fixed(fraction * 100.0, decimals) + "%";
}

}  // namespace xmtf
