#pragma once

#include <string>
#include <vector>

namespace xmtf {

// Minimal fixed-width text table for the CLI reports.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);

  // Columns are left-aligned except those flagged numeric (right-aligned).
  void set_numeric(std::size_t column);

  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<bool> numeric_;
};

// Fixed-decimal formatting helpers (no locale, stable output).
std::string format_fixed(double value, int decimals);
std::string format_percent(double fraction, int decimals);

}  // namespace xmtf
