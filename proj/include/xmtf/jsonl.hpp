#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace xmtf {

using json = nlohmann::json;

// Strict JSON-lines reader: every non-empty line must parse as one JSON
// value. Errors carry the line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& rows);

json read_json_file(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const json& value);

std::string read_text_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace xmtf
