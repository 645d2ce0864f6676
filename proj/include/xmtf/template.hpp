#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xmtf/error.hpp"
#include "xmtf/jsonl.hpp"

namespace xmtf {

// One record field: a string or an integer.
class RecordValue {
 public:
  RecordValue() : value_(std::string()) {}
  RecordValue(std::string s) : value_(std::move(s)) {}
  RecordValue(const char* s) : value_(std::string(s)) {}
  RecordValue(std::int64_t i) : value_(i) {}
  RecordValue(int i) : value_(static_cast<std::int64_t>(i)) {}

  // Integers render as their decimal form.
  std::string as_string() const;

  // Integer value; string values that parse fully as a decimal integer count.
  std::optional<std::int64_t> as_int() const;

  bool operator==(const RecordValue& other) const = default;

 private:
  std::variant<std::string, std::int64_t> value_;
};

using Record = std::map<std::string, RecordValue>;

enum class PromptVariant { EN, MT, HT };

std::string to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(std::string_view s);

struct TemplateNode {
  enum class Kind { Literal, Var, Choice };
  Kind kind = Kind::Literal;
  // Literal: the literal bytes. Var/Choice: the raw source span including
  // the surrounding braces, so serialization is byte-exact.
  std::string text;
  // Var: referenced field. Choice: field holding the 0-based choice index.
  std::string field;
};

// Parsed template. Grammar: literal text plus {{field}} and
// {{Choices[field]}}. Whitespace inside braces is trimmed; anything else
// between {{ }} is rejected at parse time.
class TemplateAst {
 public:
  static TemplateAst parse(std::string_view src);

  // Byte-exact reconstruction of the source.
  std::string serialize() const;

  std::string render(const Record& record,
                     const std::vector<std::string>* answer_choices) const;

  const std::vector<TemplateNode>& nodes() const { return nodes_; }

  // Raw {{...}} spans in source order (for MT-translation masking).
  std::vector<std::string> brace_spans() const;

  bool has_choice_ref() const;

  // Field names of Choice nodes, in order.
  std::vector<std::string> choice_fields() const;

 private:
  std::vector<TemplateNode> nodes_;
};

struct PromptTemplate {
  std::string name;
  std::string dataset;
  std::string prompt_language;  // BCP-47
  PromptVariant variant = PromptVariant::EN;
  bool inverted = false;
  std::string input_src;
  std::string target_src;
  std::optional<std::vector<std::string>> answer_choices;
};

struct RenderedExample {
  std::string input_text;
  std::string target_text;
  std::string language;  // BCP-47 tag of the example, not of the prompt
  std::string dataset;
  std::string prompt_name;
  std::optional<std::vector<std::string>> answer_choices_rendered;
};

// Renders one record through a template. `language` tags the produced
// example; empty falls back to the template's prompt language.
RenderedExample render(const PromptTemplate& tpl, const Record& record,
                       const std::string& language = std::string());

// Parses both sides and checks the PromptTemplate invariants
// (Choices[...] implies non-empty answer_choices).
void validate_template(const PromptTemplate& tpl);

// Template file: a JSON array of PromptTemplate objects. Validates each
// template and name uniqueness within (dataset, variant).
std::vector<PromptTemplate> templates_from_json(const json& doc);
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);

json to_json(const PromptTemplate& tpl);
json to_json(const RenderedExample& ex);
RenderedExample rendered_example_from_json(const json& j);

// Record fields from a JSON object; only string and integer values are
// accepted.
Record record_from_json(const json& j);

// Canonical single-line serialization used for mixture streams and their
// checksums.
std::string to_jsonl_line(const RenderedExample& ex);

}  // namespace xmtf
