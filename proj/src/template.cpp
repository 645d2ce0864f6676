#include "xmtf/template.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "xmtf/jsonl.hpp"

namespace xmtf {

namespace {

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string RecordValue::as_string() const {
  if (std::holds_alternative<std::int64_t>(value_)) {
    return std::to_string(std::get<std::int64_t>(value_));
  }
  return std::get<std::string>(value_);
}

std::optional<std::int64_t> RecordValue::as_int() const {
  if (std::holds_alternative<std::int64_t>(value_)) {
    return std::get<std::int64_t>(value_);
  }
  const std::string& s = std::get<std::string>(value_);
  if (s.empty()) return std::nullopt;
  std::int64_t out = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

std::string to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::EN: return "EN";
    case PromptVariant::MT: return "MT";
    case PromptVariant::HT: return "HT";
  }
  return "EN";
}

PromptVariant prompt_variant_from_string(std::string_view s) {
  if (s == "EN") return PromptVariant::EN;
  if (s == "MT") return PromptVariant::MT;
  if (s == "HT") return PromptVariant::HT;
  throw ValidationError("unknown prompt variant: " + std::string(s));
}

TemplateAst TemplateAst::parse(std::string_view src) {
  TemplateAst ast;
  std::string literal;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto flush_literal = [&]() {
    if (!literal.empty()) {
      ast.nodes_.push_back({TemplateNode::Kind::Literal, literal, {}});
      literal.clear();
    }
  };

  while (i < n) {
    if (src[i] == '{' && i + 1 < n && src[i + 1] == '{') {
      std::size_t close = src.find("}}", i + 2);
      if (close == std::string_view::npos) {
        throw TemplateParseError(
            TemplateParseErrorKind::UnbalancedBraces, i,
            "unbalanced '{{' at byte " + std::to_string(i));
      }
      std::string raw(src.substr(i, close + 2 - i));
      std::string_view inner = src.substr(i + 2, close - (i + 2));
      std::string_view expr = trim(inner);
      if (expr.empty()) {
        throw TemplateParseError(TemplateParseErrorKind::EmptyExpression, i,
                                 "empty expression at byte " +
                                     std::to_string(i));
      }
      flush_literal();
      if (is_identifier(expr)) {
        ast.nodes_.push_back(
            {TemplateNode::Kind::Var, std::move(raw), std::string(expr)});
      } else if (expr.size() > 7 && expr.substr(0, 7) == "Choices") {
        std::string_view rest = trim(expr.substr(7));
        if (rest.size() >= 2 && rest.front() == '[' && rest.back() == ']') {
          std::string_view field = trim(rest.substr(1, rest.size() - 2));
          if (is_identifier(field)) {
            ast.nodes_.push_back({TemplateNode::Kind::Choice, std::move(raw),
                                  std::string(field)});
            i = close + 2;
            continue;
          }
        }
        throw TemplateParseError(
            TemplateParseErrorKind::UnknownConstruct, i,
            "unknown construct '" + std::string(expr) + "' at byte " +
                std::to_string(i));
      } else {
        throw TemplateParseError(
            TemplateParseErrorKind::UnknownConstruct, i,
            "unknown construct '" + std::string(expr) + "' at byte " +
                std::to_string(i));
      }
      i = close + 2;
    } else if (src[i] == '}' && i + 1 < n && src[i + 1] == '}') {
      throw TemplateParseError(
          TemplateParseErrorKind::UnbalancedBraces, i,
          "'}}' without matching '{{' at byte " + std::to_string(i));
    } else {
      literal.push_back(src[i]);
      ++i;
    }
  }
  flush_literal();
  return ast;
}

std::string TemplateAst::serialize() const {
  std::string out;
  for (const TemplateNode& node : nodes_) out += node.text;
  return out;
}

std::string TemplateAst::render(
    const Record& record, const std::vector<std::string>* answer_choices) const {
  std::string out;
  for (const TemplateNode& node : nodes_) {
    switch (node.kind) {
      case TemplateNode::Kind::Literal:
        out += node.text;
        break;
      case TemplateNode::Kind::Var: {
        auto it = record.find(node.field);
        if (it == record.end()) {
          throw RenderError(RenderErrorKind::MissingField,
                            "missing field '" + node.field + "'");
        }
        out += it->second.as_string();
        break;
      }
      case TemplateNode::Kind::Choice: {
        if (answer_choices == nullptr || answer_choices->empty()) {
          throw RenderError(RenderErrorKind::NoAnswerChoices,
                            "template uses Choices[" + node.field +
                                "] but has no answer_choices");
        }
        auto it = record.find(node.field);
        if (it == record.end()) {
          throw RenderError(RenderErrorKind::MissingField,
                            "missing field '" + node.field + "'");
        }
        std::optional<std::int64_t> idx = it->second.as_int();
        if (!idx) {
          throw RenderError(RenderErrorKind::ChoiceIndexNotInteger,
                            "field '" + node.field +
                                "' does not parse as a choice index");
        }
        if (*idx < 0 ||
            static_cast<std::size_t>(*idx) >= answer_choices->size()) {
          throw RenderError(
              RenderErrorKind::ChoiceIndexOutOfRange,
              "choice index " + std::to_string(*idx) + " out of range [0, " +
                  std::to_string(answer_choices->size()) + ")");
        }
        out += (*answer_choices)[static_cast<std::size_t>(*idx)];
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> TemplateAst::brace_spans() const {
  std::vector<std::string> spans;
  for (const TemplateNode& node : nodes_) {
    if (node.kind != TemplateNode::Kind::Literal) spans.push_back(node.text);
  }
  return spans;
}

bool TemplateAst::has_choice_ref() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const TemplateNode& n) {
    return n.kind == TemplateNode::Kind::Choice;
  });
}

std::vector<std::string> TemplateAst::choice_fields() const {
  std::vector<std::string> fields;
  for (const TemplateNode& node : nodes_) {
    if (node.kind == TemplateNode::Kind::Choice) fields.push_back(node.field);
  }
  return fields;
}

void validate_template(const PromptTemplate& tpl) {
  TemplateAst input = TemplateAst::parse(tpl.input_src);
  TemplateAst target = TemplateAst::parse(tpl.target_src);
  bool uses_choices = input.has_choice_ref() || target.has_choice_ref();
  if (uses_choices &&
      (!tpl.answer_choices || tpl.answer_choices->empty())) {
    throw ValidationError("template '" + tpl.name +
                          "' references Choices[...] without answer_choices");
  }
}

RenderedExample render(const PromptTemplate& tpl, const Record& record,
                       const std::string& language) {
  TemplateAst input = TemplateAst::parse(tpl.input_src);
  TemplateAst target = TemplateAst::parse(tpl.target_src);
  const std::vector<std::string>* choices =
      tpl.answer_choices ? &*tpl.answer_choices : nullptr;

  RenderedExample ex;
  ex.input_text = input.render(record, choices);
  ex.target_text = target.render(record, choices);
  ex.language = language.empty() ? tpl.prompt_language : language;
  ex.dataset = tpl.dataset;
  ex.prompt_name = tpl.name;
  if (ex.target_text.empty()) {
    throw RenderError(RenderErrorKind::EmptyTarget,
                      "template '" + tpl.name + "' rendered an empty target");
  }
  if (tpl.answer_choices) {
    ex.answer_choices_rendered = tpl.answer_choices;
    if (std::find(tpl.answer_choices->begin(), tpl.answer_choices->end(),
                  ex.target_text) == tpl.answer_choices->end()) {
      throw RenderError(RenderErrorKind::TargetNotInChoices,
                        "target '" + ex.target_text +
                            "' is not one of the answer choices");
    }
  }
  return ex;
}

std::vector<PromptTemplate> templates_from_json(const json& doc) {
  if (!doc.is_array()) {
    throw ValidationError("template file must be a JSON array");
  }
  std::vector<PromptTemplate> templates;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const json& j : doc) {
    if (!j.is_object()) throw ValidationError("template entry must be an object");
    PromptTemplate tpl;
    tpl.name = j.at("name").get<std::string>();
    tpl.dataset = j.at("dataset").get<std::string>();
    tpl.prompt_language = j.at("prompt_language").get<std::string>();
    tpl.variant = prompt_variant_from_string(
        j.value("variant", std::string("EN")));
    tpl.inverted = j.value("inverted", false);
    tpl.input_src = j.at("input_src").get<std::string>();
    tpl.target_src = j.at("target_src").get<std::string>();
    if (j.contains("answer_choices") && !j.at("answer_choices").is_null()) {
      tpl.answer_choices = j.at("answer_choices").get<std::vector<std::string>>();
    }
    validate_template(tpl);
    auto key = std::make_tuple(tpl.dataset, to_string(tpl.variant), tpl.name);
    if (!seen.insert(key).second) {
      throw ValidationError("duplicate template name '" + tpl.name +
                            "' within dataset '" + tpl.dataset +
                            "' variant " + to_string(tpl.variant));
    }
    templates.push_back(std::move(tpl));
  }
  return templates;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
  return templates_from_json(read_json_file(path));
}

json to_json(const PromptTemplate& tpl) {
  json j{{"name", tpl.name},
         {"dataset", tpl.dataset},
         {"prompt_language", tpl.prompt_language},
         {"variant", to_string(tpl.variant)},
         {"inverted", tpl.inverted},
         {"input_src", tpl.input_src},
         {"target_src", tpl.target_src}};
  if (tpl.answer_choices) j["answer_choices"] = *tpl.answer_choices;
  return j;
}

json to_json(const RenderedExample& ex) {
  json j{{"input_text", ex.input_text},
         {"target_text", ex.target_text},
         {"language", ex.language},
         {"dataset", ex.dataset},
         {"prompt_name", ex.prompt_name}};
  if (ex.answer_choices_rendered) {
    j["answer_choices_rendered"] = *ex.answer_choices_rendered;
  }
  return j;
}

RenderedExample rendered_example_from_json(const json& j) {
  RenderedExample ex;
  ex.input_text = j.at("input_text").get<std::string>();
  ex.target_text = j.at("target_text").get<std::string>();
  ex.language = j.at("language").get<std::string>();
  ex.dataset = j.at("dataset").get<std::string>();
  ex.prompt_name = j.at("prompt_name").get<std::string>();
  if (j.contains("answer_choices_rendered")) {
    ex.answer_choices_rendered =
        j.at("answer_choices_rendered").get<std::vector<std::string>>();
  }
  return ex;
}

Record record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  Record record;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    if (v.is_string()) {
      record.emplace(it.key(), RecordValue(v.get<std::string>()));
    } else if (v.is_number_integer()) {
      record.emplace(it.key(), RecordValue(v.get<std::int64_t>()));
    } else {
      throw ValidationError("record field '" + it.key() +
                            "' must be a string or integer");
    }
  }
  return record;
}

std::string to_jsonl_line(const RenderedExample& ex) {
  return to_json(ex).dump();
}

}  // namespace xmtf
