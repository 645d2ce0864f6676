#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xmtf {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem and stream failures. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class TemplateParseErrorKind {
  UnbalancedBraces,
  UnknownConstruct,
  EmptyExpression,
};

// Template source rejected by the parser. Carries the byte offset of the
// offending construct.
class TemplateParseError : public ValidationError {
 public:
  TemplateParseError(TemplateParseErrorKind kind, std::size_t offset,
                     const std::string& message)
      : ValidationError(message), kind_(kind), offset_(offset) {}

  TemplateParseErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  TemplateParseErrorKind kind_;
  std::size_t offset_;
};

enum class RenderErrorKind {
  MissingField,
  ChoiceIndexOutOfRange,
  ChoiceIndexNotInteger,
  NoAnswerChoices,
  EmptyTarget,
  TargetNotInChoices,
};

class RenderError : public ValidationError {
 public:
  RenderError(RenderErrorKind kind, const std::string& message)
      : ValidationError(message), kind_(kind) {}

  RenderErrorKind kind() const { return kind_; }

 private:
  RenderErrorKind kind_;
};

// Raised by Scorer implementations and propagated by the evaluation harness.
class ScorerError : public Error {
 public:
  using Error::Error;
};

// Tokenizer misbehavior surfaced by the serialization stage.
class TokenizerError : public Error {
 public:
  using Error::Error;
};

// Raised by Translator implementations for (source, target) pairs they
// cannot serve.
class UnsupportedLanguagePairError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A translated template no longer parses or lost its substitution spans.
// Non-fatal: the machine-translated sibling is dropped and logged.
class TranslationBrokeTemplateError : public Error {
 public:
  using Error::Error;
};

// Raised by LanguageIdentifier implementations; the audit counts these per
// sentence instead of aborting.
class LidError : public Error {
 public:
  using Error::Error;
};

}  // namespace xmtf
