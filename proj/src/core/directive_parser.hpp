#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dpage {

// Authoring grammar, one construct per line:
//
//   :::type[label]{key="value" flag}     container open (label, attrs optional)
//   ::type[label]{attrs}                 leaf, only meaningful inside a container
//   :::                                  container close
//
// Lines inside ``` or ~~~ fences are never treated as directive markers.

inline constexpr std::string_view kMultipleChoice = "multiple-choice";
inline constexpr std::string_view kCodeQuestion = "code-question";

struct Attribute {
  std::string key;
  std::optional<std::string> value;  // nullopt for bare flags such as {correct}

  bool operator==(const Attribute&) const = default;
};

using Attributes = std::vector<Attribute>;

const Attribute* find_attribute(const Attributes& attrs, std::string_view key);

struct ChoiceOption {
  std::string label;
  bool correct = false;
  std::optional<std::string> feedback;

  bool operator==(const ChoiceOption&) const = default;
};

struct MultipleChoiceSpec {
  std::string prompt;
  std::vector<ChoiceOption> options;

  bool operator==(const MultipleChoiceSpec&) const = default;
};

struct CodeQuestionSpec {
  std::string prompt;
  std::string language;
  std::string starter;
  std::optional<std::string> solution;
  std::optional<std::string> tests;

  bool operator==(const CodeQuestionSpec&) const = default;
};

using DirectiveSpec = std::variant<std::monostate, MultipleChoiceSpec, CodeQuestionSpec>;

struct Directive {
  std::string id;  // "<messageId>:<type>:<index of this type within the message>"
  std::string type;
  std::string label;
  std::string attribute_text;  // raw text between the braces of the opener
  Attributes attributes;
  std::string body;  // lines between opener and closer, verbatim
  DirectiveSpec spec;
  std::size_t offset = 0;  // byte span of the whole block in the source
  std::size_t length = 0;
  std::size_t line = 0;  // 1-based line of the opener
};

enum class SegmentKind { markdown, directive };

struct Segment {
  SegmentKind kind = SegmentKind::markdown;
  std::string text;  // exact source slice
  std::size_t offset = 0;
  std::optional<std::size_t> directive_index;  // into ScanResult::directives

  bool operator==(const Segment&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string code;  // unclosed-container, unknown-directive, stray-leaf, ...
  std::string message;
};

struct ScanResult {
  std::vector<Directive> directives;
  std::vector<Segment> segments;
  std::vector<Diagnostic> diagnostics;
};

// Never throws; malformed constructs stay markdown and produce diagnostics.
ScanResult scan_message(std::string_view message_id, std::string_view source);

std::vector<Directive> scan_directives(std::string_view message_id, std::string_view source);
std::vector<Segment> render_segments(std::string_view source);

// Throws Error(invalid_argument) on malformed syntax or violated spec invariants.
Attributes parse_attributes(std::string_view text);
MultipleChoiceSpec parse_multiple_choice(const Directive& block);
CodeQuestionSpec parse_code_question(const Directive& block);

std::string directive_id(std::string_view message_id, std::string_view type, std::size_t index);

}  // namespace dpage
