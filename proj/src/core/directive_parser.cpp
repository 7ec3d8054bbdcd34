#include "core/directive_parser.hpp"

#include <cctype>
#include <map>

#include "core/errors.hpp"

namespace dpage {

namespace {

struct Line {
  std::size_t begin = 0;  // offset of first byte
  std::size_t end = 0;    // offset one past the terminator
  std::string_view content;  // without "\n" / "\r\n"
};

std::vector<Line> split_source(std::string_view source) {
  std::vector<Line> out;
  std::size_t pos = 0;
  while (pos < source.size()) {
    std::size_t nl = source.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? source.size() : nl + 1;
    std::string_view content = source.substr(pos, (nl == std::string_view::npos ? end : nl) - pos);
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    out.push_back({pos, end, content});
    pos = end;
  }
  return out;
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t') return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_type_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_type_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_';
}

struct Fence {
  char marker = '`';
  std::size_t length = 0;
  std::string info;
};

std::optional<Fence> fence_open(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  if (i >= line.size() || (line[i] != '`' && line[i] != '~')) return std::nullopt;
  const char marker = line[i];
  std::size_t n = 0;
  while (i + n < line.size() && line[i + n] == marker) ++n;
  if (n < 3) return std::nullopt;
  const std::string_view info = trim(line.substr(i + n));
  if (marker == '`' && info.find('`') != std::string_view::npos) return std::nullopt;
  return Fence{marker, n, std::string(info)};
}

bool fence_closes(const Fence& open, std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t n = 0;
  while (i + n < line.size() && line[i + n] == open.marker) ++n;
  return n >= open.length && is_blank(line.substr(i + n));
}

struct Marker {
  std::string type;
  std::string label;
  std::string attribute_text;
};

enum class MarkerStatus { none, ok, malformed };

// Parses "<colons>type[label]{attrs}" occupying the whole line.
MarkerStatus parse_marker(std::string_view line, std::size_t colons, Marker& out) {
  if (line.size() <= colons) return MarkerStatus::none;
  for (std::size_t i = 0; i < colons; ++i) {
    if (line[i] != ':') return MarkerStatus::none;
  }
  std::size_t i = colons;
  if (!is_type_start(line[i])) return MarkerStatus::none;
  const std::size_t type_begin = i;
  while (i < line.size() && is_type_char(line[i])) ++i;
  out.type = std::string(line.substr(type_begin, i - type_begin));
  out.label.clear();
  out.attribute_text.clear();

  if (i < line.size() && line[i] == '[') {
    int depth = 1;
    ++i;
    while (i < line.size() && depth > 0) {
      const char c = line[i];
      if (c == '\\' && i + 1 < line.size()) {
        out.label.push_back(line[i + 1]);
        i += 2;
        continue;
      }
      if (c == '[') ++depth;
      if (c == ']' && --depth == 0) break;
      out.label.push_back(c);
      ++i;
    }
    if (depth != 0) return MarkerStatus::malformed;
    ++i;
  }
  if (i < line.size() && line[i] == '{') {
    ++i;
    const std::size_t attr_begin = i;
    bool in_quote = false;
    while (i < line.size()) {
      const char c = line[i];
      if (in_quote && c == '\\') {
        i += 2;
        continue;
      }
      if (c == '"') in_quote = !in_quote;
      if (c == '}' && !in_quote) break;
      ++i;
    }
    if (i >= line.size()) return MarkerStatus::malformed;
    out.attribute_text = std::string(line.substr(attr_begin, i - attr_begin));
    ++i;
  }
  return is_blank(line.substr(std::min(i, line.size()))) ? MarkerStatus::ok
                                                           : MarkerStatus::malformed;
}

bool is_container_close(std::string_view line) {
  return line.size() >= 3 && line.substr(0, 3) == ":::" && is_blank(line.substr(3));
}

bool is_known_type(std::string_view type) {
  return type == kMultipleChoice || type == kCodeQuestion;
}

std::string join_trimmed(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return std::string(trim(out));
}

std::string join(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

}  // namespace

const Attribute* find_attribute(const Attributes& attrs, std::string_view key) {
  for (const auto& a : attrs) {
    if (a.key == key) return &a;
  }
  return nullptr;
}

std::string directive_id(std::string_view message_id, std::string_view type, std::size_t index) {
  return std::string(message_id) + ":" + std::string(type) + ":" + std::to_string(index);
}

Attributes parse_attributes(std::string_view text) {
  Attributes out;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::invalid_argument,
                "malformed attributes {" + std::string(text) + "}: " + why);
  };
  while (true) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const std::size_t key_begin = i;
    if (!std::isalpha(static_cast<unsigned char>(text[i])) && text[i] != '_') {
      fail("unexpected character '" + std::string(1, text[i]) + "'");
    }
    while (i < text.size() && (is_type_char(text[i]) || text[i] == '.' || text[i] == ':')) ++i;
    Attribute attr{std::string(text.substr(key_begin, i - key_begin)), std::nullopt};
    if (i < text.size() && text[i] == '=') {
      ++i;
      if (i >= text.size() || text[i] != '"') fail("value of '" + attr.key + "' must be quoted");
      ++i;
      std::string value;
      bool closed = false;
      while (i < text.size()) {
        const char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
          value.push_back(text[i + 1]);
          i += 2;
          continue;
        }
        if (c == '"') {
          closed = true;
          ++i;
          break;
        }
        value.push_back(c);
        ++i;
      }
      if (!closed) fail("unterminated string");
      attr.value = std::move(value);
    }
    if (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      fail("expected whitespace after '" + attr.key + "'");
    }
    if (find_attribute(out, attr.key) != nullptr) fail("duplicate key '" + attr.key + "'");
    out.push_back(std::move(attr));
  }
  return out;
}

MultipleChoiceSpec parse_multiple_choice(const Directive& block) {
  if (block.type != kMultipleChoice) {
    throw Error(ErrorCode::invalid_argument, "directive is '" + block.type + "', not multiple-choice");
  }
  parse_attributes(block.attribute_text);
  MultipleChoiceSpec spec;
  std::vector<std::string_view> prompt;
  std::optional<Fence> fence;
  const auto lines = split_source(block.body);
  for (const auto& line : lines) {
    if (fence) {
      if (fence_closes(*fence, line.content)) fence.reset();
      prompt.push_back(line.content);
      continue;
    }
    if ((fence = fence_open(line.content))) {
      prompt.push_back(line.content);
      continue;
    }
    Marker leaf;
    const auto status = parse_marker(line.content, 2, leaf);
    if (status == MarkerStatus::malformed) {
      throw Error(ErrorCode::invalid_argument, "malformed leaf directive: " + std::string(line.content));
    }
    if (status == MarkerStatus::none) {
      prompt.push_back(line.content);
      continue;
    }
    if (leaf.type != "option") {
      throw Error(ErrorCode::invalid_argument,
                  "unexpected ::" + leaf.type + " inside multiple-choice");
    }
    const Attributes attrs = parse_attributes(leaf.attribute_text);
    ChoiceOption option{leaf.label, false, std::nullopt};
    if (const Attribute* c = find_attribute(attrs, "correct")) {
      option.correct = !c->value || *c->value == "true";
    }
    if (const Attribute* f = find_attribute(attrs, "feedback"); f && f->value) {
      option.feedback = *f->value;
    }
    spec.options.push_back(std::move(option));
  }
  spec.prompt = join_trimmed(prompt);
  if (spec.options.empty()) {
    throw Error(ErrorCode::invalid_argument, "multiple-choice has no options");
  }
  bool any_correct = false;
  for (const auto& o : spec.options) any_correct = any_correct || o.correct;
  if (!any_correct) {
    throw Error(ErrorCode::invalid_argument, "multiple-choice has no correct option");
  }
  return spec;
}

CodeQuestionSpec parse_code_question(const Directive& block) {
  if (block.type != kCodeQuestion) {
    throw Error(ErrorCode::invalid_argument, "directive is '" + block.type + "', not code-question");
  }
  const Attributes attrs = parse_attributes(block.attribute_text);
  CodeQuestionSpec spec;
  const Attribute* lang = find_attribute(attrs, "language");
  if (lang == nullptr) lang = find_attribute(attrs, "lang");
  if (lang == nullptr || !lang->value || trim(*lang->value).empty()) {
    throw Error(ErrorCode::invalid_argument, "code-question is missing its language attribute");
  }
  spec.language = std::string(trim(*lang->value));

  std::vector<std::string_view> prompt;
  std::vector<std::string_view> captured;
  std::optional<Fence> fence;
  std::string role;  // starter/solution/test when capturing
  const auto lines = split_source(block.body);
  for (const auto& line : lines) {
    if (fence) {
      if (fence_closes(*fence, line.content)) {
        fence.reset();
        if (!role.empty()) {
          std::string code = join(captured);
          if (role == "starter") {
            spec.starter = std::move(code);
          } else if (role == "solution") {
            spec.solution = std::move(code);
          } else {
            spec.tests = std::move(code);
          }
          role.clear();
          captured.clear();
          continue;
        }
        prompt.push_back(line.content);
        continue;
      }
      (role.empty() ? prompt : captured).push_back(line.content);
      continue;
    }
    if ((fence = fence_open(line.content))) {
      const std::string_view info = fence->info;
      const std::string_view first = info.substr(0, info.find_first_of(" \t"));
      if (first == "starter" || first == "solution" || first == "test" || first == "tests") {
        role = first == "tests" ? "test" : std::string(first);
      } else {
        prompt.push_back(line.content);
      }
      continue;
    }
    prompt.push_back(line.content);
  }
  if (fence && !role.empty()) {
    throw Error(ErrorCode::invalid_argument, "unclosed " + role + " fence in code-question");
  }
  spec.prompt = join_trimmed(prompt);
  return spec;
}

ScanResult scan_message(std::string_view message_id, std::string_view source) {
  ScanResult result;
  const auto lines = split_source(source);
  std::map<std::string, std::size_t> per_type;
  std::size_t markdown_begin = 0;

  auto flush_markdown = [&](std::size_t until) {
    if (until > markdown_begin) {
      result.segments.push_back({SegmentKind::markdown,
                                 std::string(source.substr(markdown_begin, until - markdown_begin)),
                                 markdown_begin, std::nullopt});
    }
  };

  std::optional<Fence> fence;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const Line& line = lines[li];
    if (fence) {
      if (fence_closes(*fence, line.content)) fence.reset();
      continue;
    }
    if ((fence = fence_open(line.content))) continue;

    Marker open;
    const auto status = parse_marker(line.content, 3, open);
    if (status == MarkerStatus::malformed) {
      result.diagnostics.push_back({li + 1, "malformed-directive",
                                    "malformed directive marker: " + std::string(line.content)});
      continue;
    }
    if (status == MarkerStatus::none) {
      if (is_container_close(line.content)) {
        result.diagnostics.push_back({li + 1, "stray-close", "':::' without an open container"});
        continue;
      }
      Marker leaf;
      if (parse_marker(line.content, 2, leaf) == MarkerStatus::ok) {
        result.diagnostics.push_back(
            {li + 1, "stray-leaf", "leaf directive ::" + leaf.type + " outside a container"});
      }
      continue;
    }

    // Container body: find the matching close, honoring fences.
    std::optional<Fence> inner_fence;
    std::optional<std::size_t> close;
    for (std::size_t lj = li + 1; lj < lines.size(); ++lj) {
      const auto content = lines[lj].content;
      if (inner_fence) {
        if (fence_closes(*inner_fence, content)) inner_fence.reset();
        continue;
      }
      if ((inner_fence = fence_open(content))) continue;
      if (is_container_close(content)) {
        close = lj;
        break;
      }
      Marker nested;
      if (parse_marker(content, 3, nested) == MarkerStatus::ok) {
        result.diagnostics.push_back({lj + 1, "nested-container",
                                      "nested container :::" + nested.type + " is not supported"});
      }
    }
    if (!close) {
      result.diagnostics.push_back(
          {li + 1, "unclosed-container", "container :::" + open.type + " is never closed"});
      continue;
    }

    Directive d;
    d.type = open.type;
    d.label = open.label;
    d.attribute_text = open.attribute_text;
    d.id = directive_id(message_id, d.type, per_type[d.type]++);
    d.offset = line.begin;
    d.length = lines[*close].end - line.begin;
    d.line = li + 1;
    const std::size_t body_begin = line.end;
    const std::size_t body_end = lines[*close].begin;
    d.body = std::string(source.substr(body_begin, body_end - body_begin));
    try {
      d.attributes = parse_attributes(d.attribute_text);
      if (d.type == kMultipleChoice) {
        d.spec = parse_multiple_choice(d);
      } else if (d.type == kCodeQuestion) {
        d.spec = parse_code_question(d);
      }
    } catch (const Error& e) {
      result.diagnostics.push_back({li + 1, "invalid-directive", d.id + ": " + e.what()});
    }
    if (!is_known_type(d.type)) {
      result.diagnostics.push_back(
          {li + 1, "unknown-directive", "unknown directive type '" + d.type + "'"});
    }

    flush_markdown(d.offset);
    result.segments.push_back({SegmentKind::directive, std::string(source.substr(d.offset, d.length)),
                               d.offset, result.directives.size()});
    markdown_begin = d.offset + d.length;
    result.directives.push_back(std::move(d));
    li = *close;
  }
  flush_markdown(source.size());
  return result;
}

std::vector<Directive> scan_directives(std::string_view message_id, std::string_view source) {
  return scan_message(message_id, source).directives;
}

std::vector<Segment> render_segments(std::string_view source) {
  return scan_message("", source).segments;
}

}  // namespace dpage
