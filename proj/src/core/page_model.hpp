#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/line_diff.hpp"

namespace dpage {

inline constexpr int kPageFormatVersion = 1;

enum class PersonaKind { instructor, reader, other };

const char* to_string(PersonaKind kind);
PersonaKind persona_kind_from_string(std::string_view s);

struct Persona {
  std::string id;
  std::string name;
  std::string description;
  PersonaKind kind = PersonaKind::other;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, kept verbatim

  bool operator==(const Persona&) const = default;
};

// Inclusive 1-based line range in a file of the cell's reconstructed snapshot.
struct DeicticPointer {
  std::string file;
  int start_line = 1;
  int end_line = 1;

  bool operator==(const DeicticPointer&) const = default;
};

struct Cell {
  std::string id;
  std::string persona_id;
  std::string source;
  std::vector<std::string> child_ids;
  std::vector<FileDiff> code_diffs;
  std::vector<DeicticPointer> pointers;
  bool ai_generated = false;
  bool verified = true;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Cell&) const = default;
};

struct Page {
  int version = kPageFormatVersion;
  std::string id;
  std::string title;
  std::vector<Persona> personas;
  std::map<std::string, Cell> cells;
  std::string root_id;
  std::string target_id;
  std::map<std::string, std::vector<std::uint8_t>> media;
  nlohmann::json extra = nlohmann::json::object();

  const Cell& cell(std::string_view id) const;  // throws Error(not_found)
  const Cell* find_cell(std::string_view id) const;
  const Persona* find_persona(std::string_view id) const;
  const Persona* persona_of_kind(PersonaKind kind) const;

  bool operator==(const Page&) const = default;
};

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::error;
  std::string code;  // stable machine-readable tag, e.g. "dangling-child"
  std::string message;
  std::string cell_id;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool ok() const { return errors.empty(); }
  bool empty() const { return errors.empty() && warnings.empty(); }
  bool has(std::string_view code) const;
  std::string to_text() const;
};

nlohmann::json report_to_json(const ValidationReport& report);

// Invariant violation at load time; carries the full report.
class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// JSON wire form; decode performs structural checks only.
nlohmann::json page_to_json(const Page& page);
Page page_from_json(const nlohmann::json& doc);
nlohmann::json cell_to_json(const Cell& cell);
Cell cell_from_json(const nlohmann::json& doc);
nlohmann::json file_diff_to_json(const FileDiff& diff);
FileDiff file_diff_from_json(const nlohmann::json& doc);

// Parse without validation. Throws Error(parse).
Page decode_page(std::string_view bytes);
// Parse and validate. Throws Error(parse) or ValidationError.
Page load_page(std::string_view bytes);
// Canonical form: UTF-8, sorted keys, two-space indent, trailing newline.
std::string save_page(const Page& page);
std::string content_hash(const Page& page);

ValidationReport validate(const Page& page);

// child id -> parent id for every listed child edge.
std::map<std::string, std::string> parent_map(const Page& page);
std::vector<std::string> ancestors(const Page& page, std::string_view cell_id);
std::vector<std::string> target_path(const Page& page);
bool in_subtree(const Page& page, std::string_view root, std::string_view cell_id);

struct CellDraft {
  std::string persona_id;
  std::string source;
  bool ai_generated = false;
};

enum class EditOrigin { author, llm };

std::string next_cell_id(const Page& page, std::string_view prefix = "c");

std::pair<Page, std::string> add_cell(const Page& page, std::string_view parent_id,
                                      const CellDraft& draft);
Page edit_cell_source(const Page& page, std::string_view cell_id, std::string source,
                      EditOrigin origin = EditOrigin::author);
Page move_cell(const Page& page, std::string_view cell_id, std::string_view new_parent_id,
               std::size_t index);
// Children of the deleted cell take its place in the parent's child list.
Page delete_cell(const Page& page, std::string_view cell_id);

// Skeleton page: instructor + reader persona, one welcome cell that is also the target.
Page new_page(std::string title);

}  // namespace dpage
