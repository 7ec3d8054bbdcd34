#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "core/assessments.hpp"
#include "core/directive_parser.hpp"
#include "core/page_model.hpp"

namespace dpage {

// Per-reader mutable session. Overlay cells (reader questions, LLM answers)
// compose with the immutable page into one combined tree.
struct UserState {
  std::string page_id;
  std::string page_content_hash;
  std::string current_cell_id;
  std::set<std::string> visited;
  std::map<std::string, AnswerRecord> answers;  // keyed by directive id
  std::map<std::string, Cell> overlay_cells;
  std::map<std::string, std::vector<std::string>> overlay_children;  // parent -> overlay ids

  bool operator==(const UserState&) const = default;
};

nlohmann::json user_state_to_json(const UserState& state);
UserState user_state_from_json(const nlohmann::json& doc);  // throws Error(parse)

UserState start_session(const Page& page);

// Read-only view over page + overlay.
class DialogTree {
 public:
  DialogTree(const Page& page, const UserState& state);

  const Cell* find(std::string_view id) const;
  const Cell& cell(std::string_view id) const;  // throws Error(not_found)
  bool is_overlay(std::string_view id) const;
  std::optional<std::string> parent(std::string_view id) const;
  std::vector<std::string> children(std::string_view id) const;
  std::vector<std::string> ancestors(std::string_view id) const;
  const Page& page() const { return page_; }

 private:
  const Page& page_;
  const UserState& state_;
  std::map<std::string, std::string> parents_;
};

struct CellView {
  std::string cell_id;
  std::string persona_id;
  std::string persona_name;
  PersonaKind persona_kind = PersonaKind::other;
  std::vector<Segment> segments;
  std::vector<Directive> directives;
  bool has_multiple_responses = false;
  bool is_divergence_point = false;
  bool ai_warning = false;  // aiGenerated && !verified
  bool code_changed = false;
  bool overlay = false;
};

nlohmann::json cell_view_to_json(const CellView& view);

std::vector<CellView> visible_thread(const Page& page, const UserState& state);
std::vector<std::string> available_responses(const Page& page, const UserState& state);
UserState select_response(const Page& page, const UserState& state, std::string_view cell_id);
std::optional<std::string> divergence_point(const Page& page, const UserState& state);
std::optional<std::string> back_to_main(const Page& page, const UserState& state);
UserState jump_to(const Page& page, const UserState& state, std::string_view cell_id);
bool reached_target(const Page& page, const UserState& state);

// Attaches a new overlay cell under `parent_id`; returns its id.
std::string append_overlay_cell(const Page& page, UserState& state, std::string_view parent_id, Cell cell);

// Re-keys a stored state against a (possibly edited) page: answers for vanished
// directives and overlay branches hanging off vanished cells are dropped, and the
// current cell falls back to the root when it no longer resolves.
UserState reconcile_state(const Page& page, UserState state);

}  // namespace dpage
