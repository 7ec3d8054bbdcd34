#include "core/navigation.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace dpage {

using nlohmann::json;

json user_state_to_json(const UserState& state) {
  json answers = json::object();
  for (const auto& [id, rec] : state.answers) answers[id] = answer_to_json(rec);
  json overlay = json::object();
  for (const auto& [id, cell] : state.overlay_cells) overlay[id] = cell_to_json(cell);
  return json{{"pageId", state.page_id},
              {"pageContentHash", state.page_content_hash},
              {"currentCellId", state.current_cell_id},
              {"visited", state.visited},
              {"answers", std::move(answers)},
              {"overlayCells", std::move(overlay)},
              {"overlayChildren", state.overlay_children}};
}

UserState user_state_from_json(const json& doc) {
  try {
    UserState s;
    s.page_id = doc.at("pageId").get<std::string>();
    s.page_content_hash = doc.at("pageContentHash").get<std::string>();
    s.current_cell_id = doc.at("currentCellId").get<std::string>();
    s.visited = doc.at("visited").get<std::set<std::string>>();
    for (const auto& [id, rec] : doc.at("answers").items()) s.answers.emplace(id, answer_from_json(rec));
    for (const auto& [id, cell] : doc.at("overlayCells").items()) {
      s.overlay_cells.emplace(id, cell_from_json(cell));
    }
    s.overlay_children = doc.at("overlayChildren").get<std::map<std::string, std::vector<std::string>>>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed user state: ") + e.what());
  }
}

UserState start_session(const Page& page) {
  UserState s;
  s.page_id = page.id;
  s.page_content_hash = content_hash(page);
  s.current_cell_id = page.root_id;
  s.visited.insert(page.root_id);
  return s;
}

DialogTree::DialogTree(const Page& page, const UserState& state)
    : page_(page), state_(state), parents_(parent_map(page)) {
  for (const auto& [parent, kids] : state.overlay_children) {
    for (const auto& k : kids) parents_.emplace(k, parent);
  }
}

const Cell* DialogTree::find(std::string_view id) const {
  if (const Cell* c = page_.find_cell(id)) return c;
  const auto it = state_.overlay_cells.find(std::string(id));
  return it == state_.overlay_cells.end() ? nullptr : &it->second;
}

const Cell& DialogTree::cell(std::string_view id) const {
  if (const Cell* c = find(id)) return *c;
  throw Error(ErrorCode::not_found, "unknown cell '" + std::string(id) + "'");
}

bool DialogTree::is_overlay(std::string_view id) const {
  return page_.find_cell(id) == nullptr && state_.overlay_cells.contains(std::string(id));
}

std::optional<std::string> DialogTree::parent(std::string_view id) const {
  const auto it = parents_.find(std::string(id));
  if (it == parents_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DialogTree::children(std::string_view id) const {
  std::vector<std::string> out;
  if (const Cell* base = page_.find_cell(id)) out = base->child_ids;
  if (const auto it = state_.overlay_children.find(std::string(id)); it != state_.overlay_children.end()) {
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::vector<std::string> DialogTree::ancestors(std::string_view id) const {
  cell(id);
  std::vector<std::string> path{std::string(id)};
  const std::size_t limit = page_.cells.size() + state_.overlay_cells.size();
  while (auto p = parent(path.back())) {
    if (path.size() > limit) throw Error(ErrorCode::invalid_argument, "cycle in combined dialog tree");
    path.push_back(std::move(*p));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

json cell_view_to_json(const CellView& view) {
  json segments = json::array();
  for (const auto& seg : view.segments) {
    json s{{"kind", seg.kind == SegmentKind::markdown ? "markdown" : "directive"}, {"text", seg.text}};
    if (seg.directive_index) {
      const Directive& d = view.directives.at(*seg.directive_index);
      s["directiveId"] = d.id;
      s["dirType"] = d.type;
      if (const auto* mc = std::get_if<MultipleChoiceSpec>(&d.spec)) {
        json opts = json::array();
        // Correctness is not sent to the client; grading happens server-side.
        for (const auto& o : mc->options) opts.push_back(o.label);
        s["prompt"] = mc->prompt;
        s["options"] = std::move(opts);
      } else if (const auto* cq = std::get_if<CodeQuestionSpec>(&d.spec)) {
        s["prompt"] = cq->prompt;
        s["language"] = cq->language;
        s["starter"] = cq->starter;
        s["hasSolution"] = cq->solution.has_value();
      }
    }
    segments.push_back(std::move(s));
  }
  return json{{"cellId", view.cell_id},
              {"personaId", view.persona_id},
              {"personaName", view.persona_name},
              {"personaKind", to_string(view.persona_kind)},
              {"renderedSegments", std::move(segments)},
              {"hasMultipleResponses", view.has_multiple_responses},
              {"isDivergencePoint", view.is_divergence_point},
              {"aiWarning", view.ai_warning},
              {"codeChanged", view.code_changed},
              {"overlay", view.overlay}};
}

namespace {

void require_same_page(const Page& page, const UserState& state) {
  if (state.page_id != page.id) {
    throw Error(ErrorCode::state_mismatch,
                "user state belongs to page '" + state.page_id + "', not '" + page.id + "'");
  }
}

}  // namespace

std::optional<std::string> divergence_point(const Page& page, const UserState& state) {
  const DialogTree tree(page, state);
  const auto target = target_path(page);
  const std::set<std::string> on_target(target.begin(), target.end());
  for (const auto& id : tree.ancestors(state.current_cell_id)) {
    if (!on_target.contains(id)) return id;
  }
  return std::nullopt;
}

std::optional<std::string> back_to_main(const Page& page, const UserState& state) {
  const DialogTree tree(page, state);
  const auto target = target_path(page);
  const auto path = tree.ancestors(state.current_cell_id);
  const std::set<std::string> on_target(target.begin(), target.end());
  for (std::size_t depth = 0; depth < path.size(); ++depth) {
    if (on_target.contains(path[depth])) continue;
    // Both paths start at the root, so they agree up to `depth`. When the reader
    // went past the target, the target itself is the way back.
    return depth < target.size() ? target[depth] : target.back();
  }
  return std::nullopt;
}

std::vector<CellView> visible_thread(const Page& page, const UserState& state) {
  require_same_page(page, state);
  const DialogTree tree(page, state);
  const auto divergence = divergence_point(page, state);
  std::vector<CellView> out;
  for (const auto& id : tree.ancestors(state.current_cell_id)) {
    const Cell& c = tree.cell(id);
    CellView v;
    v.cell_id = id;
    v.persona_id = c.persona_id;
    if (const Persona* p = page.find_persona(c.persona_id)) {
      v.persona_name = p->name;
      v.persona_kind = p->kind;
    }
    ScanResult scan = scan_message(id, c.source);
    v.segments = std::move(scan.segments);
    v.directives = std::move(scan.directives);
    v.has_multiple_responses = tree.children(id).size() > 1;
    v.is_divergence_point = divergence && *divergence == id;
    v.ai_warning = c.ai_generated && !c.verified;
    v.code_changed = !c.code_diffs.empty();
    v.overlay = tree.is_overlay(id);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::string> available_responses(const Page& page, const UserState& state) {
  return DialogTree(page, state).children(state.current_cell_id);
}

UserState select_response(const Page& page, const UserState& state, std::string_view cell_id) {
  require_same_page(page, state);
  const auto options = available_responses(page, state);
  if (std::find(options.begin(), options.end(), cell_id) == options.end()) {
    throw Error(ErrorCode::illegal_operation, "'" + std::string(cell_id) + "' is not a response to '" +
                                                  state.current_cell_id + "'");
  }
  UserState out = state;
  out.current_cell_id = std::string(cell_id);
  out.visited.insert(out.current_cell_id);
  return out;
}

UserState jump_to(const Page& page, const UserState& state, std::string_view cell_id) {
  require_same_page(page, state);
  const DialogTree tree(page, state);
  tree.cell(cell_id);
  const std::string id(cell_id);
  bool allowed = state.visited.contains(id);
  if (!allowed) {
    const auto path = tree.ancestors(state.current_cell_id);
    allowed = std::find(path.begin(), path.end(), id) != path.end();
  }
  if (!allowed) {
    const auto main = back_to_main(page, state);
    allowed = main && *main == id;
  }
  if (!allowed) {
    throw Error(ErrorCode::illegal_operation, "cannot jump to unvisited cell '" + id + "'");
  }
  UserState out = state;
  out.current_cell_id = id;
  out.visited.insert(id);
  return out;
}

bool reached_target(const Page& page, const UserState& state) {
  return state.visited.contains(page.target_id);
}

std::string append_overlay_cell(const Page& page, UserState& state, std::string_view parent_id, Cell cell) {
  DialogTree(page, state).cell(parent_id);
  std::size_t n = state.overlay_cells.size() + 1;
  std::string id;
  do {
    id = "ov-" + std::to_string(n++);
  } while (page.cells.contains(id) || state.overlay_cells.contains(id));
  cell.id = id;
  cell.child_ids.clear();
  cell.code_diffs.clear();
  state.overlay_cells.emplace(id, std::move(cell));
  state.overlay_children[std::string(parent_id)].push_back(id);
  return id;
}

UserState reconcile_state(const Page& page, UserState state) {
  require_same_page(page, state);
  std::set<std::string> directive_ids;
  for (const auto& [id, cell] : page.cells) {
    for (const auto& d : scan_directives(id, cell.source)) directive_ids.insert(d.id);
  }
  std::erase_if(state.answers, [&](const auto& kv) { return !directive_ids.contains(kv.first); });

  // Keep only overlay cells still hanging (transitively) off a base cell.
  std::set<std::string> attached;
  std::vector<std::string> frontier;
  for (const auto& [parent, kids] : state.overlay_children) {
    if (page.cells.contains(parent)) frontier.push_back(parent);
  }
  while (!frontier.empty()) {
    const std::string p = std::move(frontier.back());
    frontier.pop_back();
    const auto it = state.overlay_children.find(p);
    if (it == state.overlay_children.end()) continue;
    for (const auto& k : it->second) {
      if (state.overlay_cells.contains(k) && attached.insert(k).second) frontier.push_back(k);
    }
  }
  std::erase_if(state.overlay_cells, [&](const auto& kv) { return !attached.contains(kv.first); });
  std::erase_if(state.overlay_children, [&](const auto& kv) {
    return !page.cells.contains(kv.first) && !attached.contains(kv.first);
  });
  for (auto& [parent, kids] : state.overlay_children) {
    std::erase_if(kids, [&](const std::string& k) { return !attached.contains(k); });
  }
  std::erase_if(state.overlay_children, [](const auto& kv) { return kv.second.empty(); });

  auto resolves = [&](const std::string& id) {
    return page.cells.contains(id) || state.overlay_cells.contains(id);
  };
  std::erase_if(state.visited, [&](const std::string& id) { return !resolves(id); });
  if (!resolves(state.current_cell_id)) state.current_cell_id = page.root_id;
  state.visited.insert(state.current_cell_id);
  state.page_content_hash = content_hash(page);
  return state;
}

}  // namespace dpage
