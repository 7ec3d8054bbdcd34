#include "core/code_state.hpp"

#include "core/errors.hpp"

namespace dpage {

CodeSnapshot snapshot_at(const Page& page, std::string_view cell_id) {
  CodeSnapshot snap;
  for (const auto& id : ancestors(page, cell_id)) {
    snap = apply_diff(snap, page.cell(id).code_diffs);
  }
  return snap;
}

std::map<std::string, CodeSnapshot> all_snapshots(const Page& page) {
  std::map<std::string, CodeSnapshot> out;
  const Cell& root = page.cell(page.root_id);
  out.emplace(root.id, apply_diff(CodeSnapshot{}, root.code_diffs));
  std::vector<std::string> stack{root.id};
  while (!stack.empty()) {
    const std::string id = std::move(stack.back());
    stack.pop_back();
    const CodeSnapshot& parent_snap = out.at(id);
    for (const auto& child_id : page.cell(id).child_ids) {
      if (out.contains(child_id)) {
        throw Error(ErrorCode::invalid_argument, "cell '" + child_id + "' reached twice");
      }
      const Cell& child = page.cell(child_id);
      out.emplace(child_id, apply_diff(parent_snap, child.code_diffs));
      stack.push_back(child_id);
    }
  }
  return out;
}

Page rederive_all(const Page& page, const std::map<std::string, CodeSnapshot>& preserved) {
  const auto parents = parent_map(page);
  Page out = page;
  static const CodeSnapshot empty;
  for (auto& [id, cell] : out.cells) {
    const auto self = preserved.find(id);
    if (self == preserved.end()) {
      throw Error(ErrorCode::invalid_argument, "no preserved snapshot for cell '" + id + "'");
    }
    const CodeSnapshot* base = &empty;
    if (const auto p = parents.find(id); p != parents.end()) {
      const auto ps = preserved.find(p->second);
      if (ps == preserved.end()) {
        throw Error(ErrorCode::invalid_argument,
                    "no preserved snapshot for cell '" + p->second + "'");
      }
      base = &ps->second;
    }
    cell.code_diffs = compute_diff(*base, self->second);
  }
  return out;
}

std::vector<Finding> check_pointers(const Cell& cell, const CodeSnapshot& snapshot) {
  std::vector<Finding> out;
  for (const auto& p : cell.pointers) {
    const auto it = snapshot.files.find(p.file);
    if (it == snapshot.files.end()) {
      out.push_back({Severity::warning, "pointer-range",
                     "pointer refers to file '" + p.file + "' absent from the snapshot", cell.id});
      continue;
    }
    const auto lines = static_cast<int>(line_count(it->second));
    if (p.end_line > lines) {
      out.push_back({Severity::warning, "pointer-range",
                     "pointer " + p.file + ":" + std::to_string(p.start_line) + "-" +
                         std::to_string(p.end_line) + " exceeds " + std::to_string(lines) +
                         " lines",
                     cell.id});
    }
  }
  return out;
}

CodeEdit set_code(const Page& page, std::string_view cell_id, const CodeSnapshot& desired) {
  const Cell& target = page.cell(cell_id);
  auto snaps = all_snapshots(page);
  snaps[target.id] = desired;
  CodeEdit edit{rederive_all(page, snaps), {}};
  edit.pointer_warnings = check_pointers(target, desired);
  return edit;
}

}  // namespace dpage
