#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "core/line_diff.hpp"
#include "core/page_model.hpp"

namespace dpage {

// Fold of apply_diff over ancestors(cell_id), starting from the empty snapshot.
CodeSnapshot snapshot_at(const Page& page, std::string_view cell_id);

// Snapshot of every cell reachable from the root, in one traversal.
std::map<std::string, CodeSnapshot> all_snapshots(const Page& page);

// Rewrites every stored diff so that each cell reconstructs to `preserved[cell]`.
// `preserved` must cover every cell of the page.
Page rederive_all(const Page& page, const std::map<std::string, CodeSnapshot>& preserved);

struct CodeEdit {
  Page page;
  std::vector<Finding> pointer_warnings;  // pointers of the edited cell now out of range
};

// Sets one cell's full code state; every other cell keeps its snapshot.
CodeEdit set_code(const Page& page, std::string_view cell_id, const CodeSnapshot& desired);

std::vector<Finding> check_pointers(const Cell& cell, const CodeSnapshot& snapshot);

}  // namespace dpage
