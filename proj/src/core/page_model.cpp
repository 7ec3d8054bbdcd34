#include "core/page_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "core/code_state.hpp"
#include "core/directive_parser.hpp"
#include "core/encoding.hpp"

namespace dpage {

using nlohmann::json;

const char* to_string(PersonaKind kind) {
  switch (kind) {
    case PersonaKind::instructor: return "instructor";
    case PersonaKind::reader: return "reader";
    case PersonaKind::other: return "other";
  }
  return "other";
}

PersonaKind persona_kind_from_string(std::string_view s) {
  if (s == "instructor") return PersonaKind::instructor;
  if (s == "reader") return PersonaKind::reader;
  if (s == "other") return PersonaKind::other;
  throw Error(ErrorCode::parse, "unknown persona kind '" + std::string(s) + "'");
}

const Cell* Page::find_cell(std::string_view id) const {
  const auto it = cells.find(std::string(id));
  return it == cells.end() ? nullptr : &it->second;
}

const Cell& Page::cell(std::string_view id) const {
  if (const Cell* c = find_cell(id)) return *c;
  throw Error(ErrorCode::not_found, "unknown cell '" + std::string(id) + "'");
}

const Persona* Page::find_persona(std::string_view id) const {
  for (const auto& p : personas) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const Persona* Page::persona_of_kind(PersonaKind kind) const {
  for (const auto& p : personas) {
    if (p.kind == kind) return &p;
  }
  return nullptr;
}

bool ValidationReport::has(std::string_view code) const {
  auto match = [&](const Finding& f) { return f.code == code; };
  return std::any_of(errors.begin(), errors.end(), match) ||
         std::any_of(warnings.begin(), warnings.end(), match);
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  for (const auto& f : errors) out << "error[" << f.code << "]: " << f.message << "\n";
  for (const auto& f : warnings) out << "warning[" << f.code << "]: " << f.message << "\n";
  return out.str();
}

json report_to_json(const ValidationReport& report) {
  auto list = [](const std::vector<Finding>& findings) {
    json out = json::array();
    for (const auto& f : findings) {
      json item{{"code", f.code}, {"message", f.message}};
      if (!f.cell_id.empty()) item["cellId"] = f.cell_id;
      out.push_back(std::move(item));
    }
    return out;
  };
  return json{{"errors", list(report.errors)}, {"warnings", list(report.warnings)}};
}

namespace {

std::string summarize(const ValidationReport& report) {
  std::string msg = "page failed validation with " + std::to_string(report.errors.size()) + " error(s)";
  if (!report.errors.empty()) msg += ": " + report.errors.front().message;
  return msg;
}

// Strict typed field access that reports failures as parse errors.
template <typename T>
T take(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::parse, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse, std::string("field '") + key + "' has the wrong type");
  }
}

const json& take_object(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_object()) {
    throw Error(ErrorCode::parse, std::string("field '") + key + "' must be an object");
  }
  return *it;
}

const json& take_array(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw Error(ErrorCode::parse, std::string("field '") + key + "' must be an array");
  }
  return *it;
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::parse, std::string(what) + " must be an object");
}

json leftovers(const json& obj, std::initializer_list<const char*> known) {
  json out = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      out[it.key()] = it.value();
    }
  }
  return out;
}

void merge_extra(json& out, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!out.contains(it.key())) out[it.key()] = it.value();
  }
}

}  // namespace

ValidationError::ValidationError(ValidationReport report)
    : Error(ErrorCode::validation, summarize(report)), report_(std::move(report)) {}

json file_diff_to_json(const FileDiff& diff) {
  json lines = json::array();
  for (const auto& l : diff.lines) lines.push_back({{"op", to_string(l.op)}, {"text", l.text}});
  return json{{"file", diff.file}, {"deleted", diff.deleted}, {"lines", std::move(lines)},
              {"eofNewline", diff.eof_newline}};
}

FileDiff file_diff_from_json(const json& doc) {
  require_object(doc, "file diff");
  FileDiff d;
  d.file = take<std::string>(doc, "file");
  d.deleted = doc.contains("deleted") ? take<bool>(doc, "deleted") : false;
  d.eof_newline = doc.contains("eofNewline") ? take<bool>(doc, "eofNewline") : true;
  if (doc.contains("lines")) {
    for (const auto& l : take_array(doc, "lines")) {
      require_object(l, "diff line");
      d.lines.push_back({line_op_from_string(take<std::string>(l, "op")), take<std::string>(l, "text")});
    }
  }
  return d;
}

json cell_to_json(const Cell& cell) {
  json diffs = json::array();
  for (const auto& d : cell.code_diffs) diffs.push_back(file_diff_to_json(d));
  json pointers = json::array();
  for (const auto& p : cell.pointers) {
    pointers.push_back({{"file", p.file}, {"startLine", p.start_line}, {"endLine", p.end_line}});
  }
  json out{{"id", cell.id},
           {"personaId", cell.persona_id},
           {"source", cell.source},
           {"childIds", cell.child_ids},
           {"codeDiffs", std::move(diffs)},
           {"pointers", std::move(pointers)},
           {"aiGenerated", cell.ai_generated},
           {"verified", cell.verified}};
  merge_extra(out, cell.extra);
  return out;
}

Cell cell_from_json(const json& doc) {
  require_object(doc, "cell");
  Cell c;
  c.id = take<std::string>(doc, "id");
  c.persona_id = take<std::string>(doc, "personaId");
  c.source = take<std::string>(doc, "source");
  c.child_ids = take<std::vector<std::string>>(doc, "childIds");
  if (doc.contains("codeDiffs")) {
    for (const auto& d : take_array(doc, "codeDiffs")) c.code_diffs.push_back(file_diff_from_json(d));
  }
  if (doc.contains("pointers")) {
    for (const auto& p : take_array(doc, "pointers")) {
      require_object(p, "pointer");
      c.pointers.push_back(
          {take<std::string>(p, "file"), take<int>(p, "startLine"), take<int>(p, "endLine")});
    }
  }
  c.ai_generated = doc.contains("aiGenerated") ? take<bool>(doc, "aiGenerated") : false;
  c.verified = doc.contains("verified") ? take<bool>(doc, "verified") : !c.ai_generated;
  c.extra = leftovers(doc, {"id", "personaId", "source", "childIds", "codeDiffs", "pointers",
                            "aiGenerated", "verified"});
  return c;
}

json page_to_json(const Page& page) {
  json personas = json::array();
  for (const auto& p : page.personas) {
    json item{{"id", p.id}, {"name", p.name}, {"description", p.description},
              {"kind", to_string(p.kind)}};
    merge_extra(item, p.extra);
    personas.push_back(std::move(item));
  }
  json cells = json::object();
  for (const auto& [id, cell] : page.cells) cells[id] = cell_to_json(cell);
  json media = json::object();
  for (const auto& [name, bytes] : page.media) media[name] = base64_encode(bytes);
  json out{{"version", page.version},   {"id", page.id},       {"title", page.title},
           {"personas", std::move(personas)}, {"rootId", page.root_id}, {"targetId", page.target_id},
           {"cells", std::move(cells)}, {"media", std::move(media)}};
  merge_extra(out, page.extra);
  return out;
}

Page page_from_json(const json& doc) {
  require_object(doc, "page document");
  Page page;
  page.version = take<int>(doc, "version");
  page.id = take<std::string>(doc, "id");
  page.title = take<std::string>(doc, "title");
  for (const auto& p : take_array(doc, "personas")) {
    require_object(p, "persona");
    Persona persona;
    persona.id = take<std::string>(p, "id");
    persona.name = take<std::string>(p, "name");
    persona.description = p.contains("description") ? take<std::string>(p, "description") : "";
    persona.kind = persona_kind_from_string(take<std::string>(p, "kind"));
    persona.extra = leftovers(p, {"id", "name", "description", "kind"});
    page.personas.push_back(std::move(persona));
  }
  page.root_id = take<std::string>(doc, "rootId");
  page.target_id = take<std::string>(doc, "targetId");
  const json& cells = take_object(doc, "cells");
  for (auto it = cells.begin(); it != cells.end(); ++it) {
    Cell c = cell_from_json(it.value());
    if (c.id != it.key()) {
      throw Error(ErrorCode::parse, "cell keyed '" + it.key() + "' declares id '" + c.id + "'");
    }
    page.cells.emplace(it.key(), std::move(c));
  }
  if (doc.contains("media")) {
    const json& media = take_object(doc, "media");
    for (auto it = media.begin(); it != media.end(); ++it) {
      if (!it->is_string()) throw Error(ErrorCode::parse, "media '" + it.key() + "' must be base64 text");
      page.media.emplace(it.key(), base64_decode(it->get<std::string>()));
    }
  }
  page.extra = leftovers(doc, {"version", "id", "title", "personas", "rootId", "targetId", "cells", "media"});
  return page;
}

Page decode_page(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("malformed page document: ") + e.what());
  }
  return page_from_json(doc);
}

Page load_page(std::string_view bytes) {
  Page page = decode_page(bytes);
  ValidationReport report = validate(page);
  if (!report.ok()) throw ValidationError(std::move(report));
  return page;
}

std::string save_page(const Page& page) {
  return page_to_json(page).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

std::string content_hash(const Page& page) { return sha256_hex(save_page(page)); }

std::map<std::string, std::string> parent_map(const Page& page) {
  std::map<std::string, std::string> out;
  for (const auto& [id, cell] : page.cells) {
    for (const auto& child : cell.child_ids) out.emplace(child, id);
  }
  return out;
}

std::vector<std::string> ancestors(const Page& page, std::string_view cell_id) {
  page.cell(cell_id);
  const auto parents = parent_map(page);
  std::vector<std::string> path{std::string(cell_id)};
  while (true) {
    const auto it = parents.find(path.back());
    if (it == parents.end()) break;
    if (path.size() > page.cells.size()) {
      throw Error(ErrorCode::invalid_argument, "cycle above cell '" + std::string(cell_id) + "'");
    }
    path.push_back(it->second);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::string> target_path(const Page& page) { return ancestors(page, page.target_id); }

bool in_subtree(const Page& page, std::string_view root, std::string_view cell_id) {
  std::vector<std::string_view> stack{root};
  std::set<std::string_view> seen;
  while (!stack.empty()) {
    const std::string_view id = stack.back();
    stack.pop_back();
    if (id == cell_id) return true;
    if (!seen.insert(id).second) continue;
    if (const Cell* c = page.find_cell(id)) {
      for (const auto& child : c->child_ids) stack.push_back(child);
    }
  }
  return false;
}

ValidationReport validate(const Page& page) {
  ValidationReport r;
  auto error = [&](std::string code, std::string msg, std::string cell = {}) {
    r.errors.push_back({Severity::error, std::move(code), std::move(msg), std::move(cell)});
  };
  auto warn = [&](std::string code, std::string msg, std::string cell = {}) {
    r.warnings.push_back({Severity::warning, std::move(code), std::move(msg), std::move(cell)});
  };

  if (page.version != kPageFormatVersion) {
    error("unsupported-version", "unsupported page format version " + std::to_string(page.version));
  }

  std::set<std::string> persona_ids;
  int readers = 0;
  int instructors = 0;
  for (const auto& p : page.personas) {
    if (!persona_ids.insert(p.id).second) error("duplicate-persona", "persona id '" + p.id + "' is not unique");
    readers += p.kind == PersonaKind::reader ? 1 : 0;
    instructors += p.kind == PersonaKind::instructor ? 1 : 0;
  }
  if (readers != 1) {
    error("reader-persona", "page needs exactly one reader persona, found " + std::to_string(readers));
  }
  if (instructors < 1) error("instructor-persona", "page needs at least one instructor persona");

  std::map<std::string, std::string> parents;
  for (const auto& [id, cell] : page.cells) {
    if (!persona_ids.contains(cell.persona_id)) {
      error("dangling-persona", "cell '" + id + "' references unknown persona '" + cell.persona_id + "'", id);
    }
    if (!cell.ai_generated && !cell.verified) {
      error("verified-flag", "cell '" + id + "' is author-written but marked unverified", id);
    }
    for (const auto& child : cell.child_ids) {
      if (!page.cells.contains(child)) {
        error("dangling-child", "cell '" + id + "' lists missing child '" + child + "' (" + id + "->" + child + ")", id);
        continue;
      }
      const auto [it, inserted] = parents.emplace(child, id);
      if (!inserted) {
        error("multiple-parents",
              "cell '" + child + "' is a child of both '" + it->second + "' and '" + id + "'", child);
      }
    }
    for (const auto& p : cell.pointers) {
      if (p.start_line < 1 || p.start_line > p.end_line) {
        error("pointer-bounds",
              "pointer " + p.file + ":" + std::to_string(p.start_line) + "-" +
                  std::to_string(p.end_line) + " on cell '" + id + "' has an invalid range",
              id);
      }
    }
    for (const auto& d : cell.code_diffs) {
      if (d.file.empty()) error("diff-file", "cell '" + id + "' has a file diff without a filename", id);
      if (d.deleted && !d.lines.empty()) {
        error("diff-deleted", "cell '" + id + "' deletes '" + d.file + "' but carries lines", id);
      }
    }
  }

  const bool has_root = page.cells.contains(page.root_id);
  if (!has_root) {
    error("missing-root", "root cell '" + page.root_id + "' does not exist");
  } else if (parents.contains(page.root_id)) {
    error("root-has-parent", "root cell '" + page.root_id + "' is listed as a child", page.root_id);
  }
  if (!page.cells.contains(page.target_id)) {
    error("missing-target", "target cell '" + page.target_id + "' does not exist");
  }

  // Reachability from the root over first-parent edges.
  std::set<std::string> reachable;
  if (has_root) {
    std::vector<std::string> stack{page.root_id};
    while (!stack.empty()) {
      const std::string id = std::move(stack.back());
      stack.pop_back();
      if (!reachable.insert(id).second) continue;
      for (const auto& child : page.cells.at(id).child_ids) {
        const auto p = parents.find(child);
        if (p != parents.end() && p->second == id) stack.push_back(child);
      }
    }
  }
  for (const auto& [id, cell] : page.cells) {
    if (!has_root || reachable.contains(id)) continue;
    // Walk up the parent chain: a revisit means a cycle, a parentless end means an orphan.
    std::set<std::string> chain;
    std::string cur = id;
    bool cycle = false;
    while (true) {
      if (!chain.insert(cur).second) {
        cycle = true;
        break;
      }
      const auto p = parents.find(cur);
      if (p == parents.end()) break;
      cur = p->second;
    }
    if (cycle) {
      error("cycle", "cell '" + id + "' lies on a parent cycle", id);
    } else {
      error("orphan", "cell '" + id + "' is not reachable from root '" + page.root_id + "'", id);
    }
  }
  if (page.cells.contains(page.target_id) && has_root && !reachable.contains(page.target_id)) {
    error("unreachable-target", "target cell '" + page.target_id + "' is not reachable from the root",
          page.target_id);
  }

  // Directive audit: IDs unique page-wide, specs well-formed.
  std::map<std::string, std::string> directive_owner;
  for (const auto& [id, cell] : page.cells) {
    const ScanResult scan = scan_message(id, cell.source);
    for (const auto& d : scan.directives) {
      const auto [it, inserted] = directive_owner.emplace(d.id, id);
      if (!inserted) error("directive-collision", "directive id '" + d.id + "' is not unique", id);
    }
    for (const auto& diag : scan.diagnostics) {
      warn("directive-" + diag.code, "cell '" + id + "' line " + std::to_string(diag.line) + ": " + diag.message, id);
    }
  }

  if (!r.ok()) return r;

  // Tree is sound from here on: check code chains, pointers, and the target path.
  std::map<std::string, CodeSnapshot> snaps;
  try {
    snaps = all_snapshots(page);
  } catch (const Error& e) {
    // Locate the first failing cell for a precise report.
    for (const auto& [id, cell] : page.cells) {
      try {
        snapshot_at(page, id);
      } catch (const Error& inner) {
        error("diff-context", "code diff of cell '" + id + "' does not apply: " + inner.what(), id);
        return r;
      }
    }
    error("diff-context", e.what());
    return r;
  }
  for (const auto& [id, cell] : page.cells) {
    for (auto& f : check_pointers(cell, snaps.at(id))) r.warnings.push_back(std::move(f));
  }
  for (const auto& id : target_path(page)) {
    const Cell& c = page.cells.at(id);
    if (c.ai_generated && !c.verified) {
      warn("unverified-target-path", "unverified content on target path: cell '" + id + "'", id);
    }
  }
  return r;
}

std::string next_cell_id(const Page& page, std::string_view prefix) {
  for (std::size_t n = page.cells.size() + 1;; ++n) {
    std::string id = std::string(prefix) + std::to_string(n);
    if (!page.cells.contains(id)) return id;
  }
}

std::pair<Page, std::string> add_cell(const Page& page, std::string_view parent_id,
                                      const CellDraft& draft) {
  page.cell(parent_id);
  if (page.find_persona(draft.persona_id) == nullptr) {
    throw Error(ErrorCode::invalid_argument, "unknown persona '" + draft.persona_id + "'");
  }
  Page out = page;
  Cell cell;
  cell.id = next_cell_id(page);
  cell.persona_id = draft.persona_id;
  cell.source = draft.source;
  cell.ai_generated = draft.ai_generated;
  cell.verified = !draft.ai_generated;
  const std::string id = cell.id;
  out.cells.emplace(id, std::move(cell));
  out.cells.at(std::string(parent_id)).child_ids.push_back(id);
  return {std::move(out), id};
}

Page edit_cell_source(const Page& page, std::string_view cell_id, std::string source,
                      EditOrigin origin) {
  page.cell(cell_id);
  Page out = page;
  Cell& c = out.cells.at(std::string(cell_id));
  c.source = std::move(source);
  if (origin == EditOrigin::llm && c.ai_generated) c.verified = false;
  return out;
}

Page move_cell(const Page& page, std::string_view cell_id, std::string_view new_parent_id,
               std::size_t index) {
  page.cell(cell_id);
  page.cell(new_parent_id);
  if (cell_id == page.root_id) throw Error(ErrorCode::illegal_operation, "the root cell cannot be moved");
  if (in_subtree(page, cell_id, new_parent_id)) {
    throw Error(ErrorCode::illegal_operation, "moving '" + std::string(cell_id) + "' under '" +
                                                  std::string(new_parent_id) + "' would create a cycle");
  }
  const auto snaps = all_snapshots(page);
  const auto parents = parent_map(page);
  Page out = page;
  auto& old_siblings = out.cells.at(parents.at(std::string(cell_id))).child_ids;
  old_siblings.erase(std::find(old_siblings.begin(), old_siblings.end(), cell_id));
  auto& new_siblings = out.cells.at(std::string(new_parent_id)).child_ids;
  if (index > new_siblings.size()) {
    throw Error(ErrorCode::invalid_argument, "index " + std::to_string(index) + " is past the end of '" +
                                                 std::string(new_parent_id) + "' children");
  }
  new_siblings.insert(new_siblings.begin() + static_cast<std::ptrdiff_t>(index), std::string(cell_id));
  return rederive_all(out, snaps);
}

Page delete_cell(const Page& page, std::string_view cell_id) {
  const Cell& doomed = page.cell(cell_id);
  if (cell_id == page.root_id) throw Error(ErrorCode::illegal_operation, "the root cell cannot be deleted");
  if (cell_id == page.target_id) throw Error(ErrorCode::illegal_operation, "the target cell cannot be deleted");
  auto snaps = all_snapshots(page);
  const auto parents = parent_map(page);
  Page out = page;
  auto& siblings = out.cells.at(parents.at(doomed.id)).child_ids;
  const auto pos = std::find(siblings.begin(), siblings.end(), cell_id);
  const auto at = siblings.erase(pos);
  siblings.insert(at, doomed.child_ids.begin(), doomed.child_ids.end());
  out.cells.erase(doomed.id);
  snaps.erase(std::string(cell_id));
  return rederive_all(out, snaps);
}

Page new_page(std::string title) {
  Page page;
  page.id = random_uuid();
  page.title = std::move(title);
  page.personas = {
      {"instructor", "Dr. Ed", "A knowledgeable instructor who explains concepts clearly to novices.",
       PersonaKind::instructor, json::object()},
      {"reader", "Student", "A curious learner working through the tutorial.", PersonaKind::reader,
       json::object()},
  };
  Cell root;
  root.id = "c1";
  root.persona_id = "instructor";
  root.source = "Welcome! In this tutorial we will learn about " + page.title + ".";
  page.root_id = root.id;
  page.target_id = root.id;
  page.cells.emplace(root.id, std::move(root));
  return page;
}

}  // namespace dpage
