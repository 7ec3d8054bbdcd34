#include "core/service.hpp"

#include <chrono>
#include <ctime>

#include "core/encoding.hpp"
#include "core/errors.hpp"
#include "core/user_state_store.hpp"

namespace dpage {

using nlohmann::json;

ServiceConfig service_config_from_json(const json& doc) {
  ServiceConfig cfg;
  if (doc.is_null()) return cfg;
  if (!doc.is_object()) throw Error(ErrorCode::invalid_argument, "service config must be a JSON object");
  try {
    if (doc.contains("stateDir") && !doc["stateDir"].is_null()) {
      cfg.state_dir = std::filesystem::path(doc["stateDir"].get<std::string>());
    }
    cfg.multi_user = doc.value("multiUser", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("malformed service config: ") + e.what());
  }
  if (doc.contains("llm")) cfg.llm = llm_config_from_json(doc["llm"]);
  if (doc.contains("runners")) cfg.runners = runner_config_from_json(doc["runners"]);
  return cfg;
}

json session_handle_to_json(const SessionHandle& handle) {
  return json{{"sessionId", handle.session_id}, {"pageId", handle.page_id}, {"createdAt", handle.created_at}};
}

struct Service::Session {
  std::mutex mu;
  SessionHandle handle;
  std::string store_key;
  UserState state;
  bool ask_in_flight = false;
  bool run_in_flight = false;
  std::stop_source run_stop;
};

namespace {

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string preview(std::string_view source) {
  std::string text = strip_directives(source);
  for (char& c : text) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  constexpr std::size_t kMax = 80;
  if (text.size() > kMax) {
    std::size_t cut = kMax;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;  // keep UTF-8 whole
    text = text.substr(0, cut) + "...";
  }
  return text;
}

}  // namespace

Service::Service(Page page, ServiceConfig config, std::shared_ptr<ChatTransport> transport)
    : page_(std::move(page)),
      config_(std::move(config)),
      transport_(transport ? std::move(transport) : std::make_shared<HttpChatTransport>()) {
  const ValidationReport report = validate(page_);
  if (!report.ok()) throw ValidationError(report);
  snapshots_ = all_snapshots(page_);
  for (const auto& [id, cell] : page_.cells) {
    for (auto& d : scan_directives(id, cell.source)) {
      directive_cells_.emplace(d.id, id);
      directives_.emplace(d.id, std::move(d));
    }
  }
}

Service::~Service() = default;

std::shared_ptr<Service::Session> Service::session(std::string_view id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + std::string(id) + "'");
  return it->second;
}

void Service::persist(const Session& s) const {
  if (config_.state_dir) save_state(s.state, *config_.state_dir, s.store_key);
}

const Directive& Service::directive(std::string_view id) const {
  const auto it = directives_.find(std::string(id));
  if (it == directives_.end()) throw Error(ErrorCode::not_found, "unknown directive '" + std::string(id) + "'");
  return it->second;
}

void Service::require_reached(const Session& s, const Directive& d) const {
  const std::string& cell = directive_cells_.at(d.id);
  if (!s.state.visited.contains(cell)) {
    throw Error(ErrorCode::illegal_operation, "'" + d.id + "' is in cell '" + cell + "', which has not been reached");
  }
}

SessionHandle Service::create_session(std::string_view page_id) {
  if (page_id != page_.id) throw Error(ErrorCode::not_found, "page '" + std::string(page_id) + "' is not served here");
  auto s = std::make_shared<Session>();
  s->handle = {random_hex(16), page_.id, now_iso8601()};
  s->store_key = config_.multi_user ? s->handle.session_id : page_.id;
  s->state = start_session(page_);
  if (config_.state_dir && !config_.multi_user) {
    try {
      if (auto stored = load_state(s->store_key, *config_.state_dir); stored && stored->page_id == page_.id) {
        s->state = stored->page_content_hash == s->state.page_content_hash ? std::move(*stored)
                                                                           : reconcile_state(page_, std::move(*stored));
      }
    } catch (const Error& e) {
      // Corrupt files are already moved aside by the store; start fresh.
      if (e.code() != ErrorCode::corrupt_state) throw;
    }
  }
  persist(*s);
  std::unique_lock lock(sessions_mu_);
  sessions_.emplace(s->handle.session_id, s);
  return s->handle;
}

UserState Service::state(std::string_view session_id) const {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  return s->state;
}

json Service::status_of(const UserState& state, bool ask_pending) const {
  const auto divergence = divergence_point(page_, state);
  const auto main = back_to_main(page_, state);
  return json{{"currentCellId", state.current_cell_id},
              {"targetId", page_.target_id},
              {"divergencePoint", divergence ? json(*divergence) : json(nullptr)},
              {"backToMain", main ? json(*main) : json(nullptr)},
              {"reachedTarget", reached_target(page_, state)},
              {"visited", state.visited},
              {"askPending", ask_pending}};
}

json Service::thread(std::string_view session_id) const {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  json out = json::array();
  for (const auto& v : visible_thread(page_, s->state)) out.push_back(cell_view_to_json(v));
  return out;
}

json Service::responses(std::string_view session_id) const {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  const DialogTree tree(page_, s->state);
  json out = json::array();
  for (const auto& id : available_responses(page_, s->state)) {
    const Cell& c = tree.cell(id);
    const Persona* p = page_.find_persona(c.persona_id);
    out.push_back({{"cellId", id},
                   {"preview", preview(c.source)},
                   {"personaName", p ? p->name : c.persona_id},
                   {"overlay", tree.is_overlay(id)},
                   {"visited", s->state.visited.contains(id)}});
  }
  return out;
}

json Service::status(std::string_view session_id) const {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  return status_of(s->state, s->ask_in_flight);
}

json Service::select(std::string_view session_id, std::string_view cell_id) {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  s->state = select_response(page_, s->state, cell_id);
  persist(*s);
  return status_of(s->state, s->ask_in_flight);
}

json Service::jump(std::string_view session_id, std::string_view cell_id) {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  s->state = jump_to(page_, s->state, cell_id);
  persist(*s);
  return status_of(s->state, s->ask_in_flight);
}

json Service::ask(std::string_view session_id, std::string_view question) {
  auto s = session(session_id);
  UserState snapshot;
  {
    std::lock_guard lock(s->mu);
    if (s->ask_in_flight) throw Error(ErrorCode::busy, "another question is still being answered");
    s->ask_in_flight = true;
    snapshot = s->state;
  }
  // The session stays usable for navigation while the request is out.
  AskResult result;
  try {
    result = dpage::ask(page_, snapshot, question, config_.llm, *transport_);
  } catch (...) {
    std::lock_guard lock(s->mu);
    s->ask_in_flight = false;
    throw;
  }
  std::lock_guard lock(s->mu);
  s->ask_in_flight = false;
  // Only this call creates overlay cells while the flag is held, so the new ids are free.
  UserState& live = s->state;
  std::string parent = snapshot.current_cell_id;
  for (const auto& id : result.new_cell_ids) {
    live.overlay_cells.emplace(id, result.state.overlay_cells.at(id));
    live.overlay_children[parent].push_back(id);
    live.visited.insert(id);
    parent = id;
  }
  live.current_cell_id = result.new_cell_ids.back();
  persist(*s);
  return json{{"newCellIds", result.new_cell_ids}, {"status", status_of(live, false)}};
}

json Service::code(std::string_view session_id, std::string_view cell_id) const {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  const DialogTree tree(page_, s->state);
  const Cell& c = tree.cell(cell_id);
  std::string base_id(cell_id);
  while (!page_.find_cell(base_id)) base_id = *tree.parent(base_id);  // overlay: nearest base ancestor

  const CodeSnapshot& snap = snapshots_.at(base_id);
  json diffs = json::array();
  for (const auto& d : c.code_diffs) diffs.push_back(file_diff_to_json(d));
  json pointers = json::array();
  for (const auto& p : c.pointers) {
    pointers.push_back({{"file", p.file}, {"startLine", p.start_line}, {"endLine", p.end_line}});
  }
  json issues = json::array();
  for (const auto& f : check_pointers(c, snap)) issues.push_back(f.message);
  return json{{"cellId", std::string(cell_id)},
              {"files", snap.files},
              {"diffs", std::move(diffs)},
              {"pointers", std::move(pointers)},
              {"pointerIssues", std::move(issues)}};
}

json Service::answer(std::string_view session_id, std::string_view directive_id, const json& payload) {
  const Directive& d = directive(directive_id);
  if (!payload.is_object() || !payload.contains("action") || !payload["action"].is_string()) {
    throw Error(ErrorCode::invalid_argument, "answer payload needs an \"action\"");
  }
  const std::string action = payload["action"].get<std::string>();
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  require_reached(*s, d);
  AnswerRecord record;
  record.directive_id = d.id;
  if (auto it = s->state.answers.find(d.id); it != s->state.answers.end()) record = it->second;
  json out = json::object();

  if (action == "select") {
    const auto* mc = std::get_if<MultipleChoiceSpec>(&d.spec);
    if (!mc) throw Error(ErrorCode::invalid_argument, "'" + d.id + "' is not a multiple-choice question");
    std::set<std::size_t> selected;
    try {
      for (const auto& v : payload.at("selected")) selected.insert(v.get<std::size_t>());
    } catch (const json::exception&) {
      throw Error(ErrorCode::invalid_argument, "\"selected\" must be an array of option indices");
    }
    const ChoiceGrade grade = answer_multiple_choice(*mc, selected);
    record = record_choice(std::move(record), selected, grade);
    json feedback = json::array();
    for (const auto& [i, text] : grade.feedback) feedback.push_back({{"index", i}, {"text", text}});
    out["correct"] = grade.correct;
    out["feedback"] = std::move(feedback);
  } else if (action == "skip") {
    record = skip(std::move(record));
  } else if (action == "reveal") {
    if (const auto* mc = std::get_if<MultipleChoiceSpec>(&d.spec)) {
      out["solution"] = reveal_answer(*mc);
    } else if (const auto* cq = std::get_if<CodeQuestionSpec>(&d.spec)) {
      out["solution"] = reveal_answer(*cq);
    } else {
      throw Error(ErrorCode::invalid_argument, "'" + d.id + "' has nothing to reveal");
    }
    record = mark_revealed(std::move(record));
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown answer action '" + action + "'");
  }
  s->state.answers[d.id] = record;
  persist(*s);
  out["record"] = answer_to_json(record);
  return out;
}

json Service::run(std::string_view session_id, std::string_view directive_id, std::string code) {
  const Directive& d = directive(directive_id);
  const auto* cq = std::get_if<CodeQuestionSpec>(&d.spec);
  if (!cq) throw Error(ErrorCode::invalid_argument, "'" + d.id + "' is not a code question");
  auto s = session(session_id);
  std::stop_token stop;
  {
    std::lock_guard lock(s->mu);
    if (s->run_in_flight) throw Error(ErrorCode::busy, "a code run is already in progress");
    require_reached(*s, d);
    AnswerRecord record;
    record.directive_id = d.id;
    if (auto it = s->state.answers.find(d.id); it != s->state.answers.end()) record = it->second;
    s->state.answers[d.id] = record_code_submission(std::move(record), code);
    persist(*s);
    s->run_in_flight = true;
    s->run_stop = std::stop_source();
    stop = s->run_stop.get_token();
  }
  RunResult result;
  try {
    result = submit_code_answer(*cq, code, config_.runners, stop);
  } catch (...) {
    std::lock_guard lock(s->mu);
    s->run_in_flight = false;
    throw;
  }
  std::lock_guard lock(s->mu);
  s->run_in_flight = false;
  AnswerRecord& record = s->state.answers[d.id];
  record = record_code_result(std::move(record), result);
  persist(*s);
  return json{{"result", run_result_to_json(result)}, {"record", answer_to_json(record)}};
}

bool Service::cancel_run(std::string_view session_id) {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  if (!s->run_in_flight) return false;
  s->run_stop.request_stop();
  return true;
}

const std::vector<std::uint8_t>& Service::media(std::string_view page_id, std::string_view filename) const {
  if (page_id != page_.id) throw Error(ErrorCode::not_found, "page '" + std::string(page_id) + "' is not served here");
  const auto it = page_.media.find(std::string(filename));
  if (it == page_.media.end()) throw Error(ErrorCode::not_found, "no media named '" + std::string(filename) + "'");
  return it->second;
}

}  // namespace dpage
