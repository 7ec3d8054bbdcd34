#include <condition_variable>
#include <future>
#include <thread>

#include "core/errors.hpp"
#include "core/mock_llm.hpp"
#include "core/service.hpp"
#include "core/user_state_store.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace dpage;
using nlohmann::json;

namespace {

ServiceConfig config_with(const MockChatServer* server, std::optional<std::filesystem::path> dir = {}) {
  ServiceConfig cfg;
  cfg.state_dir = std::move(dir);
  if (server) {
    cfg.llm.enabled = true;
    cfg.llm.endpoint_url = server->url();
    cfg.llm.timeout_ms = 5000;
  }
  cfg.runners.languages["python"] = LanguageRunner{{"/bin/sh", "-c", "exit 0", "{file}"}, 2000, true};
  return cfg;
}

void walk(Service& svc, const std::string& sid, std::initializer_list<const char*> ids) {
  for (const auto* id : ids) svc.select(sid, id);
}

// Blocks inside complete() until released.
class GateTransport final : public ChatTransport {
 public:
  std::string complete(const std::vector<ChatTurn>&, const LlmConfig&) override {
    std::unique_lock lock(mu_);
    entered_ = true;
    cv_.notify_all();
    cv_.wait(lock, [&] { return open_; });
    return "gated reply";
  }
  void wait_entered() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return entered_; });
  }
  void open() {
    std::lock_guard lock(mu_);
    open_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  bool entered_ = false;
  bool open_ = false;
};

}  // namespace

TEST_CASE("session walk-through") {
  const Page page = testing::load_fixture("fig3.dpage");
  Service svc(page, config_with(nullptr));
  const auto h = svc.create_session("for-loops");
  CHECK(h.session_id.size() == 32);
  CHECK(svc.thread(h.session_id).size() == 1);
  CHECK(svc.thread(h.session_id)[0]["cellId"] == "1a");
  walk(svc, h.session_id, {"2a", "3a", "4b"});
  const json st = svc.status(h.session_id);
  CHECK(st["backToMain"] == "3b");
  CHECK(st["divergencePoint"] == "3a");
  CHECK(st["reachedTarget"] == false);
  CHECK(svc.responses(h.session_id).size() == 2);
  CHECK(svc.jump(h.session_id, "3b")["currentCellId"] == "3b");

  const json wrong = svc.answer(h.session_id, "3b:multiple-choice:0", {{"action", "select"}, {"selected", {0}}});
  CHECK(wrong["correct"] == false);
  CHECK(wrong["feedback"][0]["text"] == "Not quite. That adds to 10");
  const json right = svc.answer(h.session_id, "3b:multiple-choice:0", {{"action", "select"}, {"selected", {1}}});
  CHECK(right["correct"] == true);
  CHECK(right["record"]["attempts"] == 2);
  CHECK(right["record"]["status"] == "correct");

  CHECK_THROWS_AS(svc.answer(h.session_id, "5d:code-question:0", {{"action", "reveal"}}), Error);  // not reached
  walk(svc, h.session_id, {"4c", "5d"});
  CHECK(svc.status(h.session_id)["reachedTarget"] == true);
  const json reveal = svc.answer(h.session_id, "5d:code-question:0", {{"action", "reveal"}});
  CHECK(reveal["solution"].get<std::string>().find("return total") != std::string::npos);
  const json run = svc.run(h.session_id, "5d:code-question:0", "def total_of(xs): return sum(xs)");
  CHECK(run["result"]["exitStatus"] == 0);
  CHECK(run["record"]["attempts"] == 1);

  const json code = svc.code(h.session_id, "1a");
  CHECK(code["files"]["main.py"].get<std::string>().starts_with("total = 0"));
  CHECK(code["pointers"][0]["startLine"] == 2);

  CHECK_THROWS_AS(svc.create_session("other"), Error);
  CHECK_THROWS_AS(svc.thread("nope"), Error);
  CHECK_THROWS_AS(svc.answer(h.session_id, "zz:multiple-choice:0", {{"action", "skip"}}), Error);
  CHECK_THROWS_AS(svc.answer(h.session_id, "3b:multiple-choice:0", {{"action", "dance"}}), Error);
  CHECK_THROWS_AS(svc.ask(h.session_id, "q"), Error);  // LLM disabled
}

TEST_CASE("invalid pages are refused") {
  const Page bad = decode_page(testing::read_file(testing::fixture_path("invalid_dangling.dpage")));
  CHECK_THROWS_AS(Service(bad, ServiceConfig{}), ValidationError);
}

TEST_CASE("progress persists per page") {
  testing::TempDir dir;
  const Page page = testing::load_fixture("fig3.dpage");
  {
    Service svc(page, config_with(nullptr, dir.path()));
    const auto h = svc.create_session(page.id);
    walk(svc, h.session_id, {"2a", "3b"});
  }
  Service again(page, config_with(nullptr, dir.path()));
  const auto h = again.create_session(page.id);
  CHECK(again.status(h.session_id)["currentCellId"] == "3b");
}

TEST_CASE("multi-user sessions are independent") {
  testing::TempDir dir;
  const Page page = testing::load_fixture("fig3.dpage");
  ServiceConfig cfg = config_with(nullptr, dir.path());
  cfg.multi_user = true;
  Service svc(page, cfg);
  const auto a = svc.create_session(page.id);
  const auto b = svc.create_session(page.id);
  CHECK(a.session_id != b.session_id);
  auto fa = std::async(std::launch::async, [&] { walk(svc, a.session_id, {"2a", "3a", "4a", "5a"}); });
  auto fb = std::async(std::launch::async, [&] { walk(svc, b.session_id, {"2a", "3b", "4c"}); });
  fa.get();
  fb.get();
  CHECK(svc.status(a.session_id)["currentCellId"] == "5a");
  CHECK(svc.status(b.session_id)["currentCellId"] == "4c");
  CHECK(load_state(a.session_id, dir.path())->current_cell_id == "5a");
  CHECK(load_state(b.session_id, dir.path())->current_cell_id == "4c");
}

TEST_CASE("a second ask while one is pending is rejected") {
  const Page page = testing::load_fixture("fig3.dpage");
  auto gate = std::make_shared<GateTransport>();
  ServiceConfig cfg;
  cfg.llm.enabled = true;
  Service svc(page, cfg, gate);
  const auto h = svc.create_session(page.id);
  auto first = std::async(std::launch::async, [&] { return svc.ask(h.session_id, "first?"); });
  gate->wait_entered();
  CHECK(svc.status(h.session_id)["askPending"] == true);
  try {
    svc.ask(h.session_id, "second?");
    FAIL("expected busy");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::busy);
  }
  gate->open();
  const json out = first.get();
  CHECK(out["newCellIds"].size() == 2);
  CHECK(svc.thread(h.session_id).back()["aiWarning"] == true);
}

TEST_CASE("ask with the mock endpoint and failure injection") {
  testing::TempDir dir;
  const Page page = testing::load_fixture("fig3.dpage");
  MockChatServer server({"Sure."});
  Service svc(page, config_with(&server, dir.path()));
  const auto h = svc.create_session(page.id);
  walk(svc, h.session_id, {"2a"});
  const UserState before = svc.state(h.session_id);
  server.fail_next(1, 503);
  CHECK_THROWS_AS(svc.ask(h.session_id, "why?"), Error);
  CHECK(svc.state(h.session_id) == before);
  CHECK(load_state(page.id, dir.path()) == before);
  const json out = svc.ask(h.session_id, "why?");
  CHECK(out["status"]["currentCellId"] == out["newCellIds"][1]);
  const auto thread = svc.thread(h.session_id);
  CHECK(thread.size() == 4);
  CHECK(thread.back()["aiWarning"] == true);
  CHECK(thread[2]["aiWarning"] == false);
}

TEST_CASE("media") {
  const Page page = testing::load_fixture("media.dpage");
  Service svc(page, ServiceConfig{});
  CHECK(svc.media(page.id, "logo.png") == page.media.at("logo.png"));
  CHECK_THROWS_AS(svc.media(page.id, "nope.png"), Error);
}
