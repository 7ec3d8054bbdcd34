#include <cstring>
#include <string>

#include "dpage/dpage.h"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

std::string fixture(const char* name) { return std::string(DPAGE_FIXTURE_DIR) + "/" + name; }

json take_json(char* s) {
  REQUIRE(s != nullptr);
  json out = json::parse(s);
  dpage_free(s);
  return out;
}

struct Loaded {
  dpage_page* page = nullptr;
  explicit Loaded(const char* name) { REQUIRE(dpage_page_load_file(fixture(name).c_str(), &page) == DPAGE_OK); }
  ~Loaded() { dpage_page_free(page); }
};

}  // namespace

TEST_CASE("load, inspect, save") {
  Loaded fig3("fig3.dpage");
  char* info = nullptr;
  REQUIRE(dpage_page_info(fig3.page, &info) == DPAGE_OK);
  const json i = take_json(info);
  CHECK(i["targetPath"] == json::array({"1a", "2a", "3b", "4c", "5d"}));
  CHECK(i["cellCount"] == 11);

  char* bytes = nullptr;
  size_t len = 0;
  REQUIRE(dpage_page_save(fig3.page, &bytes, &len) == DPAGE_OK);
  dpage_page* again = nullptr;
  REQUIRE(dpage_page_load(bytes, len, &again) == DPAGE_OK);
  char* bytes2 = nullptr;
  size_t len2 = 0;
  REQUIRE(dpage_page_save(again, &bytes2, &len2) == DPAGE_OK);
  CHECK(len == len2);
  CHECK(std::memcmp(bytes, bytes2, len) == 0);
  dpage_free(bytes);
  dpage_free(bytes2);
  dpage_page_free(again);

  char* cell = nullptr;
  REQUIRE(dpage_page_cell(fig3.page, "4b", &cell) == DPAGE_OK);
  CHECK(take_json(cell)["personaId"] == "alex");
  CHECK(dpage_page_cell(fig3.page, "zz", &cell) == DPAGE_E_NOT_FOUND);
}

TEST_CASE("errors carry status, message and detail") {
  dpage_page* page = nullptr;
  CHECK(dpage_page_load_file(fixture("invalid_dangling.dpage").c_str(), &page) == DPAGE_E_VALIDATION);
  CHECK(page == nullptr);
  CHECK(std::string(dpage_last_error_message()).find("9z") != std::string::npos);
  const json detail = json::parse(dpage_last_error_detail());
  CHECK(detail["errors"][0]["code"] == "dangling-child");

  CHECK(dpage_page_load("{", 1, &page) == DPAGE_E_PARSE);
  CHECK(std::string(dpage_last_error_detail()) == "null");
  CHECK(dpage_page_load_file("/no/such/file", &page) == DPAGE_E_IO);
  CHECK(dpage_page_info(nullptr, nullptr) == DPAGE_E_INVALID_ARGUMENT);
  CHECK(std::string(dpage_status_name(DPAGE_E_BUSY)) == "busy");

  char* report = nullptr;
  size_t errors = 0;
  REQUIRE(dpage_validate_file(fixture("invalid_dangling.dpage").c_str(), &report, &errors) == DPAGE_OK);
  CHECK(errors == 1);
  dpage_free(report);
  CHECK(std::string(dpage_last_error_message()).empty());
}

TEST_CASE("reader session through the C API") {
  Loaded fig3("fig3.dpage");
  dpage_service* svc = nullptr;
  REQUIRE(dpage_service_create(fig3.page, R"({"multiUser":false})", &svc) == DPAGE_OK);
  char* out = nullptr;
  REQUIRE(dpage_session_create(svc, "for-loops", &out) == DPAGE_OK);
  const std::string sid = take_json(out)["sessionId"];
  for (const char* id : {"2a", "3a", "4b"}) {
    REQUIRE(dpage_session_select(svc, sid.c_str(), id, &out) == DPAGE_OK);
    dpage_free(out);
  }
  REQUIRE(dpage_session_thread(svc, sid.c_str(), &out) == DPAGE_OK);
  CHECK(take_json(out).size() == 4);
  REQUIRE(dpage_session_status(svc, sid.c_str(), &out) == DPAGE_OK);
  CHECK(take_json(out)["backToMain"] == "3b");
  CHECK(dpage_session_select(svc, sid.c_str(), "3b", &out) == DPAGE_E_ILLEGAL_OPERATION);
  REQUIRE(dpage_session_jump(svc, sid.c_str(), "3b", &out) == DPAGE_OK);
  dpage_free(out);
  REQUIRE(dpage_session_answer(svc, sid.c_str(), "3b:multiple-choice:0", R"({"action":"select","selected":[1]})",
                               &out) == DPAGE_OK);
  CHECK(take_json(out)["correct"] == true);
  CHECK(dpage_session_answer(svc, sid.c_str(), "3b:multiple-choice:0", "{oops", &out) == DPAGE_E_INVALID_ARGUMENT);
  CHECK(dpage_session_ask(svc, sid.c_str(), "why?", &out) == DPAGE_E_LLM);
  int was_running = 1;
  REQUIRE(dpage_session_cancel_run(svc, sid.c_str(), &was_running) == DPAGE_OK);
  CHECK(was_running == 0);
  REQUIRE(dpage_session_state(svc, sid.c_str(), &out) == DPAGE_OK);
  CHECK(take_json(out)["currentCellId"] == "3b");
  dpage_service_free(svc);
}

TEST_CASE("media through the C API") {
  Loaded media("media.dpage");
  dpage_service* svc = nullptr;
  REQUIRE(dpage_service_create(media.page, nullptr, &svc) == DPAGE_OK);
  unsigned char* data = nullptr;
  size_t len = 0;
  REQUIRE(dpage_service_media(svc, "media-demo", "logo.png", &data, &len) == DPAGE_OK);
  CHECK(len == 16);
  CHECK(data[0] == 0x89);
  dpage_free(data);
  CHECK(dpage_service_media(svc, "media-demo", "x", &data, &len) == DPAGE_E_NOT_FOUND);
  dpage_service_free(svc);
}
