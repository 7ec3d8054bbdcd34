#include "dpage/dpage.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "core/errors.hpp"
#include "core/export_html.hpp"
#include "core/llm_bridge.hpp"
#include "core/page_model.hpp"
#include "core/service.hpp"

struct dpage_page {
  dpage::Page page;
};

struct dpage_service {
  std::unique_ptr<dpage::Service> service;
};

namespace {

using nlohmann::json;

thread_local std::string g_error_message;
thread_local std::string g_error_detail = "null";

dpage_status status_for(dpage::ErrorCode code) {
  using dpage::ErrorCode;
  switch (code) {
    case ErrorCode::parse: return DPAGE_E_PARSE;
    case ErrorCode::validation: return DPAGE_E_VALIDATION;
    case ErrorCode::not_found: return DPAGE_E_NOT_FOUND;
    case ErrorCode::invalid_argument: return DPAGE_E_INVALID_ARGUMENT;
    case ErrorCode::illegal_operation: return DPAGE_E_ILLEGAL_OPERATION;
    case ErrorCode::context_mismatch: return DPAGE_E_CONTEXT_MISMATCH;
    case ErrorCode::io: return DPAGE_E_IO;
    case ErrorCode::corrupt_state: return DPAGE_E_CORRUPT_STATE;
    case ErrorCode::llm: return DPAGE_E_LLM;
    case ErrorCode::runner: return DPAGE_E_RUNNER;
    case ErrorCode::busy: return DPAGE_E_BUSY;
    case ErrorCode::state_mismatch: return DPAGE_E_STATE_MISMATCH;
  }
  return DPAGE_E_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes and thread-local messages.
template <typename Fn>
dpage_status guarded(Fn&& fn) {
  g_error_message.clear();
  g_error_detail = "null";
  try {
    fn();
    return DPAGE_OK;
  } catch (const dpage::ValidationError& e) {
    g_error_message = e.what();
    g_error_detail = dpage::report_to_json(e.report()).dump();
    return DPAGE_E_VALIDATION;
  } catch (const dpage::Error& e) {
    g_error_message = e.what();
    return status_for(e.code());
  } catch (const json::exception& e) {
    g_error_message = std::string("malformed JSON argument: ") + e.what();
    return DPAGE_E_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_error_message = "out of memory";
    return DPAGE_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error_message = e.what();
    return DPAGE_E_INTERNAL;
  }
}

char* dup_string(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put_json(char** out, const json& value) {
  if (!out) throw dpage::Error(dpage::ErrorCode::invalid_argument, "null output pointer");
  *out = dup_string(value.dump(-1, ' ', false, json::error_handler_t::replace));
}

std::string_view arg(const char* s, const char* name) {
  if (!s) throw dpage::Error(dpage::ErrorCode::invalid_argument, std::string(name) + " must not be null");
  return s;
}

template <typename T>
T& handle(T* p, const char* name) {
  if (!p) throw dpage::Error(dpage::ErrorCode::invalid_argument, std::string(name) + " handle is null");
  return *p;
}

std::string read_file(std::string_view path) {
  std::ifstream in{std::string(path), std::ios::binary};
  if (!in) throw dpage::Error(dpage::ErrorCode::io, "cannot open " + std::string(path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_optional_json(const char* text) {
  if (!text || !*text) return nullptr;
  return json::parse(text);
}

}  // namespace

extern "C" {

const char* dpage_version(void) { return "1.0.0"; }

const char* dpage_status_name(dpage_status status) {
  switch (status) {
    case DPAGE_OK: return "ok";
    case DPAGE_E_PARSE: return "parse";
    case DPAGE_E_VALIDATION: return "validation";
    case DPAGE_E_NOT_FOUND: return "not_found";
    case DPAGE_E_INVALID_ARGUMENT: return "invalid_argument";
    case DPAGE_E_ILLEGAL_OPERATION: return "illegal_operation";
    case DPAGE_E_CONTEXT_MISMATCH: return "context_mismatch";
    case DPAGE_E_IO: return "io";
    case DPAGE_E_CORRUPT_STATE: return "corrupt_state";
    case DPAGE_E_LLM: return "llm";
    case DPAGE_E_RUNNER: return "runner";
    case DPAGE_E_BUSY: return "busy";
    case DPAGE_E_STATE_MISMATCH: return "state_mismatch";
    case DPAGE_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dpage_last_error_message(void) { return g_error_message.c_str(); }
const char* dpage_last_error_detail(void) { return g_error_detail.c_str(); }

void dpage_free(void* ptr) { std::free(ptr); }

dpage_status dpage_page_load(const char* data, size_t len, dpage_page** out) {
  return guarded([&] {
    if (!data && len > 0) throw dpage::Error(dpage::ErrorCode::invalid_argument, "data must not be null");
    auto p = std::make_unique<dpage_page>(dpage_page{dpage::load_page(std::string_view(data ? data : "", len))});
    handle(out, "out") = p.release();
  });
}

dpage_status dpage_page_load_file(const char* path, dpage_page** out) {
  return guarded([&] {
    const std::string bytes = read_file(arg(path, "path"));
    auto p = std::make_unique<dpage_page>(dpage_page{dpage::load_page(bytes)});
    handle(out, "out") = p.release();
  });
}

dpage_status dpage_validate_file(const char* path, char** report_json, size_t* error_count) {
  return guarded([&] {
    const dpage::Page page = dpage::decode_page(read_file(arg(path, "path")));
    const dpage::ValidationReport report = dpage::validate(page);
    put_json(report_json, dpage::report_to_json(report));
    if (error_count) *error_count = report.errors.size();
  });
}

dpage_status dpage_page_new(const char* title, dpage_page** out) {
  return guarded([&] {
    auto p = std::make_unique<dpage_page>(dpage_page{dpage::new_page(std::string(arg(title, "title")))});
    handle(out, "out") = p.release();
  });
}

dpage_status dpage_page_save(const dpage_page* page, char** out, size_t* len) {
  return guarded([&] {
    const std::string bytes = dpage::save_page(handle(page, "page").page);
    handle(out, "out") = dup_string(bytes);
    if (len) *len = bytes.size();
  });
}

dpage_status dpage_page_save_file(const dpage_page* page, const char* path) {
  return guarded([&] {
    const std::string bytes = dpage::save_page(handle(page, "page").page);
    const std::string target(arg(path, "path"));
    const std::string temp = target + ".tmp";
    {
      std::ofstream f(temp, std::ios::binary | std::ios::trunc);
      f << bytes;
      if (!f) throw dpage::Error(dpage::ErrorCode::io, "cannot write " + temp);
    }
    if (std::rename(temp.c_str(), target.c_str()) != 0) {
      throw dpage::Error(dpage::ErrorCode::io, "cannot replace " + target);
    }
  });
}

dpage_status dpage_page_info(const dpage_page* page, char** out_json) {
  return guarded([&] {
    const dpage::Page& p = handle(page, "page").page;
    put_json(out_json, json{{"id", p.id},
                            {"title", p.title},
                            {"rootId", p.root_id},
                            {"targetId", p.target_id},
                            {"targetPath", dpage::target_path(p)},
                            {"cellCount", p.cells.size()}});
  });
}

dpage_status dpage_page_cell(const dpage_page* page, const char* cell_id, char** out_json) {
  return guarded([&] { put_json(out_json, dpage::cell_to_json(handle(page, "page").page.cell(arg(cell_id, "cell_id")))); });
}

dpage_status dpage_page_generate(const dpage_page* page, const char* parent_id, const char* topic, int turns,
                                 const char* config_json, dpage_page** out, char** new_ids_json) {
  return guarded([&] {
    const dpage::Page& p = handle(page, "page").page;
    const json cfg = parse_optional_json(config_json);
    const dpage::LlmConfig llm =
        dpage::llm_config_from_json(cfg.is_object() && cfg.contains("llm") ? cfg["llm"] : json(nullptr));
    dpage::HttpChatTransport transport;
    const auto drafts = dpage::generate_dialog(p.personas, arg(topic, "topic"), turns, llm, transport);
    auto [next, ids] = dpage::attach_chain(p, parent_id ? std::string_view(parent_id) : p.root_id, drafts);
    auto result = std::make_unique<dpage_page>(dpage_page{std::move(next)});
    if (new_ids_json) put_json(new_ids_json, ids);
    handle(out, "out") = result.release();
  });
}

dpage_status dpage_page_export_html(const dpage_page* page, const char* out_dir) {
  return guarded([&] { dpage::export_static(handle(page, "page").page, std::string(arg(out_dir, "out_dir"))); });
}

void dpage_page_free(dpage_page* page) { delete page; }

dpage_status dpage_service_create(const dpage_page* page, const char* config_json, dpage_service** out) {
  return guarded([&] {
    const dpage::ServiceConfig cfg = dpage::service_config_from_json(parse_optional_json(config_json));
    auto s = std::make_unique<dpage_service>();
    s->service = std::make_unique<dpage::Service>(handle(page, "page").page, cfg);
    handle(out, "out") = s.release();
  });
}

void dpage_service_free(dpage_service* service) { delete service; }

dpage_status dpage_session_create(dpage_service* service, const char* page_id, char** out_json) {
  return guarded([&] {
    put_json(out_json, dpage::session_handle_to_json(
                           handle(service, "service").service->create_session(arg(page_id, "page_id"))));
  });
}

dpage_status dpage_session_thread(dpage_service* service, const char* session_id, char** out_json) {
  return guarded([&] { put_json(out_json, handle(service, "service").service->thread(arg(session_id, "session_id"))); });
}

dpage_status dpage_session_responses(dpage_service* service, const char* session_id, char** out_json) {
  return guarded(
      [&] { put_json(out_json, handle(service, "service").service->responses(arg(session_id, "session_id"))); });
}

dpage_status dpage_session_status(dpage_service* service, const char* session_id, char** out_json) {
  return guarded([&] { put_json(out_json, handle(service, "service").service->status(arg(session_id, "session_id"))); });
}

dpage_status dpage_session_state(dpage_service* service, const char* session_id, char** out_json) {
  return guarded([&] {
    put_json(out_json,
             dpage::user_state_to_json(handle(service, "service").service->state(arg(session_id, "session_id"))));
  });
}

dpage_status dpage_session_select(dpage_service* service, const char* session_id, const char* cell_id,
                                  char** out_json) {
  return guarded([&] {
    put_json(out_json, handle(service, "service").service->select(arg(session_id, "session_id"), arg(cell_id, "cell_id")));
  });
}

dpage_status dpage_session_jump(dpage_service* service, const char* session_id, const char* cell_id, char** out_json) {
  return guarded([&] {
    put_json(out_json, handle(service, "service").service->jump(arg(session_id, "session_id"), arg(cell_id, "cell_id")));
  });
}

dpage_status dpage_session_ask(dpage_service* service, const char* session_id, const char* question,
                               char** out_json) {
  return guarded([&] {
    put_json(out_json, handle(service, "service").service->ask(arg(session_id, "session_id"), arg(question, "question")));
  });
}

dpage_status dpage_session_code(dpage_service* service, const char* session_id, const char* cell_id, char** out_json) {
  return guarded([&] {
    put_json(out_json, handle(service, "service").service->code(arg(session_id, "session_id"), arg(cell_id, "cell_id")));
  });
}

dpage_status dpage_session_answer(dpage_service* service, const char* session_id, const char* directive_id,
                                  const char* payload_json, char** out_json) {
  return guarded([&] {
    const json payload = json::parse(arg(payload_json, "payload_json"));
    put_json(out_json, handle(service, "service").service->answer(arg(session_id, "session_id"),
                                                                  arg(directive_id, "directive_id"), payload));
  });
}

dpage_status dpage_session_run(dpage_service* service, const char* session_id, const char* directive_id,
                               const char* code, char** out_json) {
  return guarded([&] {
    put_json(out_json, handle(service, "service").service->run(arg(session_id, "session_id"),
                                                               arg(directive_id, "directive_id"),
                                                               std::string(arg(code, "code"))));
  });
}

dpage_status dpage_session_cancel_run(dpage_service* service, const char* session_id, int* was_running) {
  return guarded([&] {
    const bool running = handle(service, "service").service->cancel_run(arg(session_id, "session_id"));
    if (was_running) *was_running = running ? 1 : 0;
  });
}

dpage_status dpage_service_media(dpage_service* service, const char* page_id, const char* filename,
                                 unsigned char** data, size_t* len) {
  return guarded([&] {
    const auto& bytes =
        handle(service, "service").service->media(arg(page_id, "page_id"), arg(filename, "filename"));
    auto* buf = static_cast<unsigned char*>(std::malloc(bytes.empty() ? 1 : bytes.size()));
    if (!buf) throw std::bad_alloc();
    if (!bytes.empty()) std::memcpy(buf, bytes.data(), bytes.size());
    handle(data, "data") = buf;
    if (len) *len = bytes.size();
  });
}

}  // extern "C"
