#include "server.hpp"

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include "capi.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cli {

namespace {

using nlohmann::json;

int http_status(dpage_status status) {
  switch (status) {
    case DPAGE_E_NOT_FOUND: return 404;
    case DPAGE_E_PARSE:
    case DPAGE_E_INVALID_ARGUMENT:
    case DPAGE_E_VALIDATION: return 400;
    case DPAGE_E_ILLEGAL_OPERATION:
    case DPAGE_E_BUSY:
    case DPAGE_E_STATE_MISMATCH:
    case DPAGE_E_CONTEXT_MISMATCH: return 409;
    case DPAGE_E_LLM: return 502;
    case DPAGE_E_RUNNER: return 503;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int http, const std::string& code, const std::string& message,
                json detail = nullptr) {
  res.status = http;
  res.set_content(json{{"error", {{"code", code}, {"message", message}, {"detail", std::move(detail)}}}}.dump(),
                  "application/json");
}

json body_object(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ApiError(DPAGE_E_INVALID_ARGUMENT, "request body must be a JSON object", "null");
  }
  return doc;
}

std::string string_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw ApiError(DPAGE_E_INVALID_ARGUMENT, std::string("missing string field \"") + key + "\"", "null");
  }
  return it->get<std::string>();
}

// Wraps a handler so library failures become JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string out = fn(req, res);
      if (!out.empty()) res.set_content(out, "application/json");
    } catch (const ApiError& e) {
      json detail = json::parse(e.detail(), nullptr, false);
      if (detail.is_discarded()) detail = nullptr;
      send_error(res, http_status(e.status()), dpage_status_name(e.status()), e.what(), std::move(detail));
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

const char* media_type(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : name.substr(dot + 1);
  if (ext == "png") return "image/png";
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "gif") return "image/gif";
  if (ext == "svg") return "image/svg+xml";
  if (ext == "webp") return "image/webp";
  if (ext == "mp4") return "video/mp4";
  if (ext == "txt") return "text/plain";
  return "application/octet-stream";
}

constexpr const char* kPlaceholderUi = R"(<!DOCTYPE html>
<html lang="en"><head><meta charset="utf-8"><title>dpage</title></head>
<body><p>The reader API is running. Start it with --ui-dir to serve a reader interface.</p></body></html>
)";

}  // namespace

int serve(dpage_service* service, const std::string& page_id, const ServeOptions& options) {
  httplib::Server server;

  server.Post("/sessions", guarded([=](const httplib::Request& req, httplib::Response&) {
    const json body = body_object(req);
    const std::string id = body.contains("pageId") ? string_field(body, "pageId") : page_id;
    char* out = nullptr;
    check(dpage_session_create(service, id.c_str(), &out));
    return take(out);
  }));

  using Getter = dpage_status (*)(dpage_service*, const char*, char**);
  auto get_route = [&](const char* pattern, Getter fn) {
    server.Get(pattern, guarded([=](const httplib::Request& req, httplib::Response&) {
      char* out = nullptr;
      check(fn(service, req.matches[1].str().c_str(), &out));
      return take(out);
    }));
  };
  get_route(R"(/sessions/([^/]+)/thread)", dpage_session_thread);
  get_route(R"(/sessions/([^/]+)/responses)", dpage_session_responses);
  get_route(R"(/sessions/([^/]+)/status)", dpage_session_status);
  get_route(R"(/sessions/([^/]+)/state)", dpage_session_state);

  using Mover = dpage_status (*)(dpage_service*, const char*, const char*, char**);
  auto move_route = [&](const char* pattern, Mover fn) {
    server.Post(pattern, guarded([=](const httplib::Request& req, httplib::Response&) {
      const std::string cell = string_field(body_object(req), "cellId");
      char* out = nullptr;
      check(fn(service, req.matches[1].str().c_str(), cell.c_str(), &out));
      return take(out);
    }));
  };
  move_route(R"(/sessions/([^/]+)/select)", dpage_session_select);
  move_route(R"(/sessions/([^/]+)/jump)", dpage_session_jump);

  server.Post(R"(/sessions/([^/]+)/ask)", guarded([=](const httplib::Request& req, httplib::Response&) {
    const std::string question = string_field(body_object(req), "question");
    char* out = nullptr;
    check(dpage_session_ask(service, req.matches[1].str().c_str(), question.c_str(), &out));
    return take(out);
  }));

  server.Get(R"(/sessions/([^/]+)/code/([^/]+))", guarded([=](const httplib::Request& req, httplib::Response&) {
    char* out = nullptr;
    check(dpage_session_code(service, req.matches[1].str().c_str(), req.matches[2].str().c_str(), &out));
    return take(out);
  }));

  server.Post(R"(/sessions/([^/]+)/answers/([^/]+))",
              guarded([=](const httplib::Request& req, httplib::Response&) {
                const json body = body_object(req);
                // Accept either the payload itself or {"payload": {...}}.
                const json payload = body.contains("payload") ? body["payload"] : body;
                char* out = nullptr;
                check(dpage_session_answer(service, req.matches[1].str().c_str(), req.matches[2].str().c_str(),
                                           payload.dump().c_str(), &out));
                return take(out);
              }));

  server.Post(R"(/sessions/([^/]+)/run/([^/]+))", guarded([=](const httplib::Request& req, httplib::Response&) {
    const std::string code = string_field(body_object(req), "code");
    char* out = nullptr;
    check(dpage_session_run(service, req.matches[1].str().c_str(), req.matches[2].str().c_str(), code.c_str(),
                            &out));
    return take(out);
  }));

  server.Delete(R"(/sessions/([^/]+)/run)", guarded([=](const httplib::Request& req, httplib::Response&) {
    int was_running = 0;
    check(dpage_session_cancel_run(service, req.matches[1].str().c_str(), &was_running));
    return json{{"cancelled", was_running != 0}}.dump();
  }));

  server.Get(R"(/pages/([^/]+)/media/([^/]+))", guarded([=](const httplib::Request& req, httplib::Response& res) {
    unsigned char* data = nullptr;
    size_t len = 0;
    const std::string name = req.matches[2].str();
    check(dpage_service_media(service, req.matches[1].str().c_str(), name.c_str(), &data, &len));
    std::string bytes(reinterpret_cast<const char*>(data), len);
    dpage_free(data);
    res.set_content(bytes, media_type(name));
    return std::string();
  }));

  if (options.ui_dir) {
    if (!server.set_mount_point("/", *options.ui_dir)) {
      std::cerr << "error: UI directory " << *options.ui_dir << " does not exist\n";
      return 2;
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderUi, "text/html; charset=utf-8");
    });
  }

  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
  } else if (!server.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port < 0) {
    std::cerr << "error: cannot listen on " << options.host << ":" << options.port << "\n";
    return 2;
  }

  // Signals are taken synchronously by a watcher thread so the server stops cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    // stop() is a no-op until the accept loop is running.
    server.wait_until_ready();
    server.stop();
  });

  std::cout << "listening on http://" << options.host << ":" << port << std::endl;
  const bool ok = server.listen_after_bind();
  if (watcher.joinable()) {
    // Wake the watcher if the server stopped for another reason.
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
  }
  return ok ? 0 : 2;
}

}  // namespace cli
