#include "core/mock_llm.hpp"

#include "core/errors.hpp"
#include "httplib.h"

namespace dpage {

using nlohmann::json;

MockChatServer::MockChatServer(std::vector<std::string> script)
    : server_(std::make_unique<httplib::Server>()), script_(std::move(script)) {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu_);
    json body = json::parse(req.body, nullptr, false);
    requests_.push_back(body);
    if (fail_count_ > 0) {
      --fail_count_;
      res.status = fail_status_;
      res.set_content("mock failure", "text/plain");
      return;
    }
    if (malform_count_ > 0) {
      --malform_count_;
      res.set_content(R"({"id":"mock","object":"chat.completion"})", "application/json");
      return;
    }
    std::string reply;
    if (!script_.empty()) {
      reply = script_[next_++ % script_.size()];
    } else {
      std::string last;
      if (body.is_object() && body.contains("messages")) {
        for (const auto& m : body["messages"]) {
          if (m.value("role", "") == "user") last = m.value("content", "");
        }
      }
      reply = "Mock reply to: " + last;
    }
    json out{{"id", "mock-" + std::to_string(requests_.size())},
             {"object", "chat.completion"},
             {"model", body.is_object() ? body.value("model", "mock") : "mock"},
             {"choices", json::array({{{"index", 0},
                                       {"message", {{"role", "assistant"}, {"content", reply}}},
                                       {"finish_reason", "stop"}}})}};
    res.set_content(out.dump(), "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw Error(ErrorCode::io, "mock LLM server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockChatServer::~MockChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

void MockChatServer::fail_next(int count, int status) {
  std::lock_guard lock(mu_);
  fail_count_ = count;
  fail_status_ = status;
}

void MockChatServer::malform_next(int count) {
  std::lock_guard lock(mu_);
  malform_count_ = count;
}

std::vector<json> MockChatServer::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace dpage
