#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace httplib {
class Server;
}

namespace dpage {

// Deterministic chat-completion endpoint for tests and offline demos. Replies
// are taken from the script in order (cycling); with an empty script the reply
// echoes the last user message.
class MockChatServer {
 public:
  explicit MockChatServer(std::vector<std::string> script = {});
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  int port() const { return port_; }
  std::string url() const;  // http://127.0.0.1:<port>/v1/chat/completions

  // The next `count` requests answer with `status` and a non-JSON body.
  void fail_next(int count, int status = 500);
  // The next `count` requests answer 200 with a body lacking `choices`.
  void malform_next(int count);

  std::vector<nlohmann::json> requests() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  int fail_count_ = 0;
  int fail_status_ = 500;
  int malform_count_ = 0;
  std::vector<nlohmann::json> requests_;
};

}  // namespace dpage
