#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <string_view>

#include "core/assessments.hpp"
#include "core/code_state.hpp"
#include "core/llm_bridge.hpp"
#include "core/navigation.hpp"
#include "core/page_model.hpp"
#include "json.hpp"

namespace dpage {

struct ServiceConfig {
  std::optional<std::filesystem::path> state_dir;  // unset: sessions are in-memory only
  bool multi_user = false;  // state keyed by session id instead of page id
  LlmConfig llm;
  RunnerConfig runners;
};

// {stateDir, multiUser, llm:{...}, runners:{<language>:{command, timeoutMs, enabled}}}
ServiceConfig service_config_from_json(const nlohmann::json& doc);

struct SessionHandle {
  std::string session_id;
  std::string page_id;
  std::string created_at;  // ISO-8601 UTC
};

nlohmann::json session_handle_to_json(const SessionHandle& handle);

// Owns reader sessions over one read-only page. Each public call maps onto a
// single navigation / assessments / llm_bridge operation; calls on one session
// are serialized, distinct sessions run independently.
class Service {
 public:
  Service(Page page, ServiceConfig config, std::shared_ptr<ChatTransport> transport = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const Page& page() const { return page_; }
  const ServiceConfig& config() const { return config_; }

  SessionHandle create_session(std::string_view page_id);
  UserState state(std::string_view session_id) const;

  nlohmann::json thread(std::string_view session_id) const;
  nlohmann::json responses(std::string_view session_id) const;
  nlohmann::json status(std::string_view session_id) const;
  nlohmann::json select(std::string_view session_id, std::string_view cell_id);
  nlohmann::json jump(std::string_view session_id, std::string_view cell_id);
  nlohmann::json ask(std::string_view session_id, std::string_view question);
  nlohmann::json code(std::string_view session_id, std::string_view cell_id) const;
  // payload: {"action":"select","selected":[i...]} | {"action":"skip"} | {"action":"reveal"}
  nlohmann::json answer(std::string_view session_id, std::string_view directive_id,
                        const nlohmann::json& payload);
  nlohmann::json run(std::string_view session_id, std::string_view directive_id, std::string code);
  // Stops the session's in-flight code run, if any. Returns whether one was running.
  bool cancel_run(std::string_view session_id);

  const std::vector<std::uint8_t>& media(std::string_view page_id, std::string_view filename) const;

 private:
  struct Session;

  std::shared_ptr<Session> session(std::string_view id) const;
  void persist(const Session& s) const;
  nlohmann::json status_of(const UserState& state, bool ask_pending) const;
  const Directive& directive(std::string_view id) const;
  void require_reached(const Session& s, const Directive& d) const;

  const Page page_;
  const ServiceConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::map<std::string, CodeSnapshot> snapshots_;
  std::map<std::string, Directive> directives_;
  std::map<std::string, std::string> directive_cells_;  // directive id -> owning cell

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
};

}  // namespace dpage
