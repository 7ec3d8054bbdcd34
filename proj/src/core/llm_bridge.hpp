#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/navigation.hpp"
#include "core/page_model.hpp"
#include "json.hpp"

namespace dpage {

enum class ChatRole { system, assistant, user };

const char* to_string(ChatRole role);

struct ChatTurn {
  ChatRole role = ChatRole::user;
  std::string content;
  std::optional<std::string> persona_id;

  bool operator==(const ChatTurn&) const = default;
};

struct LlmConfig {
  bool enabled = false;
  std::string endpoint_url;  // full chat-completions URL
  std::string model_id = "gpt-3.5-turbo";
  std::string api_key_env_var = "OPENAI_API_KEY";
  int max_tokens = 512;
  double temperature = 0.7;
  int timeout_ms = 60000;
};

LlmConfig llm_config_from_json(const nlohmann::json& doc);

// Sends one chat-completion request and returns the reply text.
// Implementations throw Error(llm) on transport or protocol failure.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::vector<ChatTurn>& turns, const LlmConfig& config) = 0;
};

// {model, messages:[{role, content}], max_tokens, temperature}
nlohmann::json build_chat_request(const std::vector<ChatTurn>& turns, const LlmConfig& config);
// choices[0].message.content; throws Error(llm) on any other shape.
std::string parse_chat_response(std::string_view body);

class HttpChatTransport final : public ChatTransport {
 public:
  std::string complete(const std::vector<ChatTurn>& turns, const LlmConfig& config) override;
};

std::string system_prompt(const Page& page);

// Directive blocks are replaced by a one-line placeholder naming their type.
std::string strip_directives(std::string_view source);

// system turn, one turn per cell on the path to the current cell, then the question.
std::vector<ChatTurn> assemble_context(const Page& page, const UserState& state,
                                       std::string_view question);

struct AskResult {
  UserState state;
  std::vector<std::string> new_cell_ids;  // question cell, response cell
};

// Atomic: any failure leaves the caller's state untouched.
AskResult ask(const Page& page, const UserState& state, std::string_view question,
              const LlmConfig& config, ChatTransport& transport);

// Linear chain of unverified drafts; persona i % personas.size() speaks turn i.
std::vector<Cell> generate_dialog(const std::vector<Persona>& personas, std::string_view topic,
                                  int turn_count, const LlmConfig& config, ChatTransport& transport);

// Appends `drafts` as a chain under `parent_id`; returns the new ids in order.
std::pair<Page, std::vector<std::string>> attach_chain(const Page& page, std::string_view parent_id,
                                                       const std::vector<Cell>& drafts);

// Overlay ids are rejected when `state` is supplied and owns them.
Page verify_cell(const Page& page, std::string_view cell_id, const UserState* state = nullptr);

}  // namespace dpage
