#include "core/llm_bridge.hpp"

#include <cstdlib>

#include "core/directive_parser.hpp"
#include "core/errors.hpp"
#include "httplib.h"

namespace dpage {

using nlohmann::json;

const char* to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::assistant: return "assistant";
    case ChatRole::user: return "user";
  }
  return "user";
}

LlmConfig llm_config_from_json(const json& doc) {
  LlmConfig cfg;
  if (doc.is_null()) return cfg;
  try {
    cfg.enabled = doc.value("enabled", cfg.enabled);
    cfg.endpoint_url = doc.value("endpointUrl", cfg.endpoint_url);
    cfg.model_id = doc.value("modelId", cfg.model_id);
    cfg.api_key_env_var = doc.value("apiKeyEnvVar", cfg.api_key_env_var);
    cfg.max_tokens = doc.value("maxTokens", cfg.max_tokens);
    cfg.temperature = doc.value("temperature", cfg.temperature);
    cfg.timeout_ms = doc.value("timeoutMs", cfg.timeout_ms);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("malformed llm config: ") + e.what());
  }
  if (cfg.enabled && (cfg.endpoint_url.empty() || cfg.api_key_env_var.empty())) {
    throw Error(ErrorCode::invalid_argument, "enabled llm config needs endpointUrl and apiKeyEnvVar");
  }
  return cfg;
}

json build_chat_request(const std::vector<ChatTurn>& turns, const LlmConfig& config) {
  json messages = json::array();
  for (const auto& t : turns) messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
  return json{{"model", config.model_id},
              {"messages", std::move(messages)},
              {"max_tokens", config.max_tokens},
              {"temperature", config.temperature}};
}

std::string parse_chat_response(std::string_view body) {
  try {
    const json doc = json::parse(body.begin(), body.end());
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::llm, "completion content is not text");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::llm, std::string("malformed completion response: ") + e.what());
  }
}

std::string HttpChatTransport::complete(const std::vector<ChatTurn>& turns, const LlmConfig& config) {
  const auto scheme_end = config.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::llm, "endpoint URL lacks a scheme: " + config.endpoint_url);
  }
  const auto path_begin = config.endpoint_url.find('/', scheme_end + 3);
  const std::string origin = config.endpoint_url.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : config.endpoint_url.substr(path_begin);

  httplib::Client client(origin);
  const auto secs = config.timeout_ms / 1000;
  const auto usecs = (config.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env_var.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto res = client.Post(path, headers, build_chat_request(turns, config).dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::llm, "LLM endpoint unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::llm, "LLM endpoint returned HTTP " + std::to_string(res->status));
  }
  return parse_chat_response(res->body);
}

std::string system_prompt(const Page& page) {
  std::string out;
  if (const Persona* p = page.persona_of_kind(PersonaKind::instructor)) out = p->description + "\n\n";
  out += "Answer as this instructor, concisely, in the context of this tutorial: " + page.title;
  return out;
}

std::string strip_directives(std::string_view source) {
  const ScanResult scan = scan_message("", source);
  std::string out;
  for (const auto& seg : scan.segments) {
    if (seg.kind == SegmentKind::markdown) {
      out += seg.text;
    } else {
      out += "[" + scan.directives.at(*seg.directive_index).type + " omitted]\n";
    }
  }
  return out;
}

namespace {

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<ChatTurn> assemble_context(const Page& page, const UserState& state, std::string_view question) {
  if (trimmed(question).empty()) throw Error(ErrorCode::invalid_argument, "question is empty");
  const DialogTree tree(page, state);
  std::vector<ChatTurn> turns;
  turns.push_back({ChatRole::system, system_prompt(page), std::nullopt});
  for (const auto& id : tree.ancestors(state.current_cell_id)) {
    const Cell& c = tree.cell(id);
    const Persona* p = page.find_persona(c.persona_id);
    ChatTurn t{ChatRole::user, strip_directives(c.source), c.persona_id};
    if (p && p->kind == PersonaKind::instructor) {
      t.role = ChatRole::assistant;
    } else if (p && p->kind == PersonaKind::other) {
      t.content = p->name + ": " + t.content;
    }
    turns.push_back(std::move(t));
  }
  turns.push_back({ChatRole::user, std::string(question), std::nullopt});
  return turns;
}

AskResult ask(const Page& page, const UserState& state, std::string_view question,
              const LlmConfig& config, ChatTransport& transport) {
  if (!config.enabled) throw Error(ErrorCode::llm, "LLM queries are disabled in the configuration");
  const auto turns = assemble_context(page, state, question);
  const Persona* instructor = page.persona_of_kind(PersonaKind::instructor);
  const Persona* reader = page.persona_of_kind(PersonaKind::reader);
  if (!instructor || !reader) throw Error(ErrorCode::invalid_argument, "page lacks instructor or reader persona");

  const std::string reply = trimmed(transport.complete(turns, config));
  if (reply.empty()) throw Error(ErrorCode::llm, "LLM returned an empty response");

  AskResult out{state, {}};
  Cell q;
  q.persona_id = reader->id;
  q.source = trimmed(question);
  q.ai_generated = false;
  q.verified = true;
  const std::string q_id = append_overlay_cell(page, out.state, state.current_cell_id, std::move(q));
  Cell a;
  a.persona_id = instructor->id;
  a.source = reply;
  a.ai_generated = true;
  a.verified = false;
  const std::string a_id = append_overlay_cell(page, out.state, q_id, std::move(a));
  out.state.current_cell_id = a_id;
  out.state.visited.insert(q_id);
  out.state.visited.insert(a_id);
  out.new_cell_ids = {q_id, a_id};
  return out;
}

std::vector<Cell> generate_dialog(const std::vector<Persona>& personas, std::string_view topic,
                                  int turn_count, const LlmConfig& config, ChatTransport& transport) {
  if (personas.size() < 2) throw Error(ErrorCode::invalid_argument, "dialog generation needs at least two personas");
  if (turn_count < 1) throw Error(ErrorCode::invalid_argument, "turn count must be at least 1");
  if (!config.enabled) throw Error(ErrorCode::llm, "LLM queries are disabled in the configuration");

  std::string sys = "You are writing a tutorial dialog about: " + std::string(topic) + "\nParticipants:\n";
  for (const auto& p : personas) {
    sys += "- " + p.name + " (" + to_string(p.kind) + "): " + p.description + "\n";
  }
  sys += "Write one message at a time, in character. Reply with the message text only.";

  std::vector<Cell> drafts;
  std::vector<ChatTurn> turns{{ChatRole::system, sys, std::nullopt}};
  for (int i = 0; i < turn_count; ++i) {
    const Persona& speaker = personas[static_cast<std::size_t>(i) % personas.size()];
    turns.push_back({ChatRole::user, "Write the next message as " + speaker.name + ".", std::nullopt});
    std::string reply = trimmed(transport.complete(turns, config));
    if (reply.empty()) throw Error(ErrorCode::llm, "LLM returned an empty response");
    turns.push_back({ChatRole::assistant, speaker.name + ": " + reply, speaker.id});
    Cell c;
    c.persona_id = speaker.id;
    c.source = std::move(reply);
    c.ai_generated = true;
    c.verified = false;
    drafts.push_back(std::move(c));
  }
  return drafts;
}

std::pair<Page, std::vector<std::string>> attach_chain(const Page& page, std::string_view parent_id,
                                                       const std::vector<Cell>& drafts) {
  Page out = page;
  std::vector<std::string> ids;
  std::string parent(parent_id);
  for (const auto& d : drafts) {
    auto [next, id] = add_cell(out, parent, {d.persona_id, d.source, d.ai_generated});
    out = std::move(next);
    out.cells.at(id).verified = d.verified || !d.ai_generated;
    ids.push_back(id);
    parent = id;
  }
  return {std::move(out), std::move(ids)};
}

Page verify_cell(const Page& page, std::string_view cell_id, const UserState* state) {
  if (state && state->overlay_cells.contains(std::string(cell_id)) && !page.find_cell(cell_id)) {
    throw Error(ErrorCode::illegal_operation,
                "'" + std::string(cell_id) + "' is a per-reader overlay cell and cannot be verified");
  }
  page.cell(cell_id);
  Page out = page;
  out.cells.at(std::string(cell_id)).verified = true;
  return out;
}

}  // namespace dpage
