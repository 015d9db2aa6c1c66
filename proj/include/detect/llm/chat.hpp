#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace detect::llm {

struct ChatEndpoint {
  std::string name;
  std::string base_url;  // "mock://..." selects the in-process mock
  std::string model_id;
  double temperature = 0.6;
  double top_p = 0.95;
  std::size_t max_retries = 2;
  std::chrono::seconds timeout{120};
  // Environment variable holding the bearer token; empty means DETECT_API_KEY_<NAME>.
  std::string api_key_env;

  void validate() const;  // throws InvalidArgument
  std::string key_variable() const;
};

ChatEndpoint endpoint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChatEndpoint& e);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::uint64_t seed = 0;  // forwarded to providers that honor it; drives the mock
};

// One client per endpoint. complete() returns the assistant text or throws EndpointError once
// the endpoint's retry budget is exhausted. Implementations are safe for concurrent calls.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual const ChatEndpoint& endpoint() const = 0;
  virtual std::string complete(const ChatRequest& request) const = 0;
};

// OpenAI-compatible: POST {base_url}/chat/completions, reply text at choices[0].message.content.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(ChatEndpoint endpoint);
  const ChatEndpoint& endpoint() const override { return endpoint_; }
  std::string complete(const ChatRequest& request) const override;

  static nlohmann::json request_payload(const ChatEndpoint& e, const ChatRequest& request);
  static std::string reply_text(const nlohmann::json& response);

 private:
  ChatEndpoint endpoint_;
};

// Deterministic offline stand-in. The default responder recognises the two shipped prompts:
// generation prompts get a rule-based rewrite of the "Eingabe:" text, judge prompts get a
// score block derived from simple surface features of the pair plus seeded jitter, so
// different judge models and runs disagree a little, as real judges do.
class MockChatClient final : public ChatClient {
 public:
  using Responder = std::function<std::string(const ChatEndpoint&, const ChatRequest&)>;

  explicit MockChatClient(ChatEndpoint endpoint, Responder responder = {});
  const ChatEndpoint& endpoint() const override { return endpoint_; }
  std::string complete(const ChatRequest& request) const override;

  static std::string default_response(const ChatEndpoint& e, const ChatRequest& request);

 private:
  ChatEndpoint endpoint_;
  Responder responder_;
};

std::unique_ptr<ChatClient> make_chat_client(const ChatEndpoint& endpoint);

}  // namespace detect::llm
