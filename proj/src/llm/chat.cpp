#include "detect/llm/chat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "detect/error.hpp"
#include "detect/hashing.hpp"
#include "detect/llm/scores.hpp"
#include "detect/text.hpp"
#include "httplib.h"

namespace detect::llm {

void ChatEndpoint::validate() const {
  if (name.empty()) throw InvalidArgument("chat endpoint needs a name");
  if (base_url.empty()) throw InvalidArgument("chat endpoint '" + name + "' needs a base_url");
  if (model_id.empty()) throw InvalidArgument("chat endpoint '" + name + "' needs a model_id");
  if (!(temperature >= 0.0)) throw InvalidArgument("chat endpoint '" + name + "': temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("chat endpoint '" + name + "': top_p must be in (0,1]");
  if (timeout.count() <= 0) throw InvalidArgument("chat endpoint '" + name + "': timeout must be positive");
}

std::string ChatEndpoint::key_variable() const {
  if (!api_key_env.empty()) return api_key_env;
  std::string out = "DETECT_API_KEY_";
  for (unsigned char c : name) out.push_back(std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_');
  return out;
}

ChatEndpoint endpoint_from_json(const nlohmann::json& j) {
  ChatEndpoint e;
  e.name = j.at("name").get<std::string>();
  e.base_url = j.at("base_url").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.temperature = j.value("temperature", e.temperature);
  e.top_p = j.value("top_p", e.top_p);
  e.max_retries = j.value("max_retries", e.max_retries);
  e.timeout = std::chrono::seconds(j.value("timeout_seconds", static_cast<long>(e.timeout.count())));
  e.api_key_env = j.value("api_key_env", std::string());
  e.validate();
  return e;
}

nlohmann::json to_json(const ChatEndpoint& e) {
  return {{"name", e.name},           {"base_url", e.base_url},       {"model_id", e.model_id},
          {"temperature", e.temperature}, {"top_p", e.top_p},         {"max_retries", e.max_retries},
          {"timeout_seconds", e.timeout.count()}, {"api_key_env", e.key_variable()}};
}

// ---- HTTP ------------------------------------------------------------------------------

HttpChatClient::HttpChatClient(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

nlohmann::json HttpChatClient::request_payload(const ChatEndpoint& e, const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", e.model_id},
          {"messages", std::move(messages)},
          {"temperature", e.temperature},
          {"top_p", e.top_p},
          {"seed", request.seed}};
}

std::string HttpChatClient::reply_text(const nlohmann::json& response) {
  const auto& choices = response.at("choices");
  if (!choices.is_array() || choices.empty()) throw EndpointError("chat response has no choices");
  const auto& message = choices.front().at("message");
  const auto& content = message.at("content");
  if (content.is_null()) return {};
  return content.get<std::string>();
}

namespace {

struct UrlParts {
  std::string scheme_host_port;
  std::string path_prefix;
};

UrlParts split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  const std::size_t slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string HttpChatClient::complete(const ChatRequest& request) const {
  const UrlParts url = split_url(endpoint_.base_url);
  const std::string body = request_payload(endpoint_, request).dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint_.key_variable().c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (std::size_t attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(250LL << std::min<std::size_t>(attempt, 6)));
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    auto res = client.Post(url.path_prefix + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (retryable(res->status)) continue;
      break;
    }
    try {
      return reply_text(nlohmann::json::parse(res->body));
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("unreadable response: ") + e.what();
    }
  }
  throw EndpointError("endpoint '" + endpoint_.name + "' failed: " + last_error);
}

// ---- mock ------------------------------------------------------------------------------

namespace {

std::string last_user_message(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return {};
}

// Text after the last `label` up to `stop` (or the end), trimmed.
std::string section_after(const std::string& s, std::string_view label, std::string_view stop = {}) {
  const std::size_t at = s.rfind(label);
  if (at == std::string::npos) return {};
  const std::size_t begin = at + label.size();
  const std::size_t end = stop.empty() ? std::string::npos : s.find(stop, begin);
  return text::trim(std::string_view(s).substr(begin, end == std::string::npos ? std::string::npos : end - begin));
}

std::string capitalize_ascii(std::string s) {
  if (!s.empty() && std::islower(static_cast<unsigned char>(s.front()))) s.front() = static_cast<char>(std::toupper(s.front()));
  return s;
}

std::string strip_final_period(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

std::string mock_simplify(const std::string& input, std::uint64_t h) {
  const std::string base = strip_final_period(input);
  const std::size_t comma = base.find(", ");
  const auto words = text::split_whitespace(base);
  switch (h % 3) {
    case 0:  // split at the first comma
      if (comma != std::string::npos) {
        return base.substr(0, comma) + ". " + capitalize_ascii(base.substr(comma + 2)) + ".";
      }
      [[fallthrough]];
    case 1: {  // drop the trailing third
      if (comma != std::string::npos) return base.substr(0, comma) + ".";
      if (words.size() < 3) return base + ".";
      std::string out;
      const std::size_t keep = words.size() - words.size() / 3;
      for (std::size_t i = 0; i < keep; ++i) out += (i ? " " : "") + std::string(words[i]);
      return strip_final_period(out) + ".";
    }
    default: {  // light rewording, same length
      static const std::pair<std::string_view, std::string_view> kSwaps[] = {
          {"jedoch", "aber"}, {"zahlreiche", "viele"}, {"erhielt", "bekam"}, {"sowie", "und"},
          {"bereits", "schon"}, {"befindet", "ist"}, {"erneut", "wieder"}, {"wurde", "ist"}};
      std::string out;
      for (std::size_t i = 0; i < words.size(); ++i) {
        std::string w(words[i]);
        for (const auto& [from, to] : kSwaps) {
          if (w == from) w = to;
        }
        out += (i ? " " : "") + w;
      }
      return out + ".";
    }
  }
}

double clamp_score(double v) { return std::clamp(std::round(v), 0.0, 100.0); }

std::string mock_judge(const std::string& complex, const std::string& simple, std::uint64_t noise_seed) {
  const auto c_words = text::tokenize_words(complex);
  const auto s_words = text::tokenize_words(simple);
  if (s_words.empty() || c_words.empty()) {
    return "Feedback: The simplification is empty.\n\nScore:\n- Simplicity: 0\n- Meaning Preservation: 0\n- Fluency: 0";
  }
  std::vector<std::string> c_lower;
  for (auto w : c_words) c_lower.push_back(text::to_lower(w));
  std::size_t shared = 0;
  double letters = 0.0;
  for (auto w : s_words) {
    letters += static_cast<double>(text::utf8_length(w));
    if (std::find(c_lower.begin(), c_lower.end(), text::to_lower(w)) != c_lower.end()) ++shared;
  }
  const double n_s = static_cast<double>(s_words.size());
  const double coverage = static_cast<double>(shared) / static_cast<double>(c_words.size());
  const double words_per_sentence = n_s / static_cast<double>(std::max<std::size_t>(1, text::count_sentences(simple)));
  const double avg_len = letters / n_s;

  SplitMix64 rng(noise_seed);
  CriterionScores s;
  s.simplicity = clamp_score(118.0 - 2.2 * words_per_sentence - 5.0 * (avg_len - 5.0) + 4.0 * rng.normal());
  s.meaning_preservation = clamp_score(15.0 + 85.0 * std::min(1.0, coverage) + 4.0 * rng.normal());
  s.fluency = clamp_score(88.0 - 0.4 * std::abs(words_per_sentence - 12.0) + 4.0 * rng.normal());
  return "Feedback: The simplification keeps " + std::to_string(shared) + " of " + std::to_string(c_words.size()) +
         " source words.\n\n" + format_scores(s);
}

}  // namespace

MockChatClient::MockChatClient(ChatEndpoint endpoint, Responder responder)
    : endpoint_(std::move(endpoint)), responder_(std::move(responder)) {}

std::string MockChatClient::complete(const ChatRequest& request) const {
  return responder_ ? responder_(endpoint_, request) : default_response(endpoint_, request);
}

std::string MockChatClient::default_response(const ChatEndpoint& e, const ChatRequest& request) {
  const std::string prompt = last_user_message(request);
  const std::uint64_t model_hash = fnv1a64(e.model_id);
  if (prompt.find("Simplification:") != std::string::npos && prompt.find("Complex:") != std::string::npos) {
    const std::string complex = section_after(prompt, "Complex:", "\n\nSimplification:");
    const std::string simple = section_after(prompt, "Simplification:");
    return mock_judge(complex, simple, model_hash ^ fnv1a64(complex + '\x1f' + simple) ^ (request.seed * 0x9e3779b97f4a7c15ULL));
  }
  const std::string input = section_after(prompt, "Eingabe:", "\n");
  if (input.empty()) return {};
  const std::uint64_t h = fnv1a64(input, model_hash);
  const std::string out = mock_simplify(input, h >> 1);
  return (h & 1) ? "Ausgabe: " + out : out;
}

std::unique_ptr<ChatClient> make_chat_client(const ChatEndpoint& endpoint) {
  endpoint.validate();
  if (endpoint.base_url.rfind("mock://", 0) == 0) return std::make_unique<MockChatClient>(endpoint);
  return std::make_unique<HttpChatClient>(endpoint);
}

}  // namespace detect::llm
