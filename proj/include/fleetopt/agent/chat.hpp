#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fleetopt::agent {

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

/// Network failure, HTTP error status or an unreadable response body.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Content of the first choice's message. Throws TransportError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct ChatEndpoint {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key;
  double timeout_seconds = 60.0;

  /// FLEETOPT_LLM_URL, FLEETOPT_LLM_MODEL and FLEETOPT_LLM_API_KEY override
  /// the defaults when set.
  static ChatEndpoint from_env();
};

nlohmann::json request_to_json(const ChatRequest& request);
/// choices[0].message.content of a chat-completions response. Throws TransportError.
std::string content_from_response(const nlohmann::json& response);

/// POSTs {model, messages, temperature} with a bearer token.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(ChatEndpoint endpoint);
  std::string complete(const ChatRequest& request) override;

 private:
  ChatEndpoint endpoint_;
};

/// One logged request/reply pair; `error` set when the call failed.
struct Exchange {
  std::vector<ChatMessage> messages;
  std::string reply;
  std::string error;
};

nlohmann::json transcript_to_json(const std::vector<Exchange>& exchanges);
/// Throws FormatError.
std::vector<Exchange> transcript_from_json(const nlohmann::json& doc);

/// Serves logged replies in order; an exchange with `error` set throws
/// TransportError. With `strict`, each request's messages must equal the
/// logged ones.
class ReplayTransport : public ChatTransport {
 public:
  explicit ReplayTransport(std::vector<Exchange> exchanges, bool strict = false);
  /// Replies only, no request checking.
  static ReplayTransport from_replies(std::vector<std::string> replies);

  std::string complete(const ChatRequest& request) override;
  std::size_t served() const { return next_; }
  std::size_t remaining() const { return exchanges_.size() - next_; }

 private:
  std::vector<Exchange> exchanges_;
  bool strict_ = false;
  std::size_t next_ = 0;
};

/// Forwards to another transport and logs every exchange.
class RecordingTransport : public ChatTransport {
 public:
  explicit RecordingTransport(ChatTransport& inner) : inner_(inner) {}
  std::string complete(const ChatRequest& request) override;
  const std::vector<Exchange>& exchanges() const { return log_; }

 private:
  ChatTransport& inner_;
  std::vector<Exchange> log_;
};

}  // namespace fleetopt::agent
