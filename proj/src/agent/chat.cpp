#include "fleetopt/agent/chat.hpp"

#include <cstdlib>

#include "fleetopt/common.hpp"

namespace fleetopt::agent {

ChatEndpoint ChatEndpoint::from_env() {
  ChatEndpoint e;
  if (const char* v = std::getenv("FLEETOPT_LLM_URL"); v && *v) e.url = v;
  if (const char* v = std::getenv("FLEETOPT_LLM_MODEL"); v && *v) e.model = v;
  if (const char* v = std::getenv("FLEETOPT_LLM_API_KEY"); v && *v) e.api_key = v;
  return e;
}

namespace {

nlohmann::json messages_json(const std::vector<ChatMessage>& messages) {
  nlohmann::json out = nlohmann::json::array();
  for (const ChatMessage& m : messages) out.push_back({{"role", m.role}, {"content", m.content}});
  return out;
}

std::vector<ChatMessage> messages_from(const nlohmann::json& j) {
  std::vector<ChatMessage> out;
  for (const auto& m : j) out.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  return out;
}

}  // namespace

nlohmann::json request_to_json(const ChatRequest& request) {
  return {{"model", request.model}, {"messages", messages_json(request.messages)}, {"temperature", request.temperature}};
}

std::string content_from_response(const nlohmann::json& response) {
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected chat response: ") + e.what());
  }
}

nlohmann::json transcript_to_json(const std::vector<Exchange>& exchanges) {
  nlohmann::json list = nlohmann::json::array();
  for (const Exchange& e : exchanges) {
    nlohmann::json item{{"messages", messages_json(e.messages)}, {"reply", e.reply}};
    if (!e.error.empty()) item["error"] = e.error;
    list.push_back(std::move(item));
  }
  return {{"schema", "fleetopt.transcript/1"}, {"exchanges", list}};
}

std::vector<Exchange> transcript_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || doc.value("schema", "") != "fleetopt.transcript/1")
      throw FormatError("transcript: missing or unsupported schema tag");
    std::vector<Exchange> out;
    for (const auto& item : doc.at("exchanges")) {
      Exchange e;
      if (item.contains("messages")) e.messages = messages_from(item.at("messages"));
      e.reply = item.value("reply", "");
      e.error = item.value("error", "");
      out.push_back(std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("transcript: ") + e.what());
  }
}

ReplayTransport::ReplayTransport(std::vector<Exchange> exchanges, bool strict)
    : exchanges_(std::move(exchanges)), strict_(strict) {}

ReplayTransport ReplayTransport::from_replies(std::vector<std::string> replies) {
  std::vector<Exchange> ex;
  for (std::string& r : replies) ex.push_back({{}, std::move(r), {}});
  return ReplayTransport(std::move(ex));
}

std::string ReplayTransport::complete(const ChatRequest& request) {
  if (next_ >= exchanges_.size()) throw TransportError("replay transcript exhausted");
  const Exchange& e = exchanges_[next_++];
  if (strict_ && e.messages != request.messages)
    throw TransportError("replay mismatch at exchange " + std::to_string(next_ - 1));
  if (!e.error.empty()) throw TransportError(e.error);
  return e.reply;
}

std::string RecordingTransport::complete(const ChatRequest& request) {
  Exchange e{request.messages, {}, {}};
  try {
    e.reply = inner_.complete(request);
  } catch (const TransportError& err) {
    e.error = err.what();
    log_.push_back(std::move(e));
    throw;
  }
  log_.push_back(e);
  return e.reply;
}

}  // namespace fleetopt::agent
