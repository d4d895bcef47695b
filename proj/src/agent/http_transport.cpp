#include <httplib.h>

#include "fleetopt/agent/chat.hpp"

namespace fleetopt::agent {

HttpChatTransport::HttpChatTransport(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  const std::string& url = endpoint_.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) throw TransportError("unsupported endpoint (https needs OpenSSL support): " + origin);
  const auto secs = static_cast<time_t>(endpoint_.timeout_seconds);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  nlohmann::json body = request_to_json(request);
  if (body["model"].get<std::string>().empty()) body["model"] = endpoint_.model;
  const auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2)
    throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  const auto doc = nlohmann::json::parse(res->body, nullptr, false);
  if (doc.is_discarded()) throw TransportError("chat response is not JSON");
  return content_from_response(doc);
}

}  // namespace fleetopt::agent
