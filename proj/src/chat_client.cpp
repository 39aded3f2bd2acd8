#include "httplib.h"
#include "partisan/annotate.hpp"

namespace partisan {

HttpChatClient::HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint URL needs a scheme: '" + cfg_.url + "'");
  }
  const auto scheme = cfg_.url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ValidationError("endpoint URL scheme must be http or https: '" + cfg_.url + "'");
  }
  const auto path_start = cfg_.url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    origin_ = cfg_.url;
    path_ = "/";
  } else {
    origin_ = cfg_.url.substr(0, path_start);
    path_ = cfg_.url.substr(path_start);
  }
  if (origin_.size() <= scheme_end + 3) throw ValidationError("endpoint URL has no host: '" + cfg_.url + "'");
}

ChatReply HttpChatClient::complete(const std::string& prompt) {
  // httplib::Client is not safe to share across threads; one per call.
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);

  const std::string body = build_chat_request(cfg_.model, prompt).dump();
  auto res = client.Post(path_, headers, body, "application/json");

  ChatReply reply;
  if (!res) {
    reply.status = ChatReply::Status::transient;
    reply.error = "connection error: " + httplib::to_string(res.error());
    return reply;
  }
  reply.http_status = res->status;
  if (res->status == 429) {
    reply.status = ChatReply::Status::rate_limited;
    if (res->has_header("Retry-After")) {
      try {
        reply.retry_after_s = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
        reply.retry_after_s = 0.0;
      }
    }
    return reply;
  }
  if (res->status >= 500) {
    reply.status = ChatReply::Status::transient;
    reply.error = "HTTP " + std::to_string(res->status);
    return reply;
  }
  if (res->status < 200 || res->status >= 300) {
    reply.status = ChatReply::Status::fatal;
    reply.error = "HTTP " + std::to_string(res->status);
    return reply;
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    reply.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    reply.status = ChatReply::Status::ok;
  } catch (const nlohmann::json::exception& e) {
    reply.status = ChatReply::Status::transient;
    reply.error = std::string("malformed completion body: ") + e.what();
  }
  return reply;
}

}  // namespace partisan
