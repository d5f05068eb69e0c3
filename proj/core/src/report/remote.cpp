#include <cmath>

#include <nlohmann/json.hpp>

#include "tw/report/report.hpp"

#include <httplib.h>

namespace tw::report {

RemoteReply call_remote(const RemoteBackend& backend, const std::string& prompt) {
  RemoteReply reply;
  httplib::Client client(backend.base_url);
  if (!client.is_valid()) {
    reply.error = "invalid base url";
    return reply;
  }
  const double t = backend.timeout_s > 0 ? backend.timeout_s : 10.0;
  const auto sec = static_cast<time_t>(t);
  const auto usec = static_cast<time_t>(std::llround((t - static_cast<double>(sec)) * 1e6));
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  const nlohmann::json body{{"model", backend.model}, {"prompt", prompt}, {"stream", false}};
  const auto res = client.Post(backend.path, body.dump(), "application/json");
  if (!res) {
    reply.error = httplib::to_string(res.error());
    return reply;
  }
  if (res->status != 200) {
    reply.error = "http status " + std::to_string(res->status);
    return reply;
  }
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("response") || !j["response"].is_string()) {
    reply.error = "reply has no response text";
    return reply;
  }
  reply.text = j["response"].get<std::string>();
  if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    reply.text.clear();
    reply.error = "empty response text";
  }
  return reply;
}

}  // namespace tw::report
