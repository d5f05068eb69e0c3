#include <atomic>
#include <thread>

#include <spdlog/spdlog.h>

#include "tw/error.hpp"
#include "tw/service/service.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace tw::service {

using nlohmann::ordered_json;

namespace {

int http_status(Errc code) {
  switch (code) {
    case Errc::UnknownRun:
    case Errc::UnknownEvent:
      return 404;
    case Errc::AlreadyResolved:
      return 409;
    case Errc::BadConfig:
    case Errc::BadDataset:
    case Errc::BadFormat:
    case Errc::MissingField:
      return 400;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, "Internal", e.what());
    }
  };
}

ordered_json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return ordered_json::object();
  auto j = ordered_json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::BadFormat, "request body must be a JSON object");
  return j;
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = req.get_param_value(name);
  if (v.empty()) return std::nullopt;
  return v;
}

ordered_json events_json(const std::vector<detect::AnomalyEvent>& events) {
  ordered_json out = ordered_json::array();
  for (const auto& e : events) out.push_back(detect::to_json(e));
  return out;
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  HttpOptions options;
  httplib::Server server;
  std::thread thread;
  std::atomic<int> port{0};

  Impl(Service& s, HttpOptions o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, {{"ok", true}}); }));

    server.Post("/api/runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  if (!body.contains("dataset") || !body["dataset"].is_string()) {
                    throw Error(Errc::BadDataset, "body needs a \"dataset\" string");
                  }
                  const auto id = service.start_run(body["dataset"].get<std::string>(),
                                                    body.value("config", ordered_json::object()));
                  send_json(res, to_json(service.run(id)), 201);
                }));
    server.Get("/api/runs", guarded([this](const httplib::Request&, httplib::Response& res) {
                 ordered_json out = ordered_json::array();
                 for (const auto& r : service.runs()) out.push_back(to_json(r));
                 send_json(res, out);
               }));
    server.Get(R"(/api/runs/([0-9A-Za-z]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) { send_json(res, to_json(service.run(req.matches[1]))); }));
    server.Get(R"(/api/runs/([0-9A-Za-z]+)/errors)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::optional<TrackKey> track;
                 const auto dss = param(req, "dss");
                 const auto scid = param(req, "scid");
                 if (dss || scid) {
                   if (!dss || !scid) throw Error(Errc::BadFormat, "dss and scid go together");
                   track = parse_track_key(*dss + ":" + *scid);
                   if (!track) throw Error(Errc::BadFormat, "bad dss/scid");
                 }
                 send_json(res, service.error_series(req.matches[1], track));
               }));

    server.Get("/api/anomalies", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto run = param(req, "run");
                 const std::string status = param(req, "status").value_or("pending");
                 if (status == "pending") {
                   send_json(res, events_json(service.list_pending(run)));
                   return;
                 }
                 std::optional<detect::EventStatus> filter;
                 if (status != "all") {
                   filter = detect::parse_status(status);
                   if (!filter) throw Error(Errc::BadFormat, "unknown status filter '" + status + "'");
                 }
                 send_json(res, events_json(service.list_anomalies(filter, run)));
               }));
    server.Get(R"(/api/anomalies/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, detect::to_json(service.event(req.matches[1])));
               }));
    server.Post(R"(/api/anomalies/([0-9a-f]+)/feedback)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  const auto verdict = verify::parse_verdict(body.value("verdict", std::string()));
                  if (!verdict) throw Error(Errc::BadFormat, "verdict must be \"agree\" or \"disagree\"");
                  verify::FeedbackSignal signal{*verdict, body.value("note", std::string()),
                                                body.value("operator", std::string())};
                  send_json(res, to_json(service.submit_feedback(req.matches[1], signal)));
                }));

    server.Get("/api/reports", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, service.report_ids()); }));
    server.Get(R"(/api/reports/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto rep = service.report(req.matches[1]);
                 if (param(req, "format").value_or("json") == "markdown") {
                   res.set_content(report::render_report_markdown(rep), "text/markdown; charset=utf-8");
                   return;
                 }
                 send_json(res, report::to_json(rep));
               }));
    server.Get("/api/qtable", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, verify::to_json(service.qtable())); }));

    if (options.static_dir && !server.set_mount_point("/", options.static_dir->string())) {
      spdlog::warn("static directory {} not mounted", options.static_dir->string());
    }
  }

  int bind() {
    const int p = options.port == 0 ? server.bind_to_any_port(options.host) : (server.bind_to_port(options.host, options.port) ? options.port : -1);
    if (p <= 0) throw Error(Errc::IoError, "cannot bind " + options.host + ":" + std::to_string(options.port));
    port = p;
    return p;
  }
};

HttpServer::HttpServer(Service& service, HttpOptions options) : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  const int p = impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return p;
}

void HttpServer::listen() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpServer::port() const noexcept { return impl_->port; }

}  // namespace tw::service
