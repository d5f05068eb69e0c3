#pragma once

// Include after Eigen-using headers: httplib pulls in resolv.h.
#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace tw::testing {

/// Local text-completion endpoint on an ephemeral port.
class StubLlm {
 public:
  enum class Mode { Reply, ServerError, EmptyReply, NotJson, Slow };

  explicit StubLlm(std::string reply = "stub reply") : reply_(std::move(reply)) {
    server_.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
      }
      switch (mode_.load()) {
        case Mode::Reply:
          res.set_content(nlohmann::json{{"model", "stub"}, {"response", reply_}, {"done", true}}.dump(),
                          "application/json");
          break;
        case Mode::ServerError:
          res.status = 500;
          res.set_content("{\"error\":\"boom\"}", "application/json");
          break;
        case Mode::EmptyReply:
          res.set_content("{\"response\":\"\"}", "application/json");
          break;
        case Mode::NotJson:
          res.set_content("<html>nope</html>", "text/html");
          break;
        case Mode::Slow:
          std::this_thread::sleep_for(std::chrono::milliseconds(1500));
          res.set_content(nlohmann::json{{"response", reply_}}.dump(), "application/json");
          break;
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubLlm() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  StubLlm(const StubLlm&) = delete;
  StubLlm& operator=(const StubLlm&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }
  void set_mode(Mode m) { mode_ = m; }
  std::string last_body() const {
    std::lock_guard lock(mu_);
    return last_body_;
  }

 private:
  std::string reply_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::atomic<Mode> mode_{Mode::Reply};
  mutable std::mutex mu_;
  std::string last_body_;
};

/// A port on 127.0.0.1 with nothing listening (bound, then released).
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace tw::testing
