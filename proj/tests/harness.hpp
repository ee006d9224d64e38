#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "support.hpp"
#include "vlt/service.hpp"

namespace support {

/// Service on an ephemeral local port, served from a background thread.
class LiveService {
 public:
  explicit LiveService(std::optional<std::filesystem::path> data_dir = std::nullopt) : service_(std::move(data_dir)) {
    service_.install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveService() {
    server_.stop();
    thread_.join();
  }
  LiveService(const LiveService&) = delete;
  LiveService& operator=(const LiveService&) = delete;

  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  vlt::Service service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

inline vlt::json post_json(httplib::Client& c, const std::string& path, const vlt::json& body, int* status = nullptr) {
  auto res = c.Post(path, body.dump(), "application/json");
  if (!res) throw std::runtime_error("no response from " + path);
  if (status) *status = res->status;
  return vlt::json::parse(res->body);
}

struct CliResult {
  int exit_code = -1;
  std::string out, err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

/// Runs the vlt executable with `args` and captures both streams.
inline CliResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& scratch) {
  const auto out = scratch / "cli.out", err = scratch / "cli.err";
  std::string cmd = shell_quote(VLT_CLI);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = raw != -1 && WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

}  // namespace support
