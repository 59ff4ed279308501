#pragma once

// External environments over a child process: one JSON object per LF-ended
// line on stdin/stdout. Requests are {"op":"reset","seed":N} and
// {"op":"step","action":N}; responses carry obs/reward/terminal.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamrl/common.hpp"
#include "streamrl/env.hpp"

namespace streamrl {

class BridgeEnv final : public Env {
 public:
  BridgeEnv(const std::string& command, EnvSpec spec, double timeout_seconds = 10.0)
      : spec_(std::move(spec)), timeout_ms_(static_cast<int>(timeout_seconds * 1000.0)) {
    if (timeout_ms_ <= 0) throw ConfigError("BridgeEnv: timeout must be positive");
    spawn(command);
  }

  ~BridgeEnv() override { shutdown(); }

  BridgeEnv(const BridgeEnv&) = delete;
  BridgeEnv& operator=(const BridgeEnv&) = delete;

  EnvSpec spec() const override { return spec_; }

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    const std::uint64_t s = seed.value_or(0);
    auto reply = round_trip("{\"op\":\"reset\",\"seed\":" + std::to_string(s) + "}");
    active_ = true;
    return parse_obs(reply);
  }

  StepResult step(int action) override {
    if (!active_) throw UsageError("env_step: episode already finished (bridge)");
    detail::check_action(action, spec_);
    auto reply = round_trip("{\"op\":\"step\",\"action\":" + std::to_string(action) + "}");
    StepResult r;
    r.obs = parse_obs(reply);
    try {
      r.reward = reply.at("reward").get<double>();
      r.terminal = reply.at("terminal").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw EnvFault(std::string("bridge: bad step reply: ") + e.what() + " in " +
                     reply.dump());
    }
    r.raw_reward = r.reward;
    if (r.terminal) active_ = false;
    return r;
  }

 private:
  void spawn(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw EnvFault("bridge: pipe() failed: " + std::string(std::strerror(errno)));
    pid_ = fork();
    if (pid_ < 0) throw EnvFault("bridge: fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  void shutdown() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
      pid_ = -1;
    }
  }

  nlohmann::json round_trip(const std::string& request) {
    send_line(request);
    const std::string line = read_line();
    nlohmann::json reply = nlohmann::json::parse(line, nullptr, false);
    if (reply.is_discarded())
      throw EnvFault("bridge: malformed reply line: " + line);
    return reply;
  }

  void send_line(const std::string& request) {
    std::string payload = request + "\n";
    std::size_t sent = 0;
    while (sent < payload.size()) {
      const ssize_t n = write(write_fd_, payload.data() + sent, payload.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EnvFault("bridge: child stdin closed (" + std::string(std::strerror(errno)) +
                       ")");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      const auto lf = buffer_.find('\n');
      if (lf != std::string::npos) {
        std::string line = buffer_.substr(0, lf);
        buffer_.erase(0, lf + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      struct pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, timeout_ms_);
      if (ready == 0) throw EnvFault("bridge: timed out waiting for child reply");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw EnvFault("bridge: poll() failed: " + std::string(std::strerror(errno)));
      }
      char chunk[4096];
      const ssize_t n = read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EnvFault("bridge: read() failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) throw EnvFault("bridge: child exited before replying");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::vector<double> parse_obs(const nlohmann::json& reply) const {
    try {
      auto obs = reply.at("obs").get<std::vector<double>>();
      if (static_cast<int>(obs.size()) != spec_.observation_dim)
        throw EnvFault("bridge: obs dimension " + std::to_string(obs.size()) +
                       " != declared " + std::to_string(spec_.observation_dim));
      return obs;
    } catch (const nlohmann::json::exception& e) {
      throw EnvFault(std::string("bridge: bad obs field: ") + e.what() + " in " +
                     reply.dump());
    }
  }

  EnvSpec spec_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  bool active_ = false;
};

}  // namespace streamrl
