#include "mcxai/external.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "mcxai/error.hpp"

extern char** environ;

namespace mcxai {

class AdapterProcess {
 public:
  explicit AdapterProcess(const std::string& command) {
    // A dead adapter must surface as a write error, not kill the engine.
    ::signal(SIGPIPE, SIG_IGN);

    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
      throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::string sh = "/bin/sh";
    std::string flag = "-c";
    std::string cmd = command;
    char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw ProtocolError("cannot launch adapter: " + std::string(std::strerror(rc)));
    }
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~AdapterProcess() {
    close_pipes();
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  void send_line(const std::string& line) {
    std::string buf = line + '\n';
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      ssize_t w = ::write(write_fd_, p, left);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("adapter write failed: ") + std::strerror(errno));
      }
      p += w;
      left -= static_cast<std::size_t>(w);
    }
  }

  std::string read_line() {
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      ssize_t r = ::read(read_fd_, chunk, sizeof chunk);
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("adapter read failed: ") + std::strerror(errno));
      }
      if (r == 0) throw ProtocolError("adapter closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(r));
    }
  }

  // Returns the exit status, or -1 if the process did not exit normally.
  int wait() {
    close_pipes();
    int status = 0;
    if (pid_ > 0 && ::waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    pid_ = -1;
    return -1;
  }

 private:
  void close_pipes() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

namespace {

nlohmann::json round_trip(AdapterProcess& proc, const nlohmann::json& request) {
  proc.send_line(request.dump());
  const std::string line = proc.read_line();
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed adapter response: " + line.substr(0, 200));
  }
  if (!response.is_object() || !response.contains("id") ||
      !response["id"].is_number_unsigned()) {
    throw ProtocolError("adapter response lacks a numeric id");
  }
  if (response["id"].get<std::uint64_t>() != request["id"].get<std::uint64_t>()) {
    throw ProtocolError("adapter response id " + response["id"].dump() +
                        " does not match request id " + request["id"].dump());
  }
  if (response.contains("error")) {
    throw ProtocolError("adapter error: " + response["error"].dump());
  }
  return response;
}

}  // namespace

ClassDistribution normalize_external_distribution(std::vector<double> probs) {
  if (probs.empty()) throw ProtocolError("adapter returned an empty distribution");
  double sum = 0.0;
  for (double& p : probs) {
    if (!std::isfinite(p) || p < -1e-9 || p > 1.0 + 1e-9) {
      throw ProtocolError("adapter probability " + std::to_string(p) + " outside [0, 1]");
    }
    p = std::clamp(p, 0.0, 1.0);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-3) {
    throw ProtocolError("adapter distribution sums to " + std::to_string(sum));
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    for (double& p : probs) p /= sum;
  }
  return probs;
}

ExternalClassifier::ExternalClassifier(const std::string& command)
    : proc_(std::make_unique<AdapterProcess>(command)) {
  const std::uint64_t id = next_id_++;
  auto response = round_trip(*proc_, {{"id", id}, {"op", "info"}});
  try {
    n_features_ = response.at("n_features").get<std::size_t>();
    n_classes_ = response.at("n_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed info response: " + response.dump());
  }
  if (n_features_ == 0 || n_classes_ == 0) {
    throw ProtocolError("adapter announced an empty shape");
  }
}

ExternalClassifier::~ExternalClassifier() {
  try {
    shutdown();
  } catch (const std::exception&) {
    // The process is reaped by AdapterProcess regardless.
  }
}

void ExternalClassifier::shutdown() {
  if (!proc_) return;
  auto proc = std::move(proc_);
  const std::uint64_t id = next_id_++;
  auto response = round_trip(*proc, {{"id", id}, {"op", "shutdown"}});
  if (!response.value("ok", false)) throw ProtocolError("adapter refused shutdown");
  proc->wait();
}

std::vector<ClassDistribution> ExternalClassifier::predict_proba(
    std::span<const FeatureVector> xs) const {
  check_dimensions(xs);
  if (!proc_) throw ProtocolError("adapter has been shut down");
  if (xs.empty()) return {};
  const std::uint64_t id = next_id_++;
  nlohmann::json request = {{"id", id}, {"op", "predict"}, {"instances", nlohmann::json::array()}};
  for (const auto& x : xs) request["instances"].push_back(x);
  auto response = round_trip(*proc_, request);

  std::vector<std::vector<double>> rows;
  try {
    rows = response.at("probs").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed predict response");
  }
  if (rows.size() != xs.size()) {
    throw ProtocolError("adapter returned " + std::to_string(rows.size()) +
                        " distributions for " + std::to_string(xs.size()) + " instances");
  }
  std::vector<ClassDistribution> out;
  out.reserve(rows.size());
  for (auto& row : rows) {
    if (row.size() != n_classes_) {
      throw ProtocolError("adapter distribution has " + std::to_string(row.size()) +
                          " classes, expected " + std::to_string(n_classes_));
    }
    out.push_back(normalize_external_distribution(std::move(row)));
  }
  return out;
}

}  // namespace mcxai
