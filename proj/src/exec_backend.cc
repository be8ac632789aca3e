// Copyright 2026 The Keycap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Subprocess captioner: one long-lived child speaking newline-delimited JSON.
//
//   request  {"id": <int>, "png_b64": <base64 PNG>}
//   response {"id": <int>, "caption": <string>, "confidence": <number, optional>}
//
// Several requests may be outstanding at once; a reader thread routes each
// response line to its waiter by id.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "backends.h"
#include "keycap/image_io.h"

extern char** environ;

namespace keycap::internal {
namespace {

using json = nlohmann::json;

struct TransportFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

class Child {
 public:
  explicit Child(const std::string& command) {
    int in[2];
    int out[2];
    if (pipe2(in, O_CLOEXEC) != 0) throw TransportFailure(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(out, O_CLOEXEC) != 0) {
      close(in[0]);
      close(in[1]);
      throw TransportFailure(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in[0]);
    close(out[1]);
    if (rc != 0) {
      close(in[1]);
      close(out[0]);
      throw TransportFailure("cannot start '" + command + "': " + std::strerror(rc));
    }
    to_child_ = in[1];
    from_child_ = out[0];
    reader_ = std::thread([this] { read_loop(); });
  }

  ~Child() {
    stop_ = true;
    close_input();
    bool reaped = false;
    for (int i = 0; i < 50 && !reaped; ++i) {
      reaped = try_reap();
      if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      kill(pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
      std::lock_guard lock(mu_);
      reaped_ = true;
      status_ = status;
    }
    reader_.join();
    close(from_child_);
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  bool alive() {
    std::lock_guard lock(mu_);
    return !dead_;
  }

  void terminate() { kill(pid_, SIGKILL); }

  json exchange(std::int64_t id, const std::string& png_b64, std::chrono::duration<double> timeout) {
    std::future<json> reply;
    {
      std::lock_guard lock(mu_);
      if (dead_) throw TransportFailure("captioner process " + death_);
      reply = pending_[id].get_future();
    }
    std::string line = json{{"id", id}, {"png_b64", png_b64}}.dump() + "\n";
    if (!write_all(line)) {
      forget(id);
      std::lock_guard lock(mu_);
      throw TransportFailure("captioner process " + (dead_ ? death_ : std::string("closed its input")));
    }
    if (reply.wait_for(timeout) != std::future_status::ready) {
      forget(id);
      terminate();
      throw TransportFailure("timed out after " + std::to_string(timeout.count()) + " s");
    }
    return reply.get();
  }

 private:
  bool write_all(const std::string& data) {
    std::lock_guard lock(write_mu_);
    if (to_child_ < 0) return false;
    std::size_t done = 0;
    while (done < data.size()) {
      ssize_t n = write(to_child_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  void close_input() {
    std::lock_guard lock(write_mu_);
    if (to_child_ >= 0) close(to_child_);
    to_child_ = -1;
  }

  void forget(std::int64_t id) {
    std::lock_guard lock(mu_);
    pending_.erase(id);
  }

  bool try_reap() {
    std::lock_guard lock(mu_);
    if (reaped_) return true;
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      reaped_ = true;
      status_ = status;
    }
    return reaped_;
  }

  // Fails every outstanding request and marks the child unusable.
  void fail_all(const std::string& reason, bool malformed) {
    std::lock_guard lock(mu_);
    if (!dead_) death_ = reason;
    dead_ = true;
    for (auto& [id, p] : pending_) {
      if (malformed) {
        p.set_exception(std::make_exception_ptr(MalformedResponse(reason)));
      } else {
        p.set_exception(std::make_exception_ptr(TransportFailure("captioner process " + reason)));
      }
    }
    pending_.clear();
  }

  void dispatch(const std::string& line) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception&) {
      fail_all("malformed response: not JSON", true);
      terminate();
      return;
    }
    if (!msg.is_object() || !msg.contains("id") || !msg["id"].is_number_integer()) {
      fail_all("malformed response: missing integer id", true);
      terminate();
      return;
    }
    std::lock_guard lock(mu_);
    auto it = pending_.find(msg["id"].get<std::int64_t>());
    if (it == pending_.end()) return;  // late reply to a timed-out request
    it->second.set_value(std::move(msg));
    pending_.erase(it);
  }

  void read_loop() {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      pollfd pfd{from_child_, POLLIN, 0};
      int ready = poll(&pfd, 1, 100);
      if (ready < 0 && errno != EINTR) break;
      if (ready <= 0) {
        if (stop_ && try_reap()) break;
        continue;
      }
      ssize_t n = read(from_child_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty()) dispatch(line);
      }
    }
    // Give the exit status a moment to become available for the message.
    std::string reason = "closed its output";
    for (int i = 0; i < 20; ++i) {
      if (try_reap()) {
        std::lock_guard lock(mu_);
        reason = describe_status(status_);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    fail_all(reason, false);
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::thread reader_;
  std::atomic<bool> stop_{false};

  std::mutex write_mu_;
  std::mutex mu_;
  std::map<std::int64_t, std::promise<json>> pending_;
  bool dead_ = false;
  bool reaped_ = false;
  int status_ = 0;
  std::string death_;
};

class ExecBackend : public CaptionBackend {
 public:
  explicit ExecBackend(const CaptionerConfig& config) : config_(config) {
    // A dead child turns writes into EPIPE errors instead of killing us.
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { signal(SIGPIPE, SIG_IGN); });
  }

  std::string name() const override { return "exec"; }
  std::string model_id() const override { return "exec:" + config_.endpoint; }

  Caption caption(const Frame& frame) override {
    std::string png_b64;
    try {
      png_b64 = base64_encode(encode_png(frame.width, frame.height, frame.pixels));
    } catch (const std::exception& e) {
      throw CaptionError(name(), frame.index, e.what());
    }
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      try {
        std::shared_ptr<Child> child = acquire();
        json reply = child->exchange(next_id_++, png_b64, std::chrono::duration<double>(config_.timeout_s));
        return parse_reply(reply, frame.index);
      } catch (const TransportFailure& e) {
        last_error = e.what();
      } catch (const MalformedResponse& e) {
        throw CaptionError(name(), frame.index, e.what());
      }
    }
    throw CaptionError(name(), frame.index,
                       "transport failure after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
  }

 private:
  std::shared_ptr<Child> acquire() {
    std::lock_guard lock(mu_);
    if (!child_ || !child_->alive()) child_ = std::make_shared<Child>(config_.endpoint);
    return child_;
  }

  Caption parse_reply(const json& reply, std::size_t frame_index) const {
    Caption c;
    if (reply.contains("error") && reply["error"].is_string() && !reply.contains("caption")) {
      throw CaptionError(name(), frame_index, "captioner reported: " + reply["error"].get<std::string>());
    }
    if (!reply.contains("caption") || !reply["caption"].is_string()) {
      throw CaptionError(name(), frame_index, "malformed response: missing caption string");
    }
    c.text = reply["caption"].get<std::string>();
    if (reply.contains("confidence") && !reply["confidence"].is_null()) {
      if (!reply["confidence"].is_number()) {
        throw CaptionError(name(), frame_index, "malformed response: confidence is not a number");
      }
      c.confidence = reply["confidence"].get<double>();
    }
    c.model_id = reply.contains("model_id") && reply["model_id"].is_string() ? reply["model_id"].get<std::string>()
                                                                              : model_id();
    validate_caption(c, name(), frame_index);
    return c;
  }

  CaptionerConfig config_;
  std::mutex mu_;
  std::shared_ptr<Child> child_;
  std::atomic<std::int64_t> next_id_{1};
};

}  // namespace

std::unique_ptr<CaptionBackend> make_exec_backend(const CaptionerConfig& config) {
  return std::make_unique<ExecBackend>(config);
}

}  // namespace keycap::internal
