// Copyright 2026 The snas Authors.
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

#pragma once

// Minimal POSIX child process with line-oriented pipes on stdin/stdout.
// stderr goes to an anonymous temporary file so it can be attached to
// crash reports without risking a full pipe.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snas/error.hpp"

namespace snas {

class Subprocess {
 public:
  explicit Subprocess(const std::vector<std::string>& argv) {
    if (argv.empty()) throw ConfigError("command", "empty command line");
    ::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw Error("pipe() failed");
    char tmpl[] = "/tmp/snas-stderr-XXXXXX";
    err_fd_ = ::mkstemp(tmpl);
    if (err_fd_ >= 0) ::unlink(tmpl);

    pid_ = ::fork();
    if (pid_ < 0) throw Error("fork() failed");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      if (err_fd_ >= 0) ::dup2(err_fd_, STDERR_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      std::fprintf(stderr, "exec %s: %s\n", args[0], std::strerror(errno));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    if (err_fd_ >= 0) ::fcntl(err_fd_, F_SETFD, FD_CLOEXEC);
  }

  /// `sh -c command`
  static Subprocess shell(const std::string& command) {
    return Subprocess(std::vector<std::string>{"/bin/sh", "-c", command});
  }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  Subprocess(Subprocess&& o) noexcept { *this = std::move(o); }
  Subprocess& operator=(Subprocess&& o) noexcept {
    std::swap(pid_, o.pid_);
    std::swap(to_child_, o.to_child_);
    std::swap(from_child_, o.from_child_);
    std::swap(err_fd_, o.err_fd_);
    std::swap(buffer_, o.buffer_);
    std::swap(exit_status_, o.exit_status_);
    return *this;
  }

  ~Subprocess() {
    close_stdin();
    if (pid_ > 0 && !exit_status_) {
      if (!wait_for(std::chrono::milliseconds(2000))) {
        ::kill(pid_, SIGKILL);
        wait_for(std::chrono::milliseconds(2000));
      }
    }
    if (from_child_ >= 0) ::close(from_child_);
    if (err_fd_ >= 0) ::close(err_fd_);
  }

  void write_all(std::string_view data) {
    while (!data.empty()) {
      const ssize_t n = ::write(to_child_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw WorkerCrashed("worker closed its input: " + std::string(std::strerror(errno)) +
                            diagnostics());
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  void close_stdin() {
    if (to_child_ >= 0) {
      ::close(to_child_);
      to_child_ = -1;
    }
  }

  /// Next line without its terminator, or nullopt at end of stream.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw TimeoutError("worker did not answer within " +
                                                std::to_string(timeout.count()) + " ms");
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buffer_.empty()) return std::nullopt;
        std::string line = std::move(buffer_);
        buffer_.clear();
        return line;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Everything remaining on stdout until EOF.
  std::string read_all(std::chrono::milliseconds timeout) {
    std::string out;
    while (auto line = read_line(timeout)) out += *line + "\n";
    return out;
  }

  /// Waits for exit; returns false if still running after `timeout`.
  bool wait_for(std::chrono::milliseconds timeout) {
    if (exit_status_) return true;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      int status = 0;
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        exit_status_ = status;
        return true;
      }
      if (r < 0) {
        exit_status_ = -1;
        return true;
      }
      if (std::chrono::steady_clock::now() >= deadline) return false;
      ::usleep(1000);
    }
  }

  /// Exit code, or -1 if killed by a signal or not reaped yet.
  int exit_code() const {
    if (!exit_status_ || *exit_status_ < 0 || !WIFEXITED(*exit_status_)) return -1;
    return WEXITSTATUS(*exit_status_);
  }

  std::string stderr_text() const {
    if (err_fd_ < 0) return {};
    std::string out;
    char chunk[4096];
    ssize_t n;
    off_t off = 0;
    while ((n = ::pread(err_fd_, chunk, sizeof chunk, off)) > 0) {
      out.append(chunk, static_cast<std::size_t>(n));
      off += n;
      if (out.size() > 64 * 1024) break;
    }
    return out;
  }

  /// Exit state and captured stderr, for error messages.
  std::string diagnostics() {
    wait_for(std::chrono::milliseconds(200));
    std::string s;
    if (exit_status_) {
      if (WIFEXITED(*exit_status_)) {
        s += "; exit code " + std::to_string(WEXITSTATUS(*exit_status_));
      } else if (WIFSIGNALED(*exit_status_)) {
        s += "; killed by signal " + std::to_string(WTERMSIG(*exit_status_));
      }
    }
    const std::string err = stderr_text();
    if (!err.empty()) s += "; stderr: " + err;
    return s;
  }

  void kill() {
    if (pid_ > 0 && !exit_status_) {
      ::kill(pid_, SIGKILL);
      wait_for(std::chrono::milliseconds(2000));
    }
  }

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_fd_ = -1;
  std::string buffer_;
  std::optional<int> exit_status_;
};

}  // namespace snas
