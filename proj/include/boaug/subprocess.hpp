/**
 * Copyright 2026 The BO-Aug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef BOAUG_SUBPROCESS_HPP_
#define BOAUG_SUBPROCESS_HPP_

#include <csignal>
#include <cstring>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "boaug/errors.hpp"

namespace boaug {

/// A child process spoken to over its standard input/output, line by line.
/// The command runs under /bin/sh.
class LineSubprocess {
 public:
  explicit LineSubprocess(const std::string& command) {
    // A dying child must surface as an EOF/EPIPE error, not a process kill.
    std::signal(SIGPIPE, SIG_IGN);

    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw EvaluationError("cannot create pipes for: " + command);
    }
    pid_ = fork();
    if (pid_ < 0) throw EvaluationError("fork failed for: " + command);
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
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  LineSubprocess(const LineSubprocess&) = delete;
  LineSubprocess& operator=(const LineSubprocess&) = delete;

  ~LineSubprocess() { terminate(); }

  bool running() const { return pid_ > 0; }

  /// Write one line (newline appended).
  void write_line(const std::string& line) {
    std::string payload = line + "\n";
    size_t off = 0;
    while (off < payload.size()) {
      ssize_t n = ::write(stdin_fd_, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError("child stdin closed (" + std::string(std::strerror(errno)) + ")");
      }
      off += static_cast<size_t>(n);
    }
  }

  /// Read one newline-terminated line, waiting at most timeout_ms. On
  /// timeout the child is killed and EvaluationError is thrown; on EOF an
  /// EvaluationError reports child exit.
  std::string read_line(long timeout_ms) {
    std::string line;
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      struct pollfd pfd{stdout_fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(timeout_ms));
      if (rc == 0) {
        terminate();
        throw EvaluationError("timed out after " + std::to_string(timeout_ms) +
                              " ms waiting for child response");
      }
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError("poll failed: " + std::string(std::strerror(errno)));
      }
      char chunk[4096];
      ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError("read from child failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) {
        int status = wait_exit();
        throw EvaluationError("child exited (status " + std::to_string(status) +
                              ") before responding");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  void terminate() {
    if (pid_ <= 0) return;
    close(stdin_fd_);
    close(stdout_fd_);
    kill(pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }

 private:
  int wait_exit() {
    close(stdin_fd_);
    close(stdout_fd_);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
};

}  // namespace boaug

#endif  // BOAUG_SUBPROCESS_HPP_
