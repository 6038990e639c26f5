#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <unordered_map>

#include "clarity/edge_oracle.hpp"
#include "clarity/errors.hpp"
#include "clarity/hashing.hpp"
#include "wire_protocol.hpp"

extern char** environ;

namespace clarity {
namespace {

std::vector<std::string> ids_of(std::span<const PairRequest> batch) {
  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (const auto& r : batch) ids.push_back(r.pair_id);
  return ids;
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "terminated";
}

}  // namespace

ExternalScorer::ExternalScorer(ExternalScorerOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw InvalidArgument("external scorer: empty command");

  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
    throw ScorerError(std::string("external scorer: socketpair failed: ") + std::strerror(errno));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

  const char* argv[] = {"/bin/sh", "-c", options_.command.c_str(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    throw ScorerError("external scorer: cannot launch '" + options_.command + "': " + std::strerror(rc));
  }
  fd_ = fds[0];
  pid_ = pid;
  ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
}

ExternalScorer::~ExternalScorer() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);  // EOF on the child's stdin asks it to exit
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on EOF before killing it.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ExternalScorer::id() const {
  return "external-" + sha256_hex(options_.command).substr(0, 16);
}

void ExternalScorer::terminate_child() {
  poisoned_ = true;
  pending_.clear();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::vector<double> ExternalScorer::score(std::span<const PairRequest> batch) {
  std::lock_guard lock(mutex_);
  std::vector<double> out;
  out.reserve(batch.size());
  const std::size_t step = options_.batch_size == 0 ? batch.size() : options_.batch_size;
  for (std::size_t start = 0; start < batch.size(); start += step) {
    const auto chunk = batch.subspan(start, std::min(step, batch.size() - start));
    auto scores = score_one_batch(chunk);
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::vector<double> ExternalScorer::score_one_batch(std::span<const PairRequest> batch) {
  if (poisoned_ || fd_ < 0) throw ScorerError("external scorer session is no longer usable", ids_of(batch));
  if (batch.empty()) return {};

  std::unordered_map<std::string, std::size_t> slot;
  std::string outgoing;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!slot.emplace(batch[i].pair_id, i).second)
      throw InvalidArgument("external scorer: duplicate pair_id in batch: " + batch[i].pair_id);
    outgoing += wire::encode_request(batch[i]);
    outgoing += '\n';
  }
  outgoing += '\n';  // blank line flushes the batch

  std::vector<double> scores(batch.size());
  std::vector<bool> answered(batch.size(), false);
  std::size_t remaining = batch.size();
  std::size_t line_no = 0;
  std::size_t written = 0;

  const auto fail = [&](const std::string& why) -> ScorerError {
    terminate_child();
    return ScorerError("external scorer: " + why, ids_of(batch));
  };
  const auto child_gone = [&]() -> ScorerError {
    int status = 0;
    std::string how = "closed its output";
    for (int i = 0; i < 20 && pid_ > 0; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        how = describe_status(status);
        pid_ = -1;
      } else {
        ::usleep(5000);
      }
    }
    return fail("process " + how + " with " + std::to_string(remaining) + " pair(s) unanswered");
  };

  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  while (remaining > 0 || written < outgoing.size()) {
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0)
      throw fail("timed out after " + std::to_string(options_.timeout.count()) + " ms with " +
                 std::to_string(remaining) + " pair(s) unanswered");

    const short events = static_cast<short>((remaining > 0 ? POLLIN : 0) | (written < outgoing.size() ? POLLOUT : 0));
    pollfd pfd{fd_, events, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;

    if ((pfd.revents & POLLOUT) && written < outgoing.size()) {
      const auto n = ::send(fd_, outgoing.data() + written, outgoing.size() - written, MSG_NOSIGNAL);
      if (n < 0 && (errno == EPIPE || errno == ECONNRESET)) throw child_gone();
      if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
        throw fail(std::string("write failed: ") + std::strerror(errno));
      if (n > 0) written += static_cast<std::size_t>(n);
    }

    if ((pfd.revents & (POLLIN | POLLHUP | POLLERR)) && remaining > 0) {
      char buf[1 << 16];
      const auto n = ::recv(fd_, buf, sizeof buf, 0);
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        if (errno == ECONNRESET) throw child_gone();
        throw fail(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw child_gone();
      pending_.append(buf, static_cast<std::size_t>(n));

      std::size_t pos = 0;
      for (auto nl = pending_.find('\n', pos); nl != std::string::npos; nl = pending_.find('\n', pos)) {
        std::string_view line(pending_.data() + pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        wire::Response r;
        try {
          r = wire::decode_response(line);
        } catch (const std::runtime_error& e) {
          throw fail("malformed response at line " + std::to_string(line_no) + ": " + e.what());
        }
        const auto it = slot.find(r.pair_id);
        if (it == slot.end())
          throw fail("unknown pair_id at line " + std::to_string(line_no) + ": " + r.pair_id);
        if (answered[it->second])
          throw fail("duplicate response at line " + std::to_string(line_no) + " for " + r.pair_id);
        answered[it->second] = true;
        scores[it->second] = r.p_isnext;
        --remaining;
      }
      pending_.erase(0, pos);
    }
  }
  return scores;
}

}  // namespace clarity
