#include "mobench/util/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "mobench/util/error.hpp"

extern char** environ;

namespace mobench {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
    int read_end = -1;
    int write_end = -1;

    Pipe() {
        int fds[2];
        if (::pipe2(fds, O_CLOEXEC) != 0) {
            throw Error(std::string("pipe failed: ") + std::strerror(errno));
        }
        read_end = fds[0];
        write_end = fds[1];
    }
};

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

struct Spawned {
    int pid;
    int in;
    int out;
    int err;
};

/// Forks and execs. Everything the child needs is built before fork so the
/// child only calls async-signal-safe functions.
Spawned spawn(const std::vector<std::string>& argv, const std::map<std::string, std::string>& extra_env,
              const std::string& working_dir, const std::string& stderr_path, bool capture_err) {
    if (argv.empty()) throw Error("spawn: empty argv");
    ignore_sigpipe_once();

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    std::vector<std::string> env_storage;
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos && extra_env.count(entry.substr(0, eq))) continue;
        env_storage.push_back(std::move(entry));
    }
    for (const auto& [k, v] : extra_env) env_storage.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& e : env_storage) envp.push_back(e.data());
    envp.push_back(nullptr);

    int err_file = -1;
    if (!stderr_path.empty()) {
        err_file = ::open(stderr_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    }

    Pipe in;
    Pipe out;
    Pipe err;
    // Exec failures are reported through this pipe; CLOEXEC closes it on success.
    Pipe status;

    const pid_t pid = ::fork();
    if (pid < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in.read_end, STDIN_FILENO);
        ::dup2(out.write_end, STDOUT_FILENO);
        if (capture_err) {
            ::dup2(err.write_end, STDERR_FILENO);
        } else if (err_file >= 0) {
            ::dup2(err_file, STDERR_FILENO);
        }
        if (!working_dir.empty() && ::chdir(working_dir.c_str()) != 0) {
            const int code = errno;
            [[maybe_unused]] auto n = ::write(status.write_end, &code, sizeof code);
            ::_exit(127);
        }
        ::execvpe(args[0], args.data(), envp.data());
        const int code = errno;
        [[maybe_unused]] auto n = ::write(status.write_end, &code, sizeof code);
        ::_exit(127);
    }

    ::close(in.read_end);
    ::close(out.write_end);
    ::close(err.write_end);
    ::close(status.write_end);
    if (err_file >= 0) ::close(err_file);

    int child_errno = 0;
    const auto n = ::read(status.read_end, &child_errno, sizeof child_errno);
    ::close(status.read_end);
    if (n == static_cast<ssize_t>(sizeof child_errno)) {
        ::close(in.write_end);
        ::close(out.read_end);
        ::close(err.read_end);
        ::waitpid(pid, nullptr, 0);
        throw Error("cannot execute '" + argv[0] + "': " + std::strerror(child_errno));
    }
    if (!capture_err) ::close(err.read_end);
    return {pid, in.write_end, out.read_end, capture_err ? err.read_end : -1};
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout) {
    auto child = spawn(argv, {}, {}, {}, true);
    CommandResult result;

    std::size_t written = 0;
    if (input.empty()) close_fd(child.in);
    const auto deadline = Clock::now() + timeout;
    char buf[65536];

    while (child.out >= 0 || child.err >= 0 || child.in >= 0) {
        std::vector<pollfd> fds;
        if (child.in >= 0) fds.push_back({child.in, POLLOUT, 0});
        if (child.out >= 0) fds.push_back({child.out, POLLIN, 0});
        if (child.err >= 0) fds.push_back({child.err, POLLIN, 0});
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) {
            result.timed_out = true;
            break;
        }
        const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) continue;
        for (const auto& p : fds) {
            if (p.revents == 0) continue;
            if (p.fd == child.in) {
                const auto w = ::write(child.in, input.data() + written, input.size() - written);
                if (w > 0) written += static_cast<std::size_t>(w);
                if (w < 0 || written == input.size()) close_fd(child.in);
            } else {
                const auto r = ::read(p.fd, buf, sizeof buf);
                if (r <= 0) {
                    if (p.fd == child.out) close_fd(child.out);
                    else close_fd(child.err);
                } else if (p.fd == child.out) {
                    result.out.append(buf, static_cast<std::size_t>(r));
                } else {
                    result.err.append(buf, static_cast<std::size_t>(r));
                }
            }
        }
    }
    close_fd(child.in);
    close_fd(child.out);
    close_fd(child.err);

    int status = 0;
    if (result.timed_out) {
        ::kill(child.pid, SIGKILL);
        ::waitpid(child.pid, &status, 0);
        result.exit_code = -1;
    } else {
        ::waitpid(child.pid, &status, 0);
        result.exit_code = decode_status(status);
    }
    return result;
}

Process::Process(const std::vector<std::string>& argv, const Options& options) {
    auto child = spawn(argv, options.env, options.working_dir, options.stderr_path, false);
    pid_ = child.pid;
    stdin_fd_ = child.in;
    stdout_fd_ = child.out;
}

Process::~Process() {
    close_stdin();
    if (!exit_code_) {
        if (!wait(std::chrono::milliseconds(200))) kill();
    }
    close_fd(stdout_fd_);
}

bool Process::write_line(const std::string& line) {
    if (stdin_fd_ < 0) return false;
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
        const auto w = ::write(stdin_fd_, data.data() + off, data.size() - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(w);
    }
    return true;
}

std::optional<std::string> Process::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    while (true) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (eof_ || stdout_fd_ < 0) return std::nullopt;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() < 0) return std::nullopt;
        pollfd p{stdout_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc == 0) return std::nullopt;
        char buf[8192];
        const auto r = ::read(stdout_fd_, buf, sizeof buf);
        if (r <= 0) {
            eof_ = true;
            continue;
        }
        buffer_.append(buf, static_cast<std::size_t>(r));
    }
}

void Process::close_stdin() { close_fd(stdin_fd_); }

bool Process::reap(bool block) {
    if (exit_code_) return true;
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
    if (r == pid_) {
        exit_code_ = decode_status(status);
        return true;
    }
    return false;
}

std::optional<int> Process::wait(std::chrono::milliseconds timeout) {
    close_stdin();
    const auto deadline = Clock::now() + timeout;
    while (!reap(false)) {
        if (Clock::now() >= deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return exit_code_;
}

void Process::kill() {
    if (exit_code_) return;
    ::kill(pid_, SIGKILL);
    reap(true);
}

bool Process::running() { return !reap(false); }

}  // namespace mobench
