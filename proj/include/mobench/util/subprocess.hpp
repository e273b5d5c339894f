#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mobench {

struct CommandResult {
    int exit_code = -1;  ///< -1 when killed or never started
    std::string out;
    std::string err;
    bool timed_out = false;
};

/// Runs argv[0] (PATH lookup) to completion, feeding `input` on stdin.
/// Throws mobench::Error only if the process cannot be spawned.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& input = {},
                          std::chrono::milliseconds timeout = std::chrono::seconds(30));

/// A child process with line-oriented pipes on stdin/stdout. stderr is
/// inherited unless a log path is given.
class Process {
public:
    struct Options {
        std::map<std::string, std::string> env;  ///< added on top of the parent environment
        std::string working_dir;
        std::string stderr_path;  ///< empty: inherit
    };

    Process(const std::vector<std::string>& argv, const Options& options);
    ~Process();

    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;

    /// Writes `line` plus '\n'. Returns false if the pipe is closed.
    bool write_line(const std::string& line);

    /// Next '\n'-terminated line without the terminator; nullopt on timeout or EOF.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

    bool eof() const noexcept { return eof_; }

    /// Closes stdin and waits up to `timeout` for exit. Returns the exit code or
    /// nullopt if the process is still running.
    std::optional<int> wait(std::chrono::milliseconds timeout);

    void kill();

    bool running();

    int pid() const noexcept { return pid_; }

private:
    int pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    bool eof_ = false;
    std::optional<int> exit_code_;
    std::string buffer_;

    void close_stdin();
    bool reap(bool block);
};

}  // namespace mobench
