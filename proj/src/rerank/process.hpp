#pragma once

#include <string>
#include <sys/types.h>
#include <vector>

namespace rerank {

struct ProcessResult {
    int exit_code = -1;  // negative signal number when killed by a signal
    std::string out;
    std::string err;
};

/// Runs argv[0] (PATH-resolved) to completion, capturing both streams.
ProcessResult run_process(const std::vector<std::string>& argv);

/// Looks a program up on PATH; empty when absent. Absolute or relative paths
/// are checked for executability directly.
std::string find_program(const std::string& name);

/// A child left running in the background, with its stdout piped back.
/// Destruction kills and reaps it.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv);
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;
    ~ChildProcess();

    /// Next line of stdout (without newline); empty on EOF or timeout.
    std::string read_line(int timeout_ms);
    void terminate();
    pid_t pid() const noexcept { return pid_; }

private:
    pid_t pid_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
};

}  // namespace rerank
