#pragma once

#include <stdexcept>
#include <string>

namespace rerank {

enum class ErrorCode {
    kArgument,
    kShape,
    kValidation,
    kIo,
    kVersion,
    kTransport,
    kProtocol,
    kRemote,
    kToolchain,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the core carries one of the codes above; the C API
/// maps them one-to-one onto rr_status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace rerank
