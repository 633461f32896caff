#include "rerank/error.hpp"

namespace rerank {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kArgument:   return "argument error";
        case ErrorCode::kShape:      return "shape error";
        case ErrorCode::kValidation: return "validation error";
        case ErrorCode::kIo:         return "I/O error";
        case ErrorCode::kVersion:    return "version error";
        case ErrorCode::kTransport:  return "transport error";
        case ErrorCode::kProtocol:   return "protocol error";
        case ErrorCode::kRemote:     return "remote error";
        case ErrorCode::kToolchain:  return "toolchain error";
    }
    return "error";
}

}  // namespace rerank
