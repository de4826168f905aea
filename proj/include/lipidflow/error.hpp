#pragma once

#include <stdexcept>
#include <string>

namespace lipidflow {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    Truncated = 4,
    EmptyInput = 5,
    DimensionMismatch = 6,
    PupilNotFound = 7,
    Alignment = 8,
    Numerical = 9,
    MaskTooSmall = 10,
    NoSeeds = 11,
    NoTrajectories = 12,
    NoInterBlinks = 13,
    InsufficientData = 14,
    OutOfBounds = 15,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what, ErrorCode code = ErrorCode::InvalidArgument)
{
    if (!cond) fail(code, what);
}

}  // namespace lipidflow
