#pragma once

#include <stdexcept>
#include <string>

namespace pencilrank {

enum class ErrorCode {
    InvalidArgument,
    Dimension,
    Parse,
    Io,
    Numerical,
    DegenerateCore,
    Unsupported,
};

// All library failures are thrown as Error; the C API maps the code onto pr_status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace pencilrank
