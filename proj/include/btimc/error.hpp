#pragma once

#include <stdexcept>
#include <string>

namespace btimc {

enum class ErrorKind {
    InvalidArgument,
    OutOfDomain,
    NumericalFailure,
    Infeasible,
    InconsistentScheme,
    DataTooLarge,
    NonConverged,
    Io,
    Parse,
};

const char* to_string(ErrorKind kind);

/// Exception type used across the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace btimc
