#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdnn {

enum class ErrorKind {
    InvalidArgument,
    IncompatibleGrids,
    EmptyClass,
    InsufficientData,
    NumericalFailure,
    DegenerateData,
    Parse,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind drives
/// the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace fdnn
