#include "fdnn/errors.hpp"

namespace fdnn {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::IncompatibleGrids: return "incompatible grids";
        case ErrorKind::EmptyClass: return "empty class";
        case ErrorKind::InsufficientData: return "insufficient data";
        case ErrorKind::NumericalFailure: return "numerical failure";
        case ErrorKind::DegenerateData: return "degenerate data";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace fdnn
