#pragma once

#include <stdexcept>
#include <string>

namespace asep {

// Exit codes used by the command line front end. Each error class maps to one.
enum class ExitCode : int {
    ok = 0,
    invariant_failure = 1,
    parameter = 2,
    capacity = 3,
    numerical = 4,
    io = 5,
    unknown_command = 6,
    refinement = 7,
    range = 8,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error(ExitCode::parameter, w) {}
};
struct CapacityError : Error {
    explicit CapacityError(const std::string& w) : Error(ExitCode::capacity, w) {}
};
struct NumericalError : Error {
    double residual;
    NumericalError(const std::string& w, double res)
        : Error(ExitCode::numerical, w + " (residual " + std::to_string(res) + ")"), residual(res) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ExitCode::io, w) {}
};
struct RefinementError : Error {
    explicit RefinementError(const std::string& w) : Error(ExitCode::refinement, w) {}
};
struct RangeError : Error {
    explicit RangeError(const std::string& w) : Error(ExitCode::range, w) {}
};

}  // namespace asep
