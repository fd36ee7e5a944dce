#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace epifit {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// State/parameter vector length does not match the model, or inputs are non-finite.
struct DimensionError : Error {
    using Error::Error;
};

/// Integration failure. `kind` distinguishes the failure mode.
struct SolverError : Error {
    enum class Kind { StepUnderflow, MaxSteps, NonFinite };
    Kind kind;
    SolverError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

/// Container file problems: bad magic, version mismatch, truncation.
struct FormatError : Error {
    std::uint64_t byte_offset;
    FormatError(const std::string& msg, std::uint64_t offset = 0)
        : Error(msg), byte_offset(offset) {}
};

} // namespace epifit
