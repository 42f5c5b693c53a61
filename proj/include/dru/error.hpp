#pragma once

#include <stdexcept>
#include <string>

namespace dru {

enum class ErrorCode {
    parameter,        // out-of-domain numeric parameter (gamma < 1, p outside (0,1), ...)
    input_shape,      // width / dimension mismatch
    numeric,          // non-finite intermediate value
    configuration,    // invalid config or training setup
    infeasible,       // constraint set has no feasible point
    schema,           // unknown covariate / column, missing cell
    estimation,       // not enough data to estimate a quantity
    undefined_score,  // b-score denominator below floor
    io,
    parse,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the core library. The C API maps `code()` onto
/// its status enum.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dru
