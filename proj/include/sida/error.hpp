#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sida {

enum class ErrorCode {
    parse,          // malformed input file
    validation,     // contract violation in arguments or configuration
    singular,       // matrix too close to singular for the requested operation
    tau_too_large,  // every penalized view shrunk to zero
    not_converged,
    io,
};

inline constexpr std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::parse: return "PARSE_ERROR";
        case ErrorCode::validation: return "VALIDATION_ERROR";
        case ErrorCode::singular: return "SINGULAR_MATRIX";
        case ErrorCode::tau_too_large: return "TAU_TOO_LARGE";
        case ErrorCode::not_converged: return "NOT_CONVERGED";
        case ErrorCode::io: return "IO_ERROR";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg)
{
    throw Error(code, msg);
}

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw Error(ErrorCode::validation, msg);
}

} // namespace sida
