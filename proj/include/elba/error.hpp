#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace elba {

// All recoverable failures carry a stable machine-checkable code
// (e.g. "SpecInfeasible", "DimensionMismatch") plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void raise(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

}  // namespace elba
