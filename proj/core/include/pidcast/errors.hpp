#pragma once

#include <stdexcept>
#include <string>

namespace pidcast {

/// Coarse failure categories, stable across releases; the CLI maps them to
/// exit codes and prints them in machine-readable form.
enum class ErrorCategory {
    io,          // file missing, unreadable, unwritable
    parse,       // malformed input (CSV row, model file, state file)
    validation,  // violated precondition or domain invariant
    numeric,     // divergence, non-finite results
    state,       // operation called in the wrong lifecycle order
    usage,       // bad CLI arguments
};

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

} // namespace pidcast
