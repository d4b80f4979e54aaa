#pragma once

#include <stdexcept>
#include <string>

namespace synlink {

/// Malformed or missing input data. The CLI maps this to exit code 2.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss, divergence, or an inconsistent numeric state (exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace synlink
