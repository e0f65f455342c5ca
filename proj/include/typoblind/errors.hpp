#pragma once

#include <stdexcept>
#include <string>

namespace typoblind {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: out-of-range index, missing field, malformed file, bad config.
/// The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not fit the operation.
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite loss during training. Exit code 3 at the CLI.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace typoblind
