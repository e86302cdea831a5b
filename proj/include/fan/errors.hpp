#ifndef FAN_ERRORS_HPP
#define FAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fan {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape/geometry mismatch in a tensor operation.
struct DimensionError : Error {
    using Error::Error;
};

/// Malformed input file (bad magic, truncated payload, count mismatch).
struct FormatError : Error {
    using Error::Error;
};

/// Invalid argument at an API boundary (n > N, missing labels, ...).
struct ArgumentError : Error {
    using Error::Error;
};

/// Invalid or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Non-finite values or other numeric breakdown detected at runtime.
struct NumericError : Error {
    using Error::Error;
};

} // namespace fan

#endif
