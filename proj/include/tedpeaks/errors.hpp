#ifndef TEDPEAKS_ERRORS_HPP
#define TEDPEAKS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tedpeaks {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter bundle (bad window, non-positive threshold, ...).
/// The CLI maps this family to exit code 3.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failed read or write on an external sink/source.
class IoFailure : public Error {
public:
    using Error::Error;
};

} // namespace tedpeaks

#endif
