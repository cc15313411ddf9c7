#pragma once

#include <stdexcept>
#include <string>

namespace hgc {

// Exception hierarchy. The CLI maps each kind to an exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text: missing columns, bad rows.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Well-formed input whose content is inconsistent (missing labels, conflicting annotations).
class DataError : public Error {
public:
    using Error::Error;
};

/// Caller passed a value outside an operation's domain.
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (fold counts, screening sizes, weight tables).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Solver did not reach its convergence certificate.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace hgc
