#pragma once

#include <stdexcept>
#include <string>

namespace cfho {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad parameter values, infeasible sizes).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a result (e.g. factorization failure).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File system failures; the message carries the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cfho
