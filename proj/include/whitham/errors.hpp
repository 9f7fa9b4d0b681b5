#pragma once

#include <stdexcept>
#include <string>

namespace whitham {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed config, precondition violated, unknown symbol name.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// A pass/fail verification did not pass.
class CheckFailure : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

}  // namespace detail
}  // namespace whitham
