#pragma once

#include <stdexcept>
#include <string>

namespace ovalflow {

// Base of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed parameters, schema violations, missing files.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

// A curve failed the strict-convexity or interior-origin test.
class ConvexityError : public Error
{
  public:
    using Error::Error;
};

// A solver failed to converge, or a quantity left its admissible range.
class NumericalError : public Error
{
  public:
    using Error::Error;
};

// A phase point too close to the grazing set.
class GrazingError : public NumericalError
{
  public:
    using NumericalError::NumericalError;
};

// Flow failure tagged with the normalized time at which it happened.
class FlowError : public NumericalError
{
  public:
    FlowError(std::string const& what, double t)
        : NumericalError(what + " (t = " + std::to_string(t) + ")"), t_(t)
    {
    }
    double time() const noexcept { return t_; }

  private:
    double t_;
};

}  // namespace ovalflow
