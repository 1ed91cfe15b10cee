#pragma once

#include <stdexcept>
#include <string>

namespace svl
{
// Invalid parameters, inconsistent configuration, or a precondition on
// resolution/cutoffs that the caller violated.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure (quadrature, determinant) failed to produce a
// trustworthy value.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Not enough samples to make the requested statistical statement.
class StatisticalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw ConfigError(what);
}
}  // namespace svl
