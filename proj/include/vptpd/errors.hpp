#pragma once

#include <stdexcept>
#include <string>

namespace vptpd {

struct ShapeError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a density, mobility or energy term.
struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

inline void check_shape(bool ok, const std::string& what)
{
  if (!ok) { throw ShapeError(what); }
}

} // namespace vptpd
