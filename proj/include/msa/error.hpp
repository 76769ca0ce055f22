#pragma once

#include <stdexcept>
#include <string>

namespace msa {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// A point could not be located in any cell of a mesh.
class OutOfDomain : public Error
{
public:
  OutOfDomain(const std::string& what, double x, double y, double z)
    : Error(what), point_{x, y, z}
  {}

  const double* point() const { return point_; }

private:
  double point_[3];
};

class EmptyManifold : public Error
{
public:
  using Error::Error;
};

class UnsupportedElement : public Error
{
public:
  using Error::Error;
};

class UnsupportedReduction : public Error
{
public:
  using Error::Error;
};

/// Raised for ill-formed symbolic expressions and substitutions.
class FormError : public Error
{
public:
  using Error::Error;
};

class NotCollapsible : public Error
{
public:
  using Error::Error;
};

class SolverError : public Error
{
public:
  using Error::Error;
};

} // namespace msa
