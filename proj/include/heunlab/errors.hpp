#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace heunlab
{

// Every failure raised by the library derives from Error so callers can
// catch the whole family at once. The subclasses mirror the failure modes
// the numerical routines can actually hit.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public Error
{
public:
    using Error::Error;
};

// Requested accuracy is not attainable at the working precision.
class PrecisionError : public Error
{
public:
    using Error::Error;
};

// Iteration failed to converge or produced a non-finite value.
class NumericError : public Error
{
public:
    using Error::Error;
};

class PoleProximityError : public Error
{
public:
    PoleProximityError(const std::string &what, std::complex<double> nearest)
        : Error(what), nearest_lattice_point(nearest)
    {
    }
    std::complex<double> nearest_lattice_point;
};

// The parameters hit a degenerate branch that has no constructive formula
// (alpha on the lattice, kappa = 0, Q = 0, singular normalisation, ...).
class DegeneracyError : public Error
{
public:
    using Error::Error;
};

class PathError : public Error
{
public:
    using Error::Error;
};

class ClearanceError : public Error
{
public:
    using Error::Error;
};

class IntegrationError : public Error
{
public:
    IntegrationError(const std::string &what, std::complex<double> where)
        : Error(what), location(where)
    {
    }
    std::complex<double> location;
};

// Branch continuation of delta_1 jumped between adjacent grid points.
class ContinuityError : public Error
{
public:
    using Error::Error;
};

class ParameterSingularityError : public Error
{
public:
    ParameterSingularityError(const std::string &what, std::complex<double> at_tau)
        : Error(what), tau(at_tau)
    {
    }
    std::complex<double> tau;
};

class UsageError : public Error
{
public:
    using Error::Error;
};

} // namespace heunlab
