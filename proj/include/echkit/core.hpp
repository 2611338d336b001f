#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace echkit {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Base of all library exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// An iteration failed to converge or a numerical guard tripped.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

}  // namespace echkit
