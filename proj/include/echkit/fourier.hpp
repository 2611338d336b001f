#pragma once

#include <cstddef>
#include <vector>

#include "echkit/core.hpp"

namespace echkit {

std::vector<cplx> fft_forward(const std::vector<cplx>& x);
std::vector<cplx> fft_inverse(const std::vector<cplx>& x);  // scaled by 1/N

// Spectral derivative of uniform samples of a function with the given period.
std::vector<cplx> spectral_derivative(const std::vector<cplx>& samples, double period);

// Trigonometric interpolant of uniform samples on [0, period).
// Coefficients are stored for frequencies -K..K where K = N/2; a Nyquist
// mode of an even-length sample set is split evenly between +K and -K.
class TrigSeries {
public:
    TrigSeries() = default;
    TrigSeries(const std::vector<cplx>& samples, double period);

    cplx operator()(double t) const;
    cplx derivative(double t) const;

    // coefficient of exp(i j 2 pi t / period)
    cplx coeff(int j) const;
    // largest |j| with a coefficient above threshold (relative to the largest)
    int band(double rel_threshold = 1e-13) const;
    bool is_constant(double tol = 1e-15) const;
    std::size_t size() const { return n_; }
    double period() const { return period_; }

private:
    std::vector<cplx> c_;  // index j + K
    int K_ = 0;
    std::size_t n_ = 0;
    double period_ = kTwoPi;
    bool constant_ = true;
};

}  // namespace echkit
