#include "echkit/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/FFT>

namespace echkit {

std::vector<cplx> fft_forward(const std::vector<cplx>& x) {
    Eigen::FFT<double> fft;
    std::vector<cplx> out;
    fft.fwd(out, x);
    return out;
}

std::vector<cplx> fft_inverse(const std::vector<cplx>& x) {
    Eigen::FFT<double> fft;
    std::vector<cplx> out;
    fft.inv(out, x);
    return out;
}

std::vector<cplx> spectral_derivative(const std::vector<cplx>& samples, double period) {
    const std::size_t n = samples.size();
    if (n < 4) throw InvalidInput("spectral_derivative: need at least 4 samples");
    auto c = fft_forward(samples);
    const double w = kTwoPi / period;
    for (std::size_t j = 0; j < n; ++j) {
        long m = static_cast<long>(j);
        if (m > static_cast<long>(n / 2)) m -= static_cast<long>(n);
        if (n % 2 == 0 && m == static_cast<long>(n / 2)) m = 0;  // Nyquist has no odd derivative
        c[j] *= cplx(0.0, w * static_cast<double>(m));
    }
    return fft_inverse(c);
}

TrigSeries::TrigSeries(const std::vector<cplx>& samples, double period)
    : n_(samples.size()), period_(period) {
    if (n_ == 0) throw InvalidInput("TrigSeries: empty sample set");
    if (!(period > 0)) throw InvalidInput("TrigSeries: period must be positive");
    K_ = static_cast<int>(n_ / 2);
    c_.assign(2 * K_ + 1, cplx(0.0));
    auto f = fft_forward(samples);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        int m = static_cast<int>(j);
        if (m > K_) m -= static_cast<int>(n_);
        cplx v = f[j] * inv;
        if (n_ % 2 == 0 && m == K_) {
            c_[K_ + K_] += 0.5 * v;
            c_[0] += 0.5 * v;
        } else {
            c_[m + K_] += v;
        }
    }
    constant_ = is_constant();
}

cplx TrigSeries::coeff(int j) const {
    if (j < -K_ || j > K_) return 0.0;
    return c_[j + K_];
}

int TrigSeries::band(double rel_threshold) const {
    double mx = 0.0;
    for (const auto& v : c_) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) return 0;
    int b = 0;
    for (int j = -K_; j <= K_; ++j)
        if (std::abs(c_[j + K_]) > rel_threshold * mx) b = std::max(b, std::abs(j));
    return b;
}

bool TrigSeries::is_constant(double tol) const {
    double scale = std::abs(coeff(0));
    for (int j = -K_; j <= K_; ++j)
        if (j != 0 && std::abs(c_[j + K_]) > tol * std::max(1.0, scale)) return false;
    return true;
}

cplx TrigSeries::operator()(double t) const {
    if (c_.empty()) return 0.0;
    if (constant_) return c_[K_];
    const double th = kTwoPi * t / period_;
    const cplx e(std::cos(th), std::sin(th));
    cplx sum = c_[K_];
    cplx ep = e;
    for (int j = 1; j <= K_; ++j) {
        sum += c_[K_ + j] * ep + c_[K_ - j] * std::conj(ep);
        ep *= e;
        if (j % 32 == 0) {  // resync the recurrence
            const double a = th * (j + 1);
            ep = cplx(std::cos(a), std::sin(a));
        }
    }
    return sum;
}

cplx TrigSeries::derivative(double t) const {
    if (c_.empty() || constant_) return 0.0;
    const double w = kTwoPi / period_;
    const double th = w * t;
    cplx sum = 0.0;
    for (int j = 1; j <= K_; ++j) {
        const cplx ep(std::cos(th * j), std::sin(th * j));
        sum += cplx(0.0, w * j) * (c_[K_ + j] * ep - c_[K_ - j] * std::conj(ep));
    }
    return sum;
}

}  // namespace echkit
