#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "echkit/core.hpp"
#include "echkit/fourier.hpp"

namespace echkit {

// The pair (nu, mu) on the circle; nu real, mu complex, both 2pi-periodic.
// Stored as uniform samples on [0, 2pi) with trigonometric interpolation.
class PeriodicPair {
public:
    PeriodicPair(std::vector<double> nu, std::vector<cplx> mu);

    static PeriodicPair constant(double nu, cplx mu, std::size_t n = 256);
    static PeriodicPair from_functions(const std::function<double(double)>& nu,
                                       const std::function<cplx(double)>& mu, std::size_t n = 256);
    // (k/4, i eps e^{ikt})
    static PeriodicPair hyperbolic_canonical(int k, double eps, std::size_t n = 256);
    // (R/2, 0)
    static PeriodicPair elliptic_canonical(double R, std::size_t n = 256);

    double nu(double t) const { return nu_(t).real(); }
    cplx mu(double t) const { return mu_(t); }

    const std::vector<double>& nu_samples() const { return nu_s_; }
    const std::vector<cplx>& mu_samples() const { return mu_s_; }
    std::size_t size() const { return nu_s_.size(); }

    // Fourier coefficients with respect to e^{ijt}
    cplx nu_coeff(int j) const { return nu_.coeff(j); }
    cplx mu_coeff(int j) const { return mu_.coeff(j); }
    int band() const;
    bool is_constant() const { return nu_.is_constant() && mu_.is_constant(); }
    bool mu_vanishes(double tol = 1e-14) const;

    // (1-s) * this + s * other, resampled on the finer grid if sizes differ
    PeriodicPair lerp(const PeriodicPair& other, double s) const;
    PeriodicPair resampled(std::size_t n) const;
    // sup-norm distance on the samples of the finer grid
    double distance(const PeriodicPair& other) const;

private:
    std::vector<double> nu_s_;
    std::vector<cplx> mu_s_;
    TrigSeries nu_, mu_;
};

// A complex function of period 2 pi q stored as uniform samples on [0, 2 pi q).
struct PeriodicFunction {
    int q = 1;
    std::vector<cplx> values;

    static PeriodicFunction from_function(const std::function<cplx(double)>& f, int q, std::size_t n);
    double period() const { return kTwoPi * q; }
    double t(std::size_t j) const { return period() * static_cast<double>(j) / static_cast<double>(values.size()); }
};

// (i/2) zeta' + nu zeta + mu conj(zeta), evaluated at the samples of zeta.
PeriodicFunction apply_L(const PeriodicPair& pair, const PeriodicFunction& zeta, int q);

// Real part of the L^2 pairing over one period, normalised by the period.
double real_inner(const PeriodicFunction& a, const PeriodicFunction& b);

using Mat2 = Eigen::Matrix2d;

struct MonodromyResult {
    std::vector<double> t;
    std::vector<Mat2> U;
    double trace_final = 0.0;
    double angle_lift = 0.0;  // lift of the angle of U(t)(1,0) over [0, 2pi]
    const Mat2& final() const { return U.back(); }
};

// Traceless generator A(t) with U' = A U.
Mat2 generator(const PeriodicPair& pair, double t);

MonodromyResult monodromy(const PeriodicPair& pair, int steps = 4096);

// Continuous lift of the angle of U(t) v along the recorded samples.
double angle_lift(const MonodromyResult& m, const Eigen::Vector2d& v);

enum class OrbitKind { Elliptic, Hyperbolic, Degenerate };
std::string to_string(OrbitKind k);

struct Classification {
    OrbitKind kind = OrbitKind::Degenerate;
    double rotation_R = 0.0;  // elliptic: integer part from the (1,0) angle lift
    int rotation_k = 0;       // hyperbolic: half-turns of an eigenvector of U(2pi)
    bool positive_hyperbolic = false;
    double trace = 0.0;
    double lift = 0.0;
    std::string lift_convention;
};

struct ClassifyOptions {
    int steps = 4096;
    double degeneracy_tol = 1e-6;
};

Classification classify(const PeriodicPair& pair, const ClassifyOptions& opt = {});
Classification classify_monodromy(const MonodromyResult& m, const ClassifyOptions& opt = {});

struct NEllipticResult {
    bool ok = true;
    std::optional<int> witness;  // first k with kR an integer
};

NEllipticResult check_n_elliptic(const PeriodicPair& pair, int n, double tol = 1e-6);
NEllipticResult check_n_elliptic_R(double R, int n, double tol = 1e-6);

struct SpectrumResult {
    int q = 1;
    int n_modes = 0;
    std::vector<double> eigenvalues;                      // ascending
    std::vector<std::vector<cplx>> eigenvectors;          // coefficients of e^{imt/q}, m = -n..n
    std::vector<int> primitive_period;                    // divisor of q
    std::vector<std::string> warnings;

    double min_abs() const;
};

// Real symmetric matrix of L on 2 pi q-periodic functions in the basis
// e^{imt/q}, |m| <= n_modes; coordinates (Re c_m, Im c_m) for m = -n..n.
Eigen::MatrixXd L_matrix(const PeriodicPair& pair, int q, int n_modes);

SpectrumResult spectrum(const PeriodicPair& pair, int q, int n_modes = 64);

// Smallest divisor d of q such that the coefficient vector is 2 pi d periodic.
int primitive_period(const std::vector<cplx>& coeffs, int q, double rel_tol = 1e-8);

// One-parameter family of real symmetric matrices on [0,1].
struct OperatorFamily {
    std::function<Eigen::MatrixXd(double)> at;
    std::vector<double> grid;  // increasing, from 0 to 1

    static OperatorFamily uniform(std::function<Eigen::MatrixXd(double)> f, int samples = 41);
    // L of the pairs along the path, q-periodic, n_modes Fourier modes
    static OperatorFamily from_pairs(std::function<PeriodicPair(double)> path, int q, int n_modes,
                                     int samples = 41);
    OperatorFamily reversed() const;
    // first family on [0,1/2], second on [1/2,1]
    static OperatorFamily concatenate(const OperatorFamily& a, const OperatorFamily& b);
};

struct Crossing {
    double tau = 0.0;
    int sign = 0;          // sign of the crossing derivative
    int multiplicity = 1;  // number of eigenvalues crossing at this point
};

struct SpectralFlowOptions {
    double tol = 1e-9;          // crossing tolerance
    int refine_budget = 4000;   // total extra matrix evaluations
    double min_width = 1e-12;
};

struct SpectralFlowResult {
    int flow = 0;              // signed count of crossing points
    int eigenvalue_count = 0;  // signed count of eigenvalues (negative index drop)
    std::vector<Crossing> crossings;
};

SpectralFlowResult spectral_flow_detail(const OperatorFamily& family, const SpectralFlowOptions& opt = {});
int spectral_flow(const OperatorFamily& family, const SpectralFlowOptions& opt = {});

struct HomotopyEntry {
    std::size_t index = 0;
    Classification cls;
    bool ok = false;
};

struct HomotopyReport {
    bool pass = false;
    std::vector<HomotopyEntry> entries;
    std::optional<std::size_t> first_failure;
    std::string reason;
};

struct HomotopyOptions {
    double rotation_tol = 0.01;  // allowed spread of R mod 1 along an elliptic path
    ClassifyOptions classify;
};

HomotopyReport verify_homotopy(const std::vector<PeriodicPair>& path, const Classification& expect,
                               const HomotopyOptions& opt = {});

// Straight-line path with `steps` entries (both endpoints included).
std::vector<PeriodicPair> linear_path(const PeriodicPair& from, const PeriodicPair& to, int steps);
// Canonical target of the same type: (R/2, 0) when elliptic, (k/4, i eps e^{ikt})
// with eps chosen so that the traces agree when hyperbolic.
PeriodicPair canonical_target(const PeriodicPair& pair, const ClassifyOptions& opt = {});

// Closed form trace of the canonical hyperbolic monodromy.
double hyperbolic_canonical_trace(int k, double eps);

}  // namespace echkit
