#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "echkit/core.hpp"
#include "echkit/reeb_linops.hpp"

namespace echkit {

// Smooth nonincreasing cutoff: 1 on [0, 5/16], 0 on [7/16, inf), built from
// the ratio psi(1 - y) / (psi(1 - y) + psi(y)), psi(y) = exp(-1/y).
double bump(double x);
double bump_derivative(double x);

// tau = k/Q + chi(|z| / rho) / Q
double tau_rho(cplx z, int k, int Q, double rho);

struct TauBounds {
    double sup_d = 0;        // sup |d tau| by central differences
    double sup_hessian = 0;  // sup of the operator norm of the Hessian
    double c_d = 0;          // sup_d * Q * rho
    double c_hessian = 0;    // sup_hessian * Q * rho^2
};

TauBounds tau_rho_bounds(int Q, double rho, int grid = 401);

// tau -> (nu_tau, mu_tau)
struct PairFamily {
    std::function<double(double tau, double t)> nu;
    std::function<cplx(double tau, double t)> mu;

    static PairFamily constant(double nu, cplx mu);
    static PairFamily constant(const PeriodicPair& p);
    // (1 - tau) p0 + tau p1
    static PairFamily interpolate(const PeriodicPair& p0, const PeriodicPair& p1);
    PeriodicPair at(double tau, std::size_t n = 256) const;
};

// Components (along dt, dx, dy) of the higher order terms; multiplied by
// (1 - chi(|z| / rho)) and by ell / 2pi when added to the form.
using TailFn = std::function<std::array<double, 3>(double t, double x, double y)>;

struct FormOptions {
    double disk_radius = 0;  // 0: 1.25 rho
    int Nxy = 961;           // points per side of the square around the disk
    int Nt = 8;
    TailFn tail;
};

// Samples of the interpolated form a and of da on S^1 x {|z| <= D}, over a
// square grid in z = x + i y. da = Fxy dx^dy + Ftx dt^dx + Fty dt^dy.
struct FormField {
    double ell = kTwoPi;
    int k = 0, Q = 1;
    double rho = 0.05;
    double D = 0;
    int Nxy = 0, Nt = 0;
    std::vector<double> at, ax, ay;
    std::vector<double> Fxy, Ftx, Fty;
    std::vector<double> model_vt, model_vx, model_vy;  // leading Reeb field with tau = tau_rho(z)
    std::vector<double> tau;

    double h() const { return 2.0 * D / (Nxy - 1); }
    double x(int i) const { return -D + i * h(); }
    double t(int j) const { return kTwoPi * j / Nt; }
    std::size_t index(int j, int ix, int iy) const {
        return (static_cast<std::size_t>(j) * Nxy + iy) * Nxy + ix;
    }
    bool inside(int ix, int iy) const { return std::hypot(x(ix), x(iy)) <= D * (1 + 1e-12); }
    // a ^ da against dt ^ dx ^ dy
    double volume_coefficient(std::size_t p) const { return at[p] * Fxy[p] - ax[p] * Fty[p] + ay[p] * Ftx[p]; }
};

FormField build_form(const PairFamily& family, int k, int Q, double rho, double ell, const FormOptions& opt = {});

// sup |numerical d(a) - stored da| over disk points whose stencil fits;
// eighth order differences in x, y and spectral differences in t
double exterior_derivative_error(const FormField& f);

struct ContactReport {
    double min_coefficient = 0;
    double max_coefficient = 0;
    std::array<double, 3> argmin{};  // (t, x, y)
    bool contact = false;
};

ContactReport contact_check(const FormField& f);

struct ReebReport {
    double sup_diff = 0;           // sup |v - v_model| over rho/8 <= |z| <= rho
    double sup_diff_over_z = 0;    // sup |v - v_model| / |z| over the same annulus
    double sup_ratio = 0;          // sup |v - v_model| / (|z| / Q)
    double diff_at_origin = 0;     // at the grid point z = 0 when present
    long points = 0;
};

ReebReport reeb_check(const FormField& f);

struct EigenGapReport {
    double lambda0 = 0;
    double tau = 0;
    int q = 0;
    bool degenerate = false;  // some sampled gap below 1e-9; (tau, q) is the witness
};

EigenGapReport eigen_gap(const PairFamily& family, int tau_grid, int q_max, int n_modes = 64);

// Real symmetric matrix of L on samples of 2 pi q periodic functions, t_j = 2 pi q j / Nt,
// unknowns ordered (Re eta_0, Im eta_0, Re eta_1, ...).
Eigen::MatrixXd L_samples(const PeriodicPair& pair, int q, int Nt);

struct ForcedZeroReport {
    bool arithmetic = false;       // 1/Q <= lambda0 / (100 c0)
    double inverse_norm = 0;       // ||L^{-1}|| on the discretization
    double lipschitz_bound = 0;    // ||L^{-1}|| (c0/Q + 2 c0 r)
    double lipschitz_measured = 0; // sampled difference quotients of z -> L^{-1} tau(z)
    bool contraction = false;      // lipschitz_bound < 1
    double iterate_norm = 0;       // sup norm after iterating z -> -L^{-1} tau(z) from a point in the ball
    bool verdict() const { return arithmetic && contraction; }
};

ForcedZeroReport forced_zero_check(double lambda0, double c0, int Q, double ball_radius, const PeriodicPair& pair,
                                   int q, int Nt = 64, unsigned seed = 1);

// Samples on s_i = s0 + i hs (i < Ns), t_j = 2 pi q j / Nt; values[i * Nt + j].
struct CylinderField {
    double s0 = 0, hs = 0.1;
    int Ns = 0, Nt = 0, q = 1;
    std::vector<cplx> values;

    static CylinderField on(double S, int Ns, int Nt, int q);  // s from -S to S inclusive
    double s(int i) const { return s0 + i * hs; }
    double t(int j) const { return kTwoPi * q * j / Nt; }
    double ht() const { return kTwoPi * q / Nt; }
    cplx& at(int i, int j) { return values[static_cast<std::size_t>(i) * Nt + j]; }
    cplx at(int i, int j) const { return values[static_cast<std::size_t>(i) * Nt + j]; }
};

// sqrt(L2^2 + 2^{1/100} max over centres and dyadic radii x <= 1 of x^{-1/100} int_{ball} |zeta|^2)
double star_norm(const CylinderField& f);

// Discretization of d/ds + L (+ optional zeroth order multiplier p(s, t)) on
// 2 pi q periodic functions over interior points of [-S, S], zero at |s| = S.
class CylinderOperator {
public:
    using Multiplier = std::function<cplx(double s, double t)>;

    CylinderOperator(const PeriodicPair& pair, int q, double S, int Ns, int Nt, Multiplier p = {});

    int Ns() const { return Ns_; }
    int Nt() const { return Nt_; }
    double S() const { return S_; }
    double hs() const { return hs_; }
    const Eigen::SparseMatrix<double>& matrix() const { return D_; }
    CylinderField blank() const;

    Eigen::VectorXd to_vector(const CylinderField& f) const;
    CylinderField from_vector(const Eigen::VectorXd& v) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return D_ * v; }
    Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

    // smallest singular value (Lanczos on (D^T D)^{-1}) and its right singular vector
    double smallest_singular_value(Eigen::VectorXd* vec = nullptr, int steps = 60) const;

private:
    int q_, Ns_, Nt_;
    double S_, hs_;
    Eigen::SparseMatrix<double> D_;
    struct Factor;
    std::shared_ptr<Factor> lu_;
};

struct CylinderBound {
    double sigma_min = 0;
    double sigma_star = 0;      // 1 / sigma_min
    double fourier_gap = 0;     // min |lambda| of L on 2 pi q periodic functions
    double fourier_sigma_star = 0;
    double relative_error = 0;  // |sigma_star - 1/gap| / (1/gap)
    double S = 0;
    int Ns = 0, Nt = 0;
};

// Truncation S = max(S_min, 6 / gap), s step hs, Nt samples in t.
CylinderBound cylinder_inverse_norm(const PeriodicPair& pair, int q, double S_min = 0, double hs = 0.25, int Nt = 32);

struct Support {
    enum class Kind { Everywhere, FarOut, Localized } kind = Kind::Everywhere;
    double R = 1;  // FarOut: |s| > 2R; Localized: |s| < R
};

struct PerturbationReport {
    double sigma_unperturbed = 0;
    double sigma_perturbed = 0;
    double sup_p = 0;
    double margin = 0;  // sup|p| sigma_star + 1/R
    bool pass = false;  // sigma_perturbed >= (1 - margin) sigma_unperturbed
    // splitting with the ramp u_R (0 for |s| <= R, |s|/R - 1 on [R, 2R], 1 beyond),
    // at the minimizing singular vector
    double lhs = 0;         // ||(D + p) eta||^2
    double rhs_outer = 0;   // ||u_R^2 (D + p) eta||^2
    double rhs_inner = 0;   // ||(1 - u_R)^2 D eta||^2
    bool splitting_holds = false;
};

PerturbationReport perturbed_invertibility(const PeriodicPair& pair, int q, const CylinderOperator::Multiplier& p,
                                           const Support& support, double S_min = 0, double hs = 0.25, int Nt = 32);

double ramp(double s, double R);

struct ContractionBounds {
    double c_C1 = 1, c_C2 = 1;
    double rho = 0;
    double sigma = 0;  // ball radius sigma'
    // sigma < 1/(4 (c_C1 + c_C2)) and rho < 1/(8 c_C1^2)
    bool admissible() const;
};

struct ContractionReport {
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    double fixed_point_norm = 0;
    double last_step = 0;
    double c1_estimate = 0;  // max ||T(eta)|| / (||eta||^2 + rho) over iterates
    double c2_estimate = 0;  // max ||T(eta) - T(eta')|| / ((||eta|| + ||eta'||) ||eta - eta'||)
    bool bounds_hold = false;
    bool stayed_in_ball = true;
    Eigen::VectorXd fixed_point;
    std::string message;
};

ContractionReport contraction_solve(const ContractionBounds& bounds,
                                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& T,
                                    const std::function<double(const Eigen::VectorXd&)>& norm,
                                    const Eigen::VectorXd& start, int budget = 200, double tol = 1e-10);

}  // namespace echkit
