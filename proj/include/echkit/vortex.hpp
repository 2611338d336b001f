#pragma once

#include <optional>
#include <string>
#include <vector>

#include "echkit/core.hpp"

namespace echkit {

struct VortexConfig {
    std::vector<cplx> zeros;  // with multiplicity

    int n() const { return static_cast<int>(zeros.size()); }
    cplx centroid() const;
    double max_abs() const;
};

// Square grid of N x N cell centres on [c - H, c + H]^2.
struct GridSpec {
    cplx center = 0.0;
    double half_width = 8.0;
    int N = 256;

    double h() const { return 2.0 * half_width / N; }
    double x(int i) const { return center.real() - half_width + (i + 0.5) * h(); }
    double y(int j) const { return center.imag() - half_width + (j + 0.5) * h(); }
    cplx z(int i, int j) const { return {x(i), y(j)}; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * N + i; }
    std::size_t size() const { return static_cast<std::size_t>(N) * N; }

    // centred on the centroid, half-width max(8, 3 + 2 max|z|), 256 points per side
    static GridSpec default_for(const VortexConfig& c, int N = 256);
};

struct ResidualReport {
    double curvature_sup = 0, curvature_l2 = 0;  // |*F_A + i(1 - |alpha|^2)|
    double dbar_sup = 0, dbar_l2 = 0;            // |dbar_A alpha|
    double alpha_max = 0;                        // max |alpha|
    double u_max = 0;                            // max u
    double boundary_u_max = 0;                   // max |u| on the outer ring
    double min_alpha_away = 0;                   // min |alpha| farther than 1 from every zero
    long points_checked = 0;
    bool ok(double tol = 1e-4) const { return curvature_sup <= tol && dbar_sup <= tol; }
};

struct SolveOptions {
    double newton_tol = 1e-10;  // sup norm of the discrete residual
    int max_newton = 40;
    double linear_tol = 1e-13;
    double residual_tol = 1e-4;  // direct check of the vortex equations
    bool enforce_residual = true;
};

struct VortexSolution {
    VortexConfig config;
    GridSpec grid;
    std::vector<double> u;       // log|alpha|^2 (clamped at -700 on a zero)
    std::vector<double> phi;     // smooth part: alpha = e^phi prod (z - z_j)
    std::vector<double> rho;     // 1 - |alpha|^2
    std::vector<cplx> alpha;
    std::vector<cplx> a_conn;    // A^{0,1} = a dzbar, with dbar alpha + a alpha = 0
    double flux = 0;
    ResidualReport residuals;
    int newton_iterations = 0;
};

VortexSolution solve_planar(const VortexConfig& config, const GridSpec& grid, const SolveOptions& opt = {});
VortexSolution solve_planar(const VortexConfig& config, const SolveOptions& opt = {});

// Direct residuals of the vortex equations, measured away from zeros and the boundary.
ResidualReport check_residuals(const VortexSolution& sol);

double flux(const VortexSolution& sol);

struct MomentReport {
    std::vector<cplx> moments;     // q = 1..q_max
    double effective_radius = 0;   // distance from the zero cluster to the grid edge
};

MomentReport moments(const VortexSolution& sol, int q_max);

struct DecayFit {
    double exponent = 0;            // minus the least-squares slope of log(1 - |alpha|^2)
    double corrected_exponent = 0;  // same fit for log(sqrt(r) (1 - |alpha|^2))
    long points = 0;
};

DecayFit decay_fit(const VortexSolution& sol, double r_lo, double r_hi);

double hamiltonian(const VortexSolution& sol, double nu, cplx mu);
// (1/2 pi) int |z|^2 (1 - |alpha|^2)
double second_moment(const VortexSolution& sol);

struct RadialProfile {
    int n = 0;
    std::vector<double> r;
    std::vector<double> f;       // |alpha| = f(r)
    std::vector<double> a;       // gauge profile: A = -i a(r) dtheta
    double second_moment = 0;    // int_0^rmax r^3 (1 - f^2) dr
    double flux = 0;             // int_0^rmax r (1 - f^2) dr
    double residual_sup = 0;     // |a'/r - (1 - f^2)| on [0, 0.9 r_max]
    int newton_iterations = 0;

    double f_at(double r) const;
};

RadialProfile solve_radial(int n, double r_max = 8.0, int points = 2048);

// Tangent directions either as motions of the individual zeros or as
// variations of the moment coordinates (power sums) sigma_1..sigma_n.
struct TangentDirection {
    enum class Kind { Zeros, Moments } kind = Kind::Zeros;
    std::vector<cplx> values;

    static TangentDirection of_zeros(std::vector<cplx> dz) { return {Kind::Zeros, std::move(dz)}; }
    static TangentDirection of_moments(std::vector<cplx> ds) { return {Kind::Moments, std::move(ds)}; }
};

struct TangentPair {
    std::vector<cplx> x;
    std::vector<cplx> iota;
    double l2_norm = 0;
    double metric_norm = 0;     // pi^{-1/2} l2_norm
    double residual_rel = 0;    // of the linearised equations, relative to the field size
    int iterations = 0;
};

TangentPair tangent_solve(const VortexSolution& sol, const TangentDirection& dir);
// L2 inner product of two tangent pairs (real part), divided by pi
double metric_inner(const VortexSolution& sol, const TangentPair& a, const TangentPair& b);

// Power sums sum z_j^q for q = 1..m.
std::vector<cplx> power_sums(const std::vector<cplx>& zeros, int m);
// Elementary symmetric polynomials e_0..e_m from power sums p_1..p_m.
std::vector<cplx> elementary_from_power_sums(const std::vector<cplx>& p);
// Zeros (sorted by real then imaginary part) with the given power sums.
std::vector<cplx> zeros_from_power_sums(const std::vector<cplx>& p);

}  // namespace echkit
