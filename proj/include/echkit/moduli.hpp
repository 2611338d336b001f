#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echkit/core.hpp"
#include "echkit/reeb_linops.hpp"
#include "echkit/vortex.hpp"

namespace echkit {

// A point of the m-vortex moduli space, held both as a zero multiset and as
// the power-sum coordinates sigma_q = sum z_j^q, q = 1..m.
struct ModuliPoint {
    int m = 0;
    std::vector<cplx> zeros;
    std::vector<cplx> moments;

    static ModuliPoint from_zeros(std::vector<cplx> zeros);
    static ModuliPoint from_moments(std::vector<cplx> moments);
    static ModuliPoint origin(int m);
    bool consistent(double tol = 1e-12) const;
};

struct FlowState {
    double t = 0;
    ModuliPoint point;
    double energy = 0;
};

// Hamiltonian dynamics on the moduli space in moment coordinates. The
// gradient is the metric dual of d h; the flow is sigma' = i * gradient.
class ModuliModel {
public:
    virtual ~ModuliModel() = default;
    virtual int m() const = 0;
    virtual double energy(const std::vector<cplx>& sigma, double nu, cplx mu) const = 0;
    virtual std::vector<cplx> gradient(const std::vector<cplx>& sigma, double nu, cplx mu) const = 0;
    std::vector<cplx> velocity(const std::vector<cplx>& sigma, double nu, cplx mu) const;
    virtual std::string name() const = 0;
};

struct DirectOptions {
    int grid_points = 256;  // per side, on the default half-width
    double step = 1e-2;     // central difference step in moment coordinates
    double max_condition = 1e8;
    SolveOptions solve;
};

// Gradient from vortex solves: central differences of h over the moment
// coordinates, raised with the Gram matrix of tangent_solve at the point.
class DirectModel : public ModuliModel {
public:
    DirectModel(int m, DirectOptions opt = {});
    int m() const override { return m_; }
    double energy(const std::vector<cplx>& sigma, double nu, cplx mu) const override;
    std::vector<cplx> gradient(const std::vector<cplx>& sigma, double nu, cplx mu) const override;
    std::string name() const override { return "direct"; }

    // real 2m x 2m Gram matrix in the basis d/dRe sigma_q, d/dIm sigma_q
    Eigen::MatrixXd gram(const std::vector<cplx>& sigma) const;
    // (h with nu = 1, mu = 0; h with nu = 0, mu = 1; h with nu = 0, mu = i), cached
    std::array<double, 3> energy_parts(const std::vector<cplx>& sigma) const;
    long solves() const { return solves_; }

private:
    VortexSolution solve(const std::vector<cplx>& sigma) const;

    int m_;
    DirectOptions opt_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<long long>, std::array<double, 3>> cache_;
    mutable long solves_ = 0;
};

struct ReducedSplines;

struct ReducedOptions {
    int grid_points = 256;
    double r_max = 6.0;   // table range in |s|, s = sigma_2 - sigma_1^2 / 2
    int table_points = 25;
    SolveOptions solve;
};

// Model built from tabulated vortex data. For m = 1 the energy is
// h(0) + nu |w|^2 + Re(conj(mu) w^2) with the constant metric g1. For m = 2
// the centre of mass c = sigma_1 / 2 decouples from s; the relative part uses
// A(|s|) = h(nu = 1), B(|s|) = h(mu = 1) at s > 0, and the metric g_rel(|s|).
class ReducedModel : public ModuliModel {
public:
    static ReducedModel build(int m, const ReducedOptions& opt = {});
    static ReducedModel from_tables(int m, double g1, double h0, std::vector<double> r, std::vector<double> A,
                                    std::vector<double> B, std::vector<double> g_rel);

    int m() const override { return m_; }
    double energy(const std::vector<cplx>& sigma, double nu, cplx mu) const override;
    std::vector<cplx> gradient(const std::vector<cplx>& sigma, double nu, cplx mu) const override;
    std::string name() const override { return "reduced"; }

    double g1() const { return g1_; }
    double h0() const { return h0_; }
    const std::vector<double>& r() const { return r_; }
    const std::vector<double>& A() const { return A_; }
    const std::vector<double>& B() const { return B_; }
    const std::vector<double>& g_rel() const { return g_rel_; }
    const std::vector<double>& g_cm() const { return g_cm_; }

    // interpolated relative data and derivatives at |s| = r
    struct Rel {
        double A, dA, f, df, g;  // f = B / r
    };
    Rel rel(double r) const;

private:
    void init_splines();

    int m_ = 1;
    double g1_ = 1.0;
    double h0_ = 0.0;  // h(nu = 1) of the centred vortex for m = 1
    std::vector<double> r_, A_, B_, g_rel_, g_cm_;
    std::shared_ptr<const ReducedSplines> splines_;
};

struct FlowOptions {
    int steps = 256;  // output samples over one period, at least 64
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double cap = 10.0;  // |sigma_q| beyond this counts as escape
    double t_end = kTwoPi;
};

struct FlowResult {
    std::vector<FlowState> trajectory;
    bool escaped = false;
    double escape_time = 0;
};

FlowResult flow(const PeriodicPair& pair, const ModuliModel& model, const ModuliPoint& start, const FlowOptions& opt = {});

// time-2pi map; returns false on escape
bool return_map(const PeriodicPair& pair, const ModuliModel& model, const std::vector<cplx>& sigma,
                std::vector<cplx>& out, const FlowOptions& opt = {});

// Metric gradient of h at a point from vortex solves; see DirectModel.
std::vector<cplx> grad_h(const ModuliPoint& point, double nu, cplx mu, double step = 1e-2, int grid_points = 256);

struct SearchRegion {
    std::vector<cplx> center;        // per moment coordinate
    std::vector<double> half_width;  // box half-width per real axis of each coordinate
};

struct SearchOptions {
    int grid = 9;                 // samples per real axis
    double refine_threshold = 1e-2;
    double candidate_threshold = 1e-3;
    double fixed_tol = 1e-9;      // displacement treated as zero for the degeneracy test
    int refine_iterations = 12;
    double jacobian_step = 1e-4;
    long budget = 1000000;        // return-map evaluations
    FlowOptions flow;
};

struct SearchSample {
    std::vector<cplx> sigma;
    double displacement = 0;
    bool escaped = false;
};

struct Candidate {
    std::vector<cplx> sigma;
    std::vector<cplx> zeros;
    double displacement = 0;
    std::vector<cplx> seed;
};

struct SearchReport {
    std::vector<SearchSample> samples;
    std::vector<Candidate> candidates;
    double min_displacement = 0;
    std::vector<cplx> argmin;
    int refined = 0;
    bool degenerate = false;  // every sample fixed
    bool complete = true;     // false when the budget ran out
    long evaluations = 0;
};

SearchReport closed_orbit_search(const PeriodicPair& pair, const ModuliModel& model, const SearchRegion& region,
                                 const SearchOptions& opt = {});

struct FloquetReport {
    Eigen::MatrixXd jacobian;  // real 2m x 2m linearization of the return map
    std::vector<cplx> multipliers;
    double product = 0;         // determinant
    double max_fixed_speed = 0; // sup over t of |velocity| at the symmetric point
    double rotation = 0;        // arg of the upper half plane multiplier / 2pi when complex
    std::string type;           // "elliptic", "hyperbolic" or "degenerate"
};

FloquetReport linearized_monodromy(const PeriodicPair& pair, const ModuliModel& model, double step = 1e-4,
                                   double fixed_tol = 1e-6, const FlowOptions& opt = {});

}  // namespace echkit
