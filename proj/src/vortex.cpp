#include "echkit/vortex.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace echkit {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// fourth-order central stencils
inline double d1(double fm2, double fm1, double fp1, double fp2, double h) {
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
}

template <class T>
T dx(const std::vector<T>& f, const GridSpec& g, int i, int j) {
    const double h = g.h();
    const int N = g.N;
    if (i >= 2 && i <= N - 3)
        return (f[g.index(i - 2, j)] - 8.0 * f[g.index(i - 1, j)] + 8.0 * f[g.index(i + 1, j)] - f[g.index(i + 2, j)]) /
               (12.0 * h);
    if (i == 0) return (-3.0 * f[g.index(0, j)] + 4.0 * f[g.index(1, j)] - f[g.index(2, j)]) / (2.0 * h);
    if (i == N - 1) return (3.0 * f[g.index(N - 1, j)] - 4.0 * f[g.index(N - 2, j)] + f[g.index(N - 3, j)]) / (2.0 * h);
    return (f[g.index(i + 1, j)] - f[g.index(i - 1, j)]) / (2.0 * h);
}

template <class T>
T dy(const std::vector<T>& f, const GridSpec& g, int i, int j) {
    const double h = g.h();
    const int N = g.N;
    if (j >= 2 && j <= N - 3)
        return (f[g.index(i, j - 2)] - 8.0 * f[g.index(i, j - 1)] + 8.0 * f[g.index(i, j + 1)] - f[g.index(i, j + 2)]) /
               (12.0 * h);
    if (j == 0) return (-3.0 * f[g.index(i, 0)] + 4.0 * f[g.index(i, 1)] - f[g.index(i, 2)]) / (2.0 * h);
    if (j == N - 1) return (3.0 * f[g.index(i, N - 1)] - 4.0 * f[g.index(i, N - 2)] + f[g.index(i, N - 3)]) / (2.0 * h);
    return (f[g.index(i, j + 1)] - f[g.index(i, j - 1)]) / (2.0 * h);
}

// dbar f = (f_x + i f_y)/2, d f = (f_x - i f_y)/2
template <class T>
cplx dbar(const std::vector<T>& f, const GridSpec& g, int i, int j) {
    return 0.5 * (cplx(dx(f, g, i, j)) + cplx(0.0, 1.0) * cplx(dy(f, g, i, j)));
}
template <class T>
cplx dz(const std::vector<T>& f, const GridSpec& g, int i, int j) {
    return 0.5 * (cplx(dx(f, g, i, j)) - cplx(0.0, 1.0) * cplx(dy(f, g, i, j)));
}

template <class T>
T laplacian4(const std::vector<T>& f, const GridSpec& g, int i, int j) {
    const double c = 1.0 / (12.0 * g.h() * g.h());
    const T f0 = f[g.index(i, j)];
    return c * (-f[g.index(i - 2, j)] + 16.0 * f[g.index(i - 1, j)] - 30.0 * f0 + 16.0 * f[g.index(i + 1, j)] -
                f[g.index(i + 2, j)] - f[g.index(i, j - 2)] + 16.0 * f[g.index(i, j - 1)] - 30.0 * f0 +
                16.0 * f[g.index(i, j + 1)] - f[g.index(i, j + 2)]);
}

bool on_boundary_layer(const GridSpec& g, int i, int j) { return i < 2 || j < 2 || i >= g.N - 2 || j >= g.N - 2; }

// Interior unknowns are the cells with 2 <= i, j <= N-3.
struct InteriorMap {
    int N = 0, M = 0;
    explicit InteriorMap(int n) : N(n), M(n - 4) {}
    int operator()(int i, int j) const { return (j - 2) * M + (i - 2); }
    int size() const { return M * M; }
};

// -Delta_4 restricted to the interior (Dirichlet data on two boundary layers).
SpMat neg_laplacian(const GridSpec& g) {
    const InteriorMap im(g.N);
    const double c = 1.0 / (12.0 * g.h() * g.h());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(im.size()) * 9);
    for (int j = 2; j <= g.N - 3; ++j)
        for (int i = 2; i <= g.N - 3; ++i) {
            const int r = im(i, j);
            t.emplace_back(r, r, 60.0 * c);
            const int off[4] = {-2, -1, 1, 2};
            const double w[4] = {1.0, -16.0, -16.0, 1.0};
            for (int k = 0; k < 4; ++k) {
                const int ii = i + off[k], jj = j + off[k];
                if (ii >= 2 && ii <= g.N - 3) t.emplace_back(r, im(ii, j), w[k] * c);
                if (jj >= 2 && jj <= g.N - 3) t.emplace_back(r, im(i, jj), w[k] * c);
            }
        }
    SpMat A(im.size(), im.size());
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

class SpdSolver {
public:
    SpdSolver(const SpMat& A, double tol) {
        cg_.setTolerance(tol);
        cg_.setMaxIterations(4000);
        cg_.compute(A);
        if (cg_.info() != Eigen::Success) throw NumericalFailure("vortex: preconditioner setup failed");
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) {
        Eigen::VectorXd x = cg_.solve(b);
        if (cg_.info() != Eigen::Success && cg_.error() > 1e-8)
            throw NumericalFailure("vortex: linear solver did not converge");
        iterations_ += static_cast<int>(cg_.iterations());
        return x;
    }
    int iterations() const { return iterations_; }

private:
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg_;
    int iterations_ = 0;
};

cplx poly_H(const std::vector<cplx>& zeros, cplx z) {
    cplx h = 1.0;
    for (const auto& zj : zeros) h *= (z - zj);
    return h;
}

}  // namespace

cplx VortexConfig::centroid() const {
    if (zeros.empty()) return 0.0;
    cplx s = 0.0;
    for (const auto& z : zeros) s += z;
    return s / static_cast<double>(zeros.size());
}

double VortexConfig::max_abs() const {
    double m = 0.0;
    for (const auto& z : zeros) m = std::max(m, std::abs(z));
    return m;
}

GridSpec GridSpec::default_for(const VortexConfig& c, int N) {
    GridSpec g;
    g.center = c.centroid();
    g.half_width = std::max(8.0, 3.0 + 2.0 * c.max_abs());
    g.N = N;
    return g;
}

VortexSolution solve_planar(const VortexConfig& config, const SolveOptions& opt) {
    return solve_planar(config, GridSpec::default_for(config), opt);
}

VortexSolution solve_planar(const VortexConfig& config, const GridSpec& grid, const SolveOptions& opt) {
    for (const auto& z : config.zeros)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InvalidInput("solve_planar: non-finite zero");
    if (grid.N < 16) throw InvalidInput("solve_planar: grid needs at least 16 points per side");
    if (!(grid.half_width > 0)) throw InvalidInput("solve_planar: half-width must be positive");
    if (grid.N / (2.0 * grid.half_width) < 8.0 - 1e-12)
        throw InvalidInput("solve_planar: resolution below 8 points per unit length");
    for (const auto& z : config.zeros)
        if (std::abs((z - grid.center).real()) > 0.5 * grid.half_width ||
            std::abs((z - grid.center).imag()) > 0.5 * grid.half_width)
            throw InvalidInput("solve_planar: zeros too close to the boundary");

    const GridSpec& g = grid;
    const int N = g.N;
    const std::size_t P = g.size();
    std::vector<double> es(P), src(P), log1p_sum(P), logr2(P);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const cplx z = g.z(i, j);
            double e = 1.0, s = 0.0, l1 = 0.0, lr = 0.0;
            for (const auto& zj : config.zeros) {
                const double r2 = std::norm(z - zj);
                e *= r2 / (1.0 + r2);
                s += 4.0 / ((1.0 + r2) * (1.0 + r2));
                l1 += std::log1p(r2);
                lr += std::log(r2);
            }
            const std::size_t k = g.index(i, j);
            es[k] = e;
            src[k] = s;
            log1p_sum[k] = l1;
            logr2[k] = lr;
        }

    std::vector<double> w(P, 0.0);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (on_boundary_layer(g, i, j)) {
                const std::size_t k = g.index(i, j);
                w[k] = -(logr2[k] - log1p_sum[k]);  // u = 0 on the two outer layers
            }

    VortexSolution sol;
    sol.config = config;
    sol.grid = grid;

    if (config.n() > 0) {
        const InteriorMap im(N);
        const SpMat negL = neg_laplacian(g);
        Eigen::VectorXd F(im.size());
        bool converged = false;
        double last_step = 1.0;
        for (int it = 0; it < opt.max_newton; ++it) {
            double res = 0.0;
            for (int j = 2; j <= N - 3; ++j)
                for (int i = 2; i <= N - 3; ++i) {
                    const std::size_t k = g.index(i, j);
                    const double v = laplacian4(w, g, i, j) - 2.0 * (es[k] * std::exp(w[k]) - 1.0) - src[k];
                    F(im(i, j)) = v;
                    res = std::max(res, std::abs(v));
                }
            sol.newton_iterations = it;
            if (res < opt.newton_tol || last_step < 1e-13) {
                converged = true;
                break;
            }
            SpMat A = negL;
            for (int j = 2; j <= N - 3; ++j)
                for (int i = 2; i <= N - 3; ++i) {
                    const std::size_t k = g.index(i, j);
                    A.coeffRef(im(i, j), im(i, j)) += 2.0 * es[k] * std::exp(w[k]);
                }
            SpdSolver solver(A, opt.linear_tol);
            Eigen::VectorXd delta = solver.solve(F);
            const double dmax = delta.cwiseAbs().maxCoeff();
            last_step = dmax;
            if (dmax > 4.0) delta *= 4.0 / dmax;
            for (int j = 2; j <= N - 3; ++j)
                for (int i = 2; i <= N - 3; ++i) w[g.index(i, j)] += delta(im(i, j));
        }
        if (!converged) throw NumericalFailure("solve_planar: Newton iteration did not converge");
    }

    sol.u.resize(P);
    sol.phi.resize(P);
    sol.rho.resize(P);
    sol.alpha.resize(P);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const std::size_t k = g.index(i, j);
            sol.u[k] = std::max(-700.0, logr2[k] - log1p_sum[k] + w[k]);
            sol.phi[k] = 0.5 * (w[k] - log1p_sum[k]);
            sol.rho[k] = 1.0 - es[k] * std::exp(w[k]);
            sol.alpha[k] = std::exp(sol.phi[k]) * poly_H(config.zeros, g.z(i, j));
        }
    sol.a_conn.resize(P);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) sol.a_conn[g.index(i, j)] = -dbar(sol.phi, g, i, j);
    sol.flux = flux(sol);
    sol.residuals = check_residuals(sol);
    if (opt.enforce_residual && !sol.residuals.ok(opt.residual_tol))
        throw NumericalFailure("solve_planar: direct residual above threshold (resolution insufficient)");
    return sol;
}

ResidualReport check_residuals(const VortexSolution& sol) {
    const GridSpec& g = sol.grid;
    const int N = g.N;
    const double h = g.h();
    ResidualReport r;
    r.min_alpha_away = std::numeric_limits<double>::infinity();
    double s_curv = 0, s_dbar = 0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const std::size_t k = g.index(i, j);
            const cplx z = g.z(i, j);
            r.alpha_max = std::max(r.alpha_max, std::abs(sol.alpha[k]));
            r.u_max = std::max(r.u_max, sol.u[k]);
            if (on_boundary_layer(g, i, j)) r.boundary_u_max = std::max(r.boundary_u_max, std::abs(sol.u[k]));
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& zj : sol.config.zeros) dmin = std::min(dmin, std::abs(z - zj));
            if (dmin > 1.0) r.min_alpha_away = std::min(r.min_alpha_away, std::abs(sol.alpha[k]));
            if (i < 4 || j < 4 || i > N - 5 || j > N - 5 || dmin <= 2.0 * h) continue;
            const cplx da = dz(sol.a_conn, g, i, j);
            const double curv = std::abs(4.0 * da.real() - sol.rho[k]);
            const cplx db = dbar(sol.alpha, g, i, j) + sol.a_conn[k] * sol.alpha[k];
            r.curvature_sup = std::max(r.curvature_sup, curv);
            r.dbar_sup = std::max(r.dbar_sup, std::abs(db));
            s_curv += curv * curv * h * h;
            s_dbar += std::norm(db) * h * h;
            ++r.points_checked;
        }
    r.curvature_l2 = std::sqrt(s_curv);
    r.dbar_l2 = std::sqrt(s_dbar);
    if (!std::isfinite(r.min_alpha_away)) r.min_alpha_away = 0.0;
    return r;
}

double flux(const VortexSolution& sol) {
    const double h = sol.grid.h();
    double s = 0.0;
    for (double v : sol.rho) s += v;
    return s * h * h / kTwoPi;
}

MomentReport moments(const VortexSolution& sol, int q_max) {
    if (q_max < 1) throw InvalidInput("moments: q_max must be at least 1");
    const GridSpec& g = sol.grid;
    MomentReport rep;
    rep.moments.assign(q_max, 0.0);
    for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) {
            const cplx z = g.z(i, j);
            const double rho = sol.rho[g.index(i, j)];
            cplx zq = 1.0;
            for (int q = 0; q < q_max; ++q) {
                zq *= z;
                rep.moments[q] += zq * rho;
            }
        }
    for (auto& m : rep.moments) m *= g.h() * g.h() / kTwoPi;
    double reach = 0.0;
    for (const auto& z : sol.config.zeros)
        reach = std::max({reach, std::abs((z - g.center).real()), std::abs((z - g.center).imag())});
    rep.effective_radius = g.half_width - reach;
    return rep;
}

DecayFit decay_fit(const VortexSolution& sol, double r_lo, double r_hi) {
    if (!(r_hi > r_lo) || r_lo < 0) throw InvalidInput("decay_fit: need 0 <= r_lo < r_hi");
    const GridSpec& g = sol.grid;
    const cplx c = sol.config.centroid();
    const double reach = g.half_width - std::max(std::abs((c - g.center).real()), std::abs((c - g.center).imag()));
    if (r_hi > reach) throw InvalidInput("decay_fit: window leaves the grid");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, sy2 = 0, sxy2 = 0;
    long n = 0;
    for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) {
            const double r = std::abs(g.z(i, j) - c);
            if (r < r_lo || r > r_hi) continue;
            const double rho = sol.rho[g.index(i, j)];
            if (!(rho > 1e-12)) throw NumericalFailure("decay_fit: field below the numerical floor in the window");
            const double y = std::log(rho);
            const double y2 = y + 0.5 * std::log(r);
            sx += r;
            sy += y;
            sxx += r * r;
            sxy += r * y;
            sy2 += y2;
            sxy2 += r * y2;
            ++n;
        }
    if (n < 3) throw InvalidInput("decay_fit: too few grid points in the window");
    const double den = n * sxx - sx * sx;
    DecayFit f;
    f.exponent = -(n * sxy - sx * sy) / den;
    f.corrected_exponent = -(n * sxy2 - sx * sy2) / den;
    f.points = n;
    return f;
}

double hamiltonian(const VortexSolution& sol, double nu, cplx mu) {
    const GridSpec& g = sol.grid;
    double s = 0.0;
    for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) {
            const cplx z = g.z(i, j);
            s += (2.0 * nu * std::norm(z) + 2.0 * (std::conj(mu) * z * z).real()) * sol.rho[g.index(i, j)];
        }
    return s * g.h() * g.h() / (4.0 * kPi);
}

double second_moment(const VortexSolution& sol) {
    const GridSpec& g = sol.grid;
    double s = 0.0;
    for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) s += std::norm(g.z(i, j)) * sol.rho[g.index(i, j)];
    return s * g.h() * g.h() / kTwoPi;
}

// ---------------------------------------------------------------------------
// radial profile

double RadialProfile::f_at(double rr) const {
    if (r.empty()) return 1.0;
    if (rr <= 0) return f.front();
    const double h = r[1] - r[0];
    const int last = static_cast<int>(r.size()) - 1;
    if (rr >= r.back()) return f.back();
    int i = static_cast<int>(rr / h);
    // four-point Lagrange interpolation, mirrored at the origin (f(-r) = (-1)^n f(r))
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    auto val = [&](int k) {
        if (k < 0) return sgn * f[-k];
        if (k > last) return f[last];
        return f[k];
    };
    const double t = rr / h - i;
    const double fm = val(i - 1), f0 = val(i), f1 = val(i + 1), f2 = val(i + 2);
    return -t * (t - 1) * (t - 2) / 6.0 * fm + (t + 1) * (t - 1) * (t - 2) / 2.0 * f0 -
           (t + 1) * t * (t - 2) / 2.0 * f1 + (t + 1) * t * (t - 1) / 6.0 * f2;
}

RadialProfile solve_radial(int n, double r_max, int points) {
    if (n < 0) throw InvalidInput("solve_radial: n must be nonnegative");
    if (r_max < 8.0) throw InvalidInput("solve_radial: r_max must be at least 8");
    if (points < 512) throw InvalidInput("solve_radial: need at least 512 points");
    const int K = points - 1;  // r_i = i h, i = 0..K; r_K = r_max
    const double h = r_max / K;
    RadialProfile p;
    p.n = n;
    p.r.resize(K + 1);
    for (int i = 0; i <= K; ++i) p.r[i] = i * h;

    auto using_ = [n](double r) { return n == 0 ? 0.0 : n * std::log(r * r / (1.0 + r * r)); };
    auto es_at = [n](double r) { return std::pow(r * r / (1.0 + r * r), n); };
    auto src_at = [n](double r) { return 4.0 * n / ((1.0 + r * r) * (1.0 + r * r)); };

    // unknowns w_0..w_{K-2}; w_{K-1}, w_K fixed so that u = 0 there; even reflection at 0
    std::vector<double> w(K + 3, 0.0);  // index i + 0 for i = 0..K+2 (K+1, K+2 are outer ghosts)
    for (int i = K - 1; i <= K + 2; ++i) w[i] = -using_(i * h);
    const int U = K - 1;
    auto val = [&](int i) { return w[std::abs(i)]; };
    auto op = [&](int i) {  // w'' + w'/r, fourth order
        const double c2 = (-val(i - 2) + 16 * val(i - 1) - 30 * val(i) + 16 * val(i + 1) - val(i + 2)) / (12 * h * h);
        if (i == 0) return 2.0 * c2;
        const double c1 = (val(i - 2) - 8 * val(i - 1) + 8 * val(i + 1) - val(i + 2)) / (12 * h);
        return c2 + c1 / (i * h);
    };
    if (n > 0) {
        bool converged = false;
        double last_step = 1.0;
        for (int it = 0; it < 60; ++it) {
            Eigen::VectorXd F(U);
            double res = 0.0;
            for (int i = 0; i < U; ++i) {
                const double r = i * h;
                F(i) = op(i) - 2.0 * (es_at(r) * std::exp(w[i]) - 1.0) - src_at(r);
                res = std::max(res, std::abs(F(i)));
            }
            p.newton_iterations = it;
            if (res < 1e-9 || last_step < 1e-13) {
                converged = true;
                break;
            }
            std::vector<Eigen::Triplet<double>> t;
            for (int i = 0; i < U; ++i) {
                const double r = i * h;
                const double a2 = 1.0 / (12 * h * h);
                // coefficient of w_{i+o} in op(i)
                const int off[5] = {-2, -1, 0, 1, 2};
                const double c2[5] = {-a2, 16 * a2, -30 * a2, 16 * a2, -a2};
                const double c1[5] = {1.0 / (12 * h), -8.0 / (12 * h), 0.0, 8.0 / (12 * h), -1.0 / (12 * h)};
                for (int k = 0; k < 5; ++k) {
                    double c = (i == 0) ? 2.0 * c2[k] : c2[k] + c1[k] / r;
                    const int col = std::abs(i + off[k]);
                    if (col < U) t.emplace_back(i, col, c);
                }
                t.emplace_back(i, i, -2.0 * es_at(r) * std::exp(w[i]));
            }
            SpMat J(U, U);
            J.setFromTriplets(t.begin(), t.end());
            Eigen::SparseLU<SpMat> lu;
            lu.compute(J);
            if (lu.info() != Eigen::Success) throw NumericalFailure("solve_radial: singular Jacobian");
            Eigen::VectorXd d = lu.solve(-F);
            const double dmax = d.cwiseAbs().maxCoeff();
            last_step = dmax;
            if (dmax > 4.0) d *= 4.0 / dmax;
            for (int i = 0; i < U; ++i) w[i] += d(i);
        }
        if (!converged) throw NumericalFailure("solve_radial: iteration budget exhausted");
    }

    p.f.resize(K + 1);
    p.a.resize(K + 1);
    std::vector<double> rho(K + 1);
    for (int i = 0; i <= K; ++i) {
        const double r = i * h;
        const double e = n == 0 ? 1.0 : es_at(r) * std::exp(w[i]);
        p.f[i] = std::sqrt(e);
        rho[i] = 1.0 - e;
        const double wp = (i == 0) ? 0.0 : (val(i - 2) - 8 * val(i - 1) + 8 * val(i + 1) - val(i + 2)) / (12 * h);
        p.a[i] = n * r * r / (1.0 + r * r) - 0.5 * r * wp;
    }
    // reconstructed first-order check a'/r = 1 - f^2 (a is even in r)
    auto aval = [&](int i) { return i <= K ? p.a[std::abs(i)] : p.a[K]; };
    const int imax = static_cast<int>(0.9 * K);
    for (int i = 1; i <= imax; ++i) {
        const double ap = (aval(i - 2) - 8 * aval(i - 1) + 8 * aval(i + 1) - aval(i + 2)) / (12 * h);
        p.residual_sup = std::max(p.residual_sup, std::abs(ap / (i * h) - rho[i]));
    }
    // Simpson quadrature (composite, with a trapezoid tail if K is odd)
    auto simpson = [&](auto&& fn) {
        double s = 0.0;
        const int even = K - (K % 2);
        for (int i = 0; i < even; i += 2) s += h / 3.0 * (fn(i) + 4 * fn(i + 1) + fn(i + 2));
        if (K % 2) s += 0.5 * h * (fn(K - 1) + fn(K));
        return s;
    };
    p.flux = simpson([&](int i) { return p.r[i] * rho[i]; });
    p.second_moment = simpson([&](int i) { return std::pow(p.r[i], 3) * rho[i]; });
    if (n > 0 && std::abs(p.flux - n) > 0.02 * n)
        throw InvalidInput("solve_radial: r_max too small (flux deficit above 2%)");
    return p;
}

// ---------------------------------------------------------------------------
// moment coordinates

std::vector<cplx> power_sums(const std::vector<cplx>& zeros, int m) {
    std::vector<cplx> p(m, 0.0);
    for (const auto& z : zeros) {
        cplx zq = 1.0;
        for (int q = 0; q < m; ++q) {
            zq *= z;
            p[q] += zq;
        }
    }
    return p;
}

std::vector<cplx> elementary_from_power_sums(const std::vector<cplx>& p) {
    const int m = static_cast<int>(p.size());
    std::vector<cplx> e(m + 1, 0.0);
    e[0] = 1.0;
    for (int k = 1; k <= m; ++k) {
        cplx s = 0.0;
        for (int i = 1; i <= k; ++i) s += ((i % 2) ? 1.0 : -1.0) * e[k - i] * p[i - 1];
        e[k] = s / static_cast<double>(k);
    }
    return e;
}

std::vector<cplx> zeros_from_power_sums(const std::vector<cplx>& p) {
    const int m = static_cast<int>(p.size());
    if (m == 0) return {};
    const auto e = elementary_from_power_sums(p);
    // monic z^m - e1 z^{m-1} + e2 z^{m-2} - ...; companion matrix
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m, m);
    for (int k = 1; k <= m; ++k) C(0, k - 1) = ((k % 2) ? 1.0 : -1.0) * e[k];
    for (int i = 1; i < m; ++i) C(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> z(m);
    for (int i = 0; i < m; ++i) z[i] = es.eigenvalues()(i);
    // polish each root with Newton on the polynomial
    auto poly = [&](cplx x, cplx& d) {
        cplx v = 1.0;
        d = 0.0;
        for (int k = 1; k <= m; ++k) {
            d = d * x + v;
            v = v * x - ((k % 2) ? 1.0 : -1.0) * e[k];
        }
        return v;
    };
    for (auto& x : z)
        for (int it = 0; it < 3; ++it) {
            cplx d;
            const cplx v = poly(x, d);
            if (std::abs(d) < 1e-8) break;
            x -= v / d;
        }
    std::sort(z.begin(), z.end(), [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return z;
}

// ---------------------------------------------------------------------------
// tangent equation

TangentPair tangent_solve(const VortexSolution& sol, const TangentDirection& dir) {
    const GridSpec& g = sol.grid;
    const int N = g.N;
    const int m = sol.config.n();
    if (static_cast<int>(dir.values.size()) != m)
        throw InvalidInput("tangent_solve: direction has the wrong number of components");
    TangentPair tp;
    const std::size_t P = g.size();
    tp.x.assign(P, 0.0);
    tp.iota.assign(P, 0.0);
    bool zero_dir = std::all_of(dir.values.begin(), dir.values.end(), [](cplx v) { return v == 0.0; });
    if (m == 0 || zero_dir) return tp;

    const auto& zs = sol.config.zeros;
    // coefficients of dH as a polynomial of degree <= m-1 (only for moment directions)
    std::vector<cplx> dcoef;
    if (dir.kind == TangentDirection::Kind::Moments) {
        const auto p = power_sums(zs, m);
        const auto e = elementary_from_power_sums(p);
        std::vector<cplx> de(m + 1, 0.0);
        for (int k = 1; k <= m; ++k) {
            cplx s = 0.0;
            for (int i = 1; i <= k; ++i)
                s += ((i % 2) ? 1.0 : -1.0) * (de[k - i] * p[i - 1] + e[k - i] * dir.values[i - 1]);
            de[k] = s / static_cast<double>(k);
        }
        dcoef = de;  // dH = sum_k (-1)^k de_k z^{m-k}
    }
    auto dH = [&](cplx z) {
        if (dir.kind == TangentDirection::Kind::Moments) {
            cplx v = 0.0;
            for (int k = 1; k <= m; ++k) v += ((k % 2) ? -1.0 : 1.0) * dcoef[k] * std::pow(z, m - k);
            return v;
        }
        cplx v = 0.0;
        for (int j = 0; j < m; ++j) {
            cplx prod = 1.0;
            for (int k = 0; k < m; ++k)
                if (k != j) prod *= (z - zs[k]);
            v -= dir.values[j] * prod;
        }
        return v;
    };

    std::vector<cplx> Hs(P), dHs(P), eta(P, 0.0);
    std::vector<double> E(P);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const std::size_t k = g.index(i, j);
            const cplx z = g.z(i, j);
            Hs[k] = poly_H(zs, z);
            dHs[k] = dH(z);
            E[k] = std::norm(sol.alpha[k]);
            if (on_boundary_layer(g, i, j)) eta[k] = -dHs[k] / Hs[k];
        }
    // (-Delta + 2|alpha|^2) eta_reg = -2 e^{2 phi} conj(H) dH, eta_reg = -dH/H on the boundary layers
    const InteriorMap im(N);
    SpMat A = neg_laplacian(g);
    Eigen::VectorXd br(im.size()), bi(im.size());
    for (int j = 2; j <= N - 3; ++j)
        for (int i = 2; i <= N - 3; ++i) {
            const std::size_t k = g.index(i, j);
            A.coeffRef(im(i, j), im(i, j)) += 2.0 * E[k];
            const cplx rhs = -2.0 * std::exp(2.0 * sol.phi[k]) * std::conj(Hs[k]) * dHs[k] + laplacian4(eta, g, i, j);
            br(im(i, j)) = rhs.real();
            bi(im(i, j)) = rhs.imag();
        }
    SpdSolver solver(A, 1e-13);
    const Eigen::VectorXd xr = solver.solve(br), xi = solver.solve(bi);
    tp.iterations = solver.iterations();
    for (int j = 2; j <= N - 3; ++j)
        for (int i = 2; i <= N - 3; ++i) eta[g.index(i, j)] = cplx(xr(im(i, j)), xi(im(i, j)));

    const double s2 = std::sqrt(2.0);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const std::size_t k = g.index(i, j);
            tp.iota[k] = std::exp(sol.phi[k]) * (dHs[k] + Hs[k] * eta[k]);
            tp.x[k] = -s2 * dbar(eta, g, i, j);
        }
    const double h2 = g.h() * g.h();
    double l2 = 0.0, fmax = 0.0;
    for (std::size_t k = 0; k < P; ++k) {
        l2 += (std::norm(tp.x[k]) + std::norm(tp.iota[k])) * h2;
        fmax = std::max({fmax, std::abs(tp.x[k]), std::abs(tp.iota[k])});
    }
    tp.l2_norm = std::sqrt(l2);
    tp.metric_norm = tp.l2_norm / std::sqrt(kPi);
    double res = 0.0;
    for (int j = 4; j <= N - 5; ++j)
        for (int i = 4; i <= N - 5; ++i) {
            const std::size_t k = g.index(i, j);
            const cplx r1 = dz(tp.x, g, i, j) + std::conj(sol.alpha[k]) * tp.iota[k] / s2;
            const cplx r2 = dbar(tp.iota, g, i, j) + sol.a_conn[k] * tp.iota[k] + sol.alpha[k] * tp.x[k] / s2;
            res = std::max({res, std::abs(r1), std::abs(r2)});
        }
    tp.residual_rel = fmax > 0 ? res / fmax : 0.0;
    return tp;
}

double metric_inner(const VortexSolution& sol, const TangentPair& a, const TangentPair& b) {
    const double h2 = sol.grid.h() * sol.grid.h();
    double s = 0.0;
    for (std::size_t k = 0; k < a.x.size(); ++k)
        s += (std::conj(a.x[k]) * b.x[k] + std::conj(a.iota[k]) * b.iota[k]).real();
    return s * h2 / kPi;
}

}  // namespace echkit
