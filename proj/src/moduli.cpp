#include "echkit/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/numeric/odeint.hpp>

namespace echkit {

namespace {

using State = std::vector<double>;

State to_state(const std::vector<cplx>& s) {
    State x(2 * s.size());
    for (std::size_t q = 0; q < s.size(); ++q) {
        x[2 * q] = s[q].real();
        x[2 * q + 1] = s[q].imag();
    }
    return x;
}

std::vector<cplx> from_state(const State& x) {
    std::vector<cplx> s(x.size() / 2);
    for (std::size_t q = 0; q < s.size(); ++q) s[q] = {x[2 * q], x[2 * q + 1]};
    return s;
}

double distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double s = 0;
    for (std::size_t q = 0; q < a.size(); ++q) s += std::norm(a[q] - b[q]);
    return std::sqrt(s);
}

void check_sigma(const std::vector<cplx>& sigma, int m) {
    if (static_cast<int>(sigma.size()) != m) throw InvalidInput("moment vector length does not match m");
    for (const auto& s : sigma)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw InvalidInput("non-finite moment coordinate");
}

struct Escape {
    double t;
};

}  // namespace

// ---------------------------------------------------------------------------
// points

ModuliPoint ModuliPoint::from_zeros(std::vector<cplx> zeros) {
    if (zeros.empty()) throw InvalidInput("moduli point needs at least one zero");
    ModuliPoint p;
    p.m = static_cast<int>(zeros.size());
    p.moments = power_sums(zeros, p.m);
    p.zeros = std::move(zeros);
    return p;
}

ModuliPoint ModuliPoint::from_moments(std::vector<cplx> moments) {
    if (moments.empty()) throw InvalidInput("moduli point needs at least one moment");
    ModuliPoint p;
    p.m = static_cast<int>(moments.size());
    p.zeros = zeros_from_power_sums(moments);
    p.moments = std::move(moments);
    return p;
}

ModuliPoint ModuliPoint::origin(int m) {
    if (m < 1) throw InvalidInput("m must be positive");
    return from_zeros(std::vector<cplx>(m, 0.0));
}

bool ModuliPoint::consistent(double tol) const {
    if (static_cast<int>(zeros.size()) != m || static_cast<int>(moments.size()) != m) return false;
    const auto p = power_sums(zeros, m);
    for (int q = 0; q < m; ++q)
        if (std::abs(p[q] - moments[q]) > tol * std::max(1.0, std::abs(moments[q]))) return false;
    return true;
}

std::vector<cplx> ModuliModel::velocity(const std::vector<cplx>& sigma, double nu, cplx mu) const {
    auto v = gradient(sigma, nu, mu);
    for (auto& x : v) x *= cplx(0, 1);
    return v;
}

// ---------------------------------------------------------------------------
// direct model

DirectModel::DirectModel(int m, DirectOptions opt) : m_(m), opt_(opt) {
    if (m < 1) throw InvalidInput("m must be positive");
    if (!(opt_.step > 0)) throw InvalidInput("difference step must be positive");
}

VortexSolution DirectModel::solve(const std::vector<cplx>& sigma) const {
    check_sigma(sigma, m_);
    VortexConfig c{m_ == 1 ? std::vector<cplx>{sigma[0]} : zeros_from_power_sums(sigma)};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++solves_;
    }
    return solve_planar(c, GridSpec::default_for(c, opt_.grid_points), opt_.solve);
}

std::array<double, 3> DirectModel::energy_parts(const std::vector<cplx>& sigma) const {
    std::vector<long long> key;
    for (const auto& s : sigma) {
        key.push_back(std::llround(s.real() * 1e6));
        key.push_back(std::llround(s.imag() * 1e6));
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const auto sol = solve(sigma);
    const std::array<double, 3> parts{hamiltonian(sol, 1.0, 0.0), hamiltonian(sol, 0.0, 1.0),
                                      hamiltonian(sol, 0.0, cplx(0, 1))};
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key, parts);
    return parts;
}

double DirectModel::energy(const std::vector<cplx>& sigma, double nu, cplx mu) const {
    const auto p = energy_parts(sigma);
    return nu * p[0] + mu.real() * p[1] + mu.imag() * p[2];
}

Eigen::MatrixXd DirectModel::gram(const std::vector<cplx>& sigma) const {
    const auto sol = solve(sigma);
    std::vector<TangentPair> t;
    for (int k = 0; k < 2 * m_; ++k) {
        std::vector<cplx> d(m_, 0.0);
        d[k / 2] = (k % 2 == 0) ? cplx(1, 0) : cplx(0, 1);
        t.push_back(tangent_solve(sol, TangentDirection::of_moments(d)));
    }
    Eigen::MatrixXd M(2 * m_, 2 * m_);
    for (int a = 0; a < 2 * m_; ++a)
        for (int b = a; b < 2 * m_; ++b) M(a, b) = M(b, a) = metric_inner(sol, t[a], t[b]);
    return M;
}

std::vector<cplx> DirectModel::gradient(const std::vector<cplx>& sigma, double nu, cplx mu) const {
    check_sigma(sigma, m_);
    Eigen::VectorXd d(2 * m_);
    for (int k = 0; k < 2 * m_; ++k) {
        auto p = sigma, q = sigma;
        const cplx e = (k % 2 == 0) ? cplx(opt_.step, 0) : cplx(0, opt_.step);
        p[k / 2] += e;
        q[k / 2] -= e;
        d[k] = (energy(p, nu, mu) - energy(q, nu, mu)) / (2.0 * opt_.step);
    }
    if (d.cwiseAbs().maxCoeff() == 0.0) return std::vector<cplx>(m_, 0.0);
    const Eigen::MatrixXd M = gram(sigma);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0) || sv(0) / sv(sv.size() - 1) > opt_.max_condition)
        throw NumericalFailure("ill-conditioned Gram matrix");
    const Eigen::VectorXd v = M.ldlt().solve(d);
    std::vector<cplx> g(m_);
    for (int q = 0; q < m_; ++q) g[q] = {v[2 * q], v[2 * q + 1]};
    return g;
}

std::vector<cplx> grad_h(const ModuliPoint& point, double nu, cplx mu, double step, int grid_points) {
    DirectOptions opt;
    opt.step = step;
    opt.grid_points = grid_points;
    return DirectModel(point.m, opt).gradient(point.moments, nu, mu);
}

// ---------------------------------------------------------------------------
// reduced model

struct ReducedSplines {
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    Spline A, f, g;
};

namespace {

// even (parity 1) or odd (parity -1) extension of samples on [0, r_max]
std::vector<double> mirrored(const std::vector<double>& v, int parity) {
    std::vector<double> out;
    for (std::size_t k = v.size() - 1; k >= 1; --k) out.push_back(parity * v[k]);
    out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace

ReducedModel ReducedModel::from_tables(int m, double g1, double h0, std::vector<double> r, std::vector<double> A,
                                       std::vector<double> B, std::vector<double> g_rel) {
    if (m < 1 || m > 2) throw InvalidInput("reduced model supports m = 1 and m = 2");
    if (!(g1 > 0)) throw InvalidInput("g1 must be positive");
    ReducedModel model;
    model.m_ = m;
    model.g1_ = g1;
    model.h0_ = h0;
    if (m == 2) {
        const std::size_t n = r.size();
        if (n < 4 || A.size() != n || B.size() != n || g_rel.size() != n) throw InvalidInput("table sizes differ");
        if (r[0] != 0.0) throw InvalidInput("table must start at r = 0");
        const double h = r[1] - r[0];
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(r[k] - k * h) > 1e-9 * h) throw InvalidInput("table must be uniform");
        for (double g : g_rel)
            if (!(g > 0)) throw InvalidInput("relative metric must be positive");
        model.r_ = std::move(r);
        model.A_ = std::move(A);
        model.B_ = std::move(B);
        model.g_rel_ = std::move(g_rel);
        model.init_splines();
    }
    return model;
}

void ReducedModel::init_splines() {
    const std::size_t n = r_.size();
    const double h = r_[1] - r_[0];
    std::vector<double> f(n);
    for (std::size_t k = 1; k < n; ++k) f[k] = B_[k] / r_[k];
    // f is even in r: f(0) from the quadratic through the first two samples
    const double r1 = r_[1] * r_[1], r2 = r_[2] * r_[2];
    f[0] = (r2 * f[1] - r1 * f[2]) / (r2 - r1);
    const auto A = mirrored(A_, 1), F = mirrored(f, 1), G = mirrored(g_rel_, 1);
    const double t0 = -r_.back();
    auto sp = std::make_shared<ReducedSplines>(ReducedSplines{
        ReducedSplines::Spline(A.begin(), A.end(), t0, h), ReducedSplines::Spline(F.begin(), F.end(), t0, h),
        ReducedSplines::Spline(G.begin(), G.end(), t0, h)});
    splines_ = std::move(sp);
}

ReducedModel::Rel ReducedModel::rel(double r) const {
    if (m_ != 2) throw InvalidInput("relative data exists only for m = 2");
    const auto& s = *splines_;
    const double rm = r_.back();
    if (r <= rm) return {s.A(r), s.A.prime(r), s.f(r), s.f.prime(r), s.g(r)};
    // beyond the table: linear growth of A and B, metric ~ 1 / r as for separated vortices
    const double Am = s.A(rm), dAm = s.A.prime(rm), Bm = s.f(rm) * rm, dBm = s.f.prime(rm) * rm + s.f(rm);
    const double B = Bm + dBm * (r - rm);
    return {Am + dAm * (r - rm), dAm, B / r, (dBm * r - B) / (r * r), s.g(rm) * rm / r};
}

ReducedModel ReducedModel::build(int m, const ReducedOptions& opt) {
    if (m < 1 || m > 2) throw InvalidInput("reduced model supports m = 1 and m = 2");
    if (opt.table_points < 4 || !(opt.r_max > 0)) throw InvalidInput("bad table options");
    VortexConfig one{{0.0}};
    const auto s1 = solve_planar(one, GridSpec::default_for(one, opt.grid_points), opt.solve);
    const double g1 = std::pow(tangent_solve(s1, TangentDirection::of_zeros({1.0})).metric_norm, 2);
    const double h0 = hamiltonian(s1, 1.0, 0.0);
    if (m == 1) return from_tables(1, g1, h0, {}, {}, {}, {});
    std::vector<double> r, A, B, g, gcm;
    for (int k = 0; k < opt.table_points; ++k) {
        const double rk = opt.r_max * k / (opt.table_points - 1);
        const double d = std::sqrt(rk / 2.0);
        VortexConfig c{{d, -d}};
        const auto sol = solve_planar(c, GridSpec::default_for(c, opt.grid_points), opt.solve);
        r.push_back(rk);
        A.push_back(hamiltonian(sol, 1.0, 0.0));
        B.push_back(hamiltonian(sol, 0.0, 1.0));
        g.push_back(std::pow(tangent_solve(sol, TangentDirection::of_moments({0.0, 1.0})).metric_norm, 2));
        gcm.push_back(std::pow(tangent_solve(sol, TangentDirection::of_moments({2.0, 0.0})).metric_norm, 2));
    }
    auto model = from_tables(2, g1, h0, r, A, B, g);
    model.g_cm_ = gcm;
    return model;
}

double ReducedModel::energy(const std::vector<cplx>& sigma, double nu, cplx mu) const {
    check_sigma(sigma, m_);
    if (m_ == 1) {
        const cplx w = sigma[0];
        return nu * h0_ + nu * std::norm(w) + (std::conj(mu) * w * w).real();
    }
    const cplx c = sigma[0] / 2.0, s = sigma[1] - sigma[0] * sigma[0] / 2.0;
    const Rel d = rel(std::abs(s));
    return 2.0 * (nu * std::norm(c) + (std::conj(mu) * c * c).real()) + nu * d.A + (std::conj(mu) * d.f * s).real();
}

std::vector<cplx> ReducedModel::gradient(const std::vector<cplx>& sigma, double nu, cplx mu) const {
    check_sigma(sigma, m_);
    if (m_ == 1) {
        const cplx w = sigma[0];
        return {2.0 * (nu * w + mu * std::conj(w)) / g1_};
    }
    const cplx c = sigma[0] / 2.0, s = sigma[1] - sigma[0] * sigma[0] / 2.0;
    const double r = std::abs(s);
    const Rel d = rel(r);
    // d h / d conj(c) and d h / d conj(s)
    const cplx hc = 2.0 * (nu * c + mu * std::conj(c));
    cplx hs = 0.5 * mu * d.f;
    if (r > 1e-12) hs += nu * d.dA * s / (2.0 * r) + 0.5 * (std::conj(mu) * d.df * s * s / (2.0 * r) + mu * d.df * r / 2.0);
    const cplx vc = 2.0 * hc / (2.0 * g1_);
    const cplx vs = 2.0 * hs / d.g;
    return {2.0 * vc, vs + 4.0 * c * vc};
}

// ---------------------------------------------------------------------------
// flow

namespace {

struct System {
    const PeriodicPair& pair;
    const ModuliModel& model;
    double cap;

    void operator()(const State& x, State& dx, double t) const {
        const auto s = from_state(x);
        for (const auto& q : s)
            if (!(std::abs(q) <= cap)) throw Escape{t};
        dx = to_state(model.velocity(s, pair.nu(t), pair.mu(t)));
    }
};

}  // namespace

FlowResult flow(const PeriodicPair& pair, const ModuliModel& model, const ModuliPoint& start, const FlowOptions& opt) {
    namespace ode = boost::numeric::odeint;
    if (opt.steps < 64) throw InvalidInput("flow needs at least 64 steps");
    if (start.m != model.m()) throw InvalidInput("start point has the wrong number of zeros");
    FlowResult res;
    std::vector<double> times(opt.steps + 1);
    for (int k = 0; k <= opt.steps; ++k) times[k] = opt.t_end * k / opt.steps;
    State x = to_state(start.moments);
    System sys{pair, model, opt.cap};
    auto observer = [&](const State& y, double t) {
        const auto s = from_state(y);
        FlowState st;
        st.t = t;
        st.point.m = model.m();
        st.point.moments = s;
        st.point.zeros = model.m() == 1 ? s : zeros_from_power_sums(s);
        st.energy = model.energy(s, pair.nu(t), pair.mu(t));
        res.trajectory.push_back(std::move(st));
    };
    try {
        ode::integrate_times(ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>()), sys, x,
                             times.begin(), times.end(), opt.t_end / opt.steps, observer);
    } catch (const Escape& e) {
        res.escaped = true;
        res.escape_time = e.t;
    }
    return res;
}

bool return_map(const PeriodicPair& pair, const ModuliModel& model, const std::vector<cplx>& sigma,
                std::vector<cplx>& out, const FlowOptions& opt) {
    namespace ode = boost::numeric::odeint;
    check_sigma(sigma, model.m());
    State x = to_state(sigma);
    System sys{pair, model, opt.cap};
    try {
        ode::integrate_adaptive(ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>()), sys,
                                x, 0.0, opt.t_end, opt.t_end / 64);
    } catch (const Escape&) {
        return false;
    }
    out = from_state(x);
    return true;
}

// ---------------------------------------------------------------------------
// closed orbits

namespace {

struct BudgetExhausted {};

class Evaluator {
public:
    Evaluator(const PeriodicPair& pair, const ModuliModel& model, const SearchOptions& opt, SearchReport& rep)
        : pair_(pair), model_(model), opt_(opt), rep_(rep) {}

    // Phi(x) - x, or nullopt on escape
    bool residual(const std::vector<cplx>& x, std::vector<cplx>& F) {
        if (rep_.evaluations >= opt_.budget) throw BudgetExhausted{};
        ++rep_.evaluations;
        std::vector<cplx> y;
        if (!return_map(pair_, model_, x, y, opt_.flow)) return false;
        F.resize(x.size());
        for (std::size_t q = 0; q < x.size(); ++q) F[q] = y[q] - x[q];
        return true;
    }

    // Jacobian of Phi by central differences
    bool jacobian(const std::vector<cplx>& x, double h, Eigen::MatrixXd& J) {
        const int n = 2 * static_cast<int>(x.size());
        J.resize(n, n);
        for (int k = 0; k < n; ++k) {
            auto p = x, q = x;
            const cplx e = (k % 2 == 0) ? cplx(h, 0) : cplx(0, h);
            p[k / 2] += e;
            q[k / 2] -= e;
            std::vector<cplx> Fp, Fq;
            if (!residual(p, Fp) || !residual(q, Fq)) return false;
            const State a = to_state(Fp), b = to_state(Fq);
            for (int i = 0; i < n; ++i) J(i, k) = (a[i] - b[i]) / (2.0 * h) + (i == k ? 1.0 : 0.0);
        }
        return true;
    }

private:
    const PeriodicPair& pair_;
    const ModuliModel& model_;
    const SearchOptions& opt_;
    SearchReport& rep_;
};

double norm_of(const std::vector<cplx>& F) {
    double s = 0;
    for (const auto& f : F) s += std::norm(f);
    return std::sqrt(s);
}

}  // namespace

SearchReport closed_orbit_search(const PeriodicPair& pair, const ModuliModel& model, const SearchRegion& region,
                                 const SearchOptions& opt) {
    const int m = model.m();
    if (static_cast<int>(region.center.size()) != m || static_cast<int>(region.half_width.size()) != m)
        throw InvalidInput("search region must give a centre and half-width per moment coordinate");
    if (opt.grid < 1) throw InvalidInput("grid must be positive");
    SearchReport rep;
    Evaluator ev(pair, model, opt, rep);
    const int dims = 2 * m;
    long total = 1;
    for (int k = 0; k < dims; ++k) total *= opt.grid;
    rep.min_displacement = std::numeric_limits<double>::infinity();
    try {
        for (long idx = 0; idx < total; ++idx) {
            std::vector<cplx> x(region.center);
            long rest = idx;
            for (int k = 0; k < dims; ++k) {
                const int i = static_cast<int>(rest % opt.grid);
                rest /= opt.grid;
                const double hw = region.half_width[k / 2];
                const double off = opt.grid == 1 ? 0.0 : -hw + 2.0 * hw * i / (opt.grid - 1);
                x[k / 2] += (k % 2 == 0) ? cplx(off, 0) : cplx(0, off);
            }
            SearchSample smp;
            smp.sigma = x;
            std::vector<cplx> F;
            if (ev.residual(x, F)) {
                smp.displacement = norm_of(F);
            } else {
                smp.escaped = true;
                smp.displacement = std::numeric_limits<double>::infinity();
            }
            if (smp.displacement < rep.min_displacement) {
                rep.min_displacement = smp.displacement;
                rep.argmin = x;
            }
            rep.samples.push_back(std::move(smp));
        }
    } catch (const BudgetExhausted&) {
        rep.complete = false;
        return rep;
    }

    rep.degenerate = !rep.samples.empty() && std::all_of(rep.samples.begin(), rep.samples.end(), [&](const SearchSample& s) {
        return s.displacement < opt.fixed_tol;
    });
    if (rep.degenerate) return rep;

    std::vector<const SearchSample*> seeds;
    for (const auto& s : rep.samples)
        if (s.displacement < opt.refine_threshold) seeds.push_back(&s);
    std::sort(seeds.begin(), seeds.end(),
              [](const SearchSample* a, const SearchSample* b) { return a->displacement < b->displacement; });
    try {
        for (const auto* seed : seeds) {
            ++rep.refined;
            std::vector<cplx> x = seed->sigma, F;
            double fn = seed->displacement;
            ev.residual(x, F);
            for (int it = 0; it < opt.refine_iterations && fn > 1e-3 * opt.candidate_threshold; ++it) {
                Eigen::MatrixXd J;
                if (!ev.jacobian(x, opt.jacobian_step, J)) break;
                J -= Eigen::MatrixXd::Identity(dims, dims);
                const State f = to_state(F);
                const Eigen::VectorXd dx =
                    J.completeOrthogonalDecomposition().solve(-Eigen::Map<const Eigen::VectorXd>(f.data(), dims));
                bool improved = false;
                for (double lam = 1.0; lam > 1.0 / 64; lam /= 2) {
                    auto y = x;
                    for (int q = 0; q < m; ++q) y[q] += lam * cplx(dx[2 * q], dx[2 * q + 1]);
                    std::vector<cplx> Fy;
                    if (ev.residual(y, Fy) && norm_of(Fy) < fn) {
                        x = y;
                        F = Fy;
                        fn = norm_of(Fy);
                        improved = true;
                        break;
                    }
                }
                if (!improved) break;
            }
            if (fn < rep.min_displacement) {
                rep.min_displacement = fn;
                rep.argmin = x;
            }
            if (fn >= opt.candidate_threshold) continue;
            bool merged = false;
            for (auto& c : rep.candidates)
                if (distance(c.sigma, x) < opt.refine_threshold) {
                    if (fn < c.displacement) {
                        c.sigma = x;
                        c.displacement = fn;
                    }
                    merged = true;
                }
            if (!merged) {
                Candidate c;
                c.sigma = x;
                c.displacement = fn;
                c.seed = seed->sigma;
                rep.candidates.push_back(std::move(c));
            }
        }
    } catch (const BudgetExhausted&) {
        rep.complete = false;
    }
    for (auto& c : rep.candidates) c.zeros = m == 1 ? c.sigma : zeros_from_power_sums(c.sigma);
    return rep;
}

FloquetReport linearized_monodromy(const PeriodicPair& pair, const ModuliModel& model, double step, double fixed_tol,
                                   const FlowOptions& opt) {
    const int m = model.m();
    const std::vector<cplx> x0(m, 0.0);
    FloquetReport rep;
    const int nt = pair.is_constant() ? 1 : 64;
    for (int k = 0; k < nt; ++k) {
        const double t = kTwoPi * k / nt;
        rep.max_fixed_speed = std::max(rep.max_fixed_speed, norm_of(model.velocity(x0, pair.nu(t), pair.mu(t))));
    }
    if (rep.max_fixed_speed > fixed_tol) throw InvalidInput("the symmetric point is not a fixed trajectory for this pair");
    SearchOptions so;
    so.flow = opt;
    SearchReport dummy;
    Evaluator ev(pair, model, so, dummy);
    if (!ev.jacobian(x0, step, rep.jacobian)) throw NumericalFailure("return map escaped near the symmetric point");
    Eigen::EigenSolver<Eigen::MatrixXd> es(rep.jacobian);
    for (int k = 0; k < rep.jacobian.rows(); ++k) rep.multipliers.push_back(es.eigenvalues()[k]);
    std::sort(rep.multipliers.begin(), rep.multipliers.end(), [](cplx a, cplx b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a.imag() > b.imag();
    });
    rep.product = rep.jacobian.determinant();
    bool any_hyperbolic = false, any_complex = false;
    for (const auto& l : rep.multipliers) {
        if (std::abs(l.imag()) > 1e-9) {
            any_complex = true;
            if (l.imag() > 0) rep.rotation = std::arg(l) / kTwoPi;
        } else if (std::abs(std::abs(l) - 1.0) > 1e-3) {
            any_hyperbolic = true;
        }
    }
    rep.type = any_hyperbolic ? "hyperbolic" : (any_complex ? "elliptic" : "degenerate");
    return rep;
}

}  // namespace echkit
