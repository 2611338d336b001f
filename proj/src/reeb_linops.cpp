#include "echkit/reeb_linops.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace echkit {

namespace {

std::vector<cplx> to_complex(const std::vector<double>& v) {
    return std::vector<cplx>(v.begin(), v.end());
}

double wrap_2pi(double t) {
    double r = std::fmod(t, kTwoPi);
    return r < 0 ? r + kTwoPi : r;
}

}  // namespace

PeriodicPair::PeriodicPair(std::vector<double> nu, std::vector<cplx> mu)
    : nu_s_(std::move(nu)), mu_s_(std::move(mu)) {
    if (nu_s_.empty() || nu_s_.size() != mu_s_.size())
        throw InvalidInput("PeriodicPair: nu and mu need the same non-zero number of samples");
    for (double v : nu_s_)
        if (!std::isfinite(v)) throw InvalidInput("PeriodicPair: non-finite nu sample");
    for (const cplx& v : mu_s_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidInput("PeriodicPair: non-finite mu sample");
    nu_ = TrigSeries(to_complex(nu_s_), kTwoPi);
    mu_ = TrigSeries(mu_s_, kTwoPi);
}

PeriodicPair PeriodicPair::constant(double nu, cplx mu, std::size_t n) {
    return PeriodicPair(std::vector<double>(n, nu), std::vector<cplx>(n, mu));
}

PeriodicPair PeriodicPair::from_functions(const std::function<double(double)>& nu,
                                          const std::function<cplx(double)>& mu, std::size_t n) {
    std::vector<double> a(n);
    std::vector<cplx> b(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
        a[j] = nu(t);
        b[j] = mu(t);
    }
    return PeriodicPair(std::move(a), std::move(b));
}

PeriodicPair PeriodicPair::hyperbolic_canonical(int k, double eps, std::size_t n) {
    return from_functions([k](double) { return 0.25 * k; },
                          [k, eps](double t) { return cplx(0.0, eps) * std::exp(cplx(0.0, k * t)); }, n);
}

PeriodicPair PeriodicPair::elliptic_canonical(double R, std::size_t n) {
    return constant(0.5 * R, 0.0, n);
}

int PeriodicPair::band() const { return std::max(nu_.band(), mu_.band()); }

bool PeriodicPair::mu_vanishes(double tol) const {
    return std::all_of(mu_s_.begin(), mu_s_.end(), [tol](const cplx& v) { return std::abs(v) <= tol; });
}

PeriodicPair PeriodicPair::resampled(std::size_t n) const {
    if (n == size()) return *this;
    return from_functions([this](double t) { return nu(t); }, [this](double t) { return mu(t); }, n);
}

PeriodicPair PeriodicPair::lerp(const PeriodicPair& other, double s) const {
    const std::size_t n = std::max(size(), other.size());
    const PeriodicPair a = resampled(n), b = other.resampled(n);
    std::vector<double> nu(n);
    std::vector<cplx> mu(n);
    for (std::size_t j = 0; j < n; ++j) {
        nu[j] = (1 - s) * a.nu_s_[j] + s * b.nu_s_[j];
        mu[j] = (1 - s) * a.mu_s_[j] + s * b.mu_s_[j];
    }
    return PeriodicPair(std::move(nu), std::move(mu));
}

double PeriodicPair::distance(const PeriodicPair& other) const {
    const std::size_t n = std::max(size(), other.size());
    const PeriodicPair a = resampled(n), b = other.resampled(n);
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        d = std::max(d, std::abs(a.nu_s_[j] - b.nu_s_[j]));
        d = std::max(d, std::abs(a.mu_s_[j] - b.mu_s_[j]));
    }
    return d;
}

PeriodicFunction PeriodicFunction::from_function(const std::function<cplx(double)>& f, int q, std::size_t n) {
    if (q <= 0) throw InvalidInput("PeriodicFunction: q must be positive");
    PeriodicFunction z;
    z.q = q;
    z.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) z.values[j] = f(z.t(j));
    return z;
}

PeriodicFunction apply_L(const PeriodicPair& pair, const PeriodicFunction& zeta, int q) {
    if (q <= 0) throw InvalidInput("apply_L: q must be positive");
    if (zeta.q != q) throw InvalidInput("apply_L: zeta is not represented with the requested period multiplier");
    if (zeta.values.size() < 8) throw InvalidInput("apply_L: too few samples to differentiate");
    const auto d = spectral_derivative(zeta.values, zeta.period());
    PeriodicFunction out;
    out.q = q;
    out.values.resize(zeta.values.size());
    for (std::size_t j = 0; j < zeta.values.size(); ++j) {
        const double t = wrap_2pi(zeta.t(j));
        const cplx z = zeta.values[j];
        out.values[j] = cplx(0.0, 0.5) * d[j] + pair.nu(t) * z + pair.mu(t) * std::conj(z);
    }
    return out;
}

double real_inner(const PeriodicFunction& a, const PeriodicFunction& b) {
    if (a.values.size() != b.values.size() || a.q != b.q)
        throw InvalidInput("real_inner: representation mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j) s += (std::conj(a.values[j]) * b.values[j]).real();
    return s / static_cast<double>(a.values.size());
}

Mat2 generator(const PeriodicPair& pair, double t) {
    const double nu = pair.nu(t);
    const cplx mu = pair.mu(t);
    const double m1 = mu.real(), m2 = mu.imag();
    Mat2 A;
    A << -2 * m2, -2 * (nu - m1), 2 * (nu + m1), 2 * m2;
    return A;
}

MonodromyResult monodromy(const PeriodicPair& pair, int steps) {
    if (steps < 64) throw InvalidInput("monodromy: steps must be at least 64");
    const double h = kTwoPi / steps;
    MonodromyResult r;
    r.t.reserve(steps + 1);
    r.U.reserve(steps + 1);
    Mat2 U = Mat2::Identity();
    r.t.push_back(0.0);
    r.U.push_back(U);
    Mat2 A0 = generator(pair, 0.0);
    for (int i = 0; i < steps; ++i) {
        const double t = i * h;
        const Mat2 Am = generator(pair, t + 0.5 * h);
        const Mat2 A1 = generator(pair, t + h);
        const Mat2 k1 = A0 * U;
        const Mat2 k2 = Am * (U + 0.5 * h * k1);
        const Mat2 k3 = Am * (U + 0.5 * h * k2);
        const Mat2 k4 = A1 * (U + h * k3);
        U += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        A0 = A1;
        r.t.push_back((i + 1) * h);
        r.U.push_back(U);
    }
    r.trace_final = U.trace();
    r.angle_lift = angle_lift(r, Eigen::Vector2d(1.0, 0.0));
    return r;
}

double angle_lift(const MonodromyResult& m, const Eigen::Vector2d& v) {
    double lift = 0.0;
    double prev = std::atan2(v.y(), v.x());
    for (std::size_t i = 1; i < m.U.size(); ++i) {
        const Eigen::Vector2d w = m.U[i] * v;
        const double a = std::atan2(w.y(), w.x());
        double d = a - prev;
        d -= kTwoPi * std::round(d / kTwoPi);
        lift += d;
        prev = a;
    }
    return lift;
}

std::string to_string(OrbitKind k) {
    switch (k) {
        case OrbitKind::Elliptic: return "elliptic";
        case OrbitKind::Hyperbolic: return "hyperbolic";
        default: return "degenerate";
    }
}

Classification classify_monodromy(const MonodromyResult& m, const ClassifyOptions& opt) {
    Classification c;
    c.trace = m.trace_final;
    c.lift = m.angle_lift;
    const double tr = m.trace_final;
    const Mat2& U = m.final();
    if (std::abs(tr) < 2.0 - opt.degeneracy_tol) {
        c.kind = OrbitKind::Elliptic;
        const double th = std::acos(std::clamp(0.5 * tr, -1.0, 1.0));
        const double frac = U(1, 0) > 0 ? th / kTwoPi : 1.0 - th / kTwoPi;
        c.rotation_R = std::round(m.angle_lift / kTwoPi - frac) + frac;
        c.lift_convention = "fractional part from the eigenvalue angle and the sign of U21; integer part from the angle lift of U(t)(1,0)";
    } else if (std::abs(tr) > 2.0 + opt.degeneracy_tol) {
        c.kind = OrbitKind::Hyperbolic;
        c.positive_hyperbolic = tr > 0;
        const double disc = std::sqrt(0.25 * tr * tr - 1.0);
        const double lam = 0.5 * tr + (tr > 0 ? disc : -disc);
        Eigen::Vector2d v(U(0, 1), lam - U(0, 0));
        const Eigen::Vector2d w(lam - U(1, 1), U(1, 0));
        if (w.norm() > v.norm()) v = w;
        const double lift = angle_lift(m, v.normalized());
        const double kk = lift / kPi;
        if (std::abs(kk - std::round(kk)) >= 0.25)
            throw NumericalFailure("classify: eigenvector lift is not close to a multiple of pi");
        c.rotation_k = static_cast<int>(std::round(kk));
        c.lift = lift;
        c.lift_convention = "half-turns of the expanding eigenvector of U(2pi)";
    } else {
        c.kind = OrbitKind::Degenerate;
        c.lift_convention = "none";
    }
    return c;
}

Classification classify(const PeriodicPair& pair, const ClassifyOptions& opt) {
    return classify_monodromy(monodromy(pair, opt.steps), opt);
}

NEllipticResult check_n_elliptic_R(double R, int n, double tol) {
    if (n <= 0) throw InvalidInput("check_n_elliptic: n must be positive");
    NEllipticResult r;
    for (int k = 1; k <= n; ++k) {
        const double x = k * R;
        if (std::abs(x - std::round(x)) < tol) {
            r.ok = false;
            r.witness = k;
            return r;
        }
    }
    return r;
}

NEllipticResult check_n_elliptic(const PeriodicPair& pair, int n, double tol) {
    const MonodromyResult m = monodromy(pair);
    const Classification c = classify_monodromy(m);
    if (c.kind == OrbitKind::Elliptic) return check_n_elliptic_R(c.rotation_R, n, tol);
    // U(2pi) = +-I is a rotation by a multiple of pi; its rotation number is a half-integer
    const double s = m.trace_final > 0 ? 1.0 : -1.0;
    if (c.kind == OrbitKind::Degenerate && (m.final() - s * Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-6)
        return check_n_elliptic_R(0.5 * std::round(m.angle_lift / kPi), n, tol);
    throw InvalidInput("check_n_elliptic: pair is not elliptic");
}

double SpectrumResult::min_abs() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : eigenvalues) m = std::min(m, std::abs(v));
    return m;
}

Eigen::MatrixXd L_matrix(const PeriodicPair& pair, int q, int n) {
    if (q <= 0) throw InvalidInput("spectrum: q must be positive");
    if (n < 1) throw InvalidInput("spectrum: n_modes must be positive");
    const int dim = 2 * (2 * n + 1);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    auto idx = [n](int m) { return 2 * (m + n); };
    const int b = pair.band();
    for (int m = -n; m <= n; ++m) {
        const int s = idx(m);
        M(s, s) += -static_cast<double>(m) / (2.0 * q);
        M(s + 1, s + 1) += -static_cast<double>(m) / (2.0 * q);
        for (int j = -b; j <= b; ++j) {
            const cplx a = pair.nu_coeff(j);
            if (a != 0.0) {
                const int mt = m + j * q;
                if (std::abs(mt) <= n) {
                    const int r = idx(mt);
                    M(r, s) += a.real();
                    M(r, s + 1) += -a.imag();
                    M(r + 1, s) += a.imag();
                    M(r + 1, s + 1) += a.real();
                }
            }
            const cplx c = pair.mu_coeff(j);
            if (c != 0.0) {
                const int mt = j * q - m;
                if (std::abs(mt) <= n) {
                    const int r = idx(mt);
                    M(r, s) += c.real();
                    M(r, s + 1) += c.imag();
                    M(r + 1, s) += c.imag();
                    M(r + 1, s + 1) += -c.real();
                }
            }
        }
    }
    return 0.5 * (M + M.transpose());
}

int primitive_period(const std::vector<cplx>& coeffs, int q, double rel_tol) {
    const int n = (static_cast<int>(coeffs.size()) - 1) / 2;
    double mx = 0.0;
    for (const auto& c : coeffs) mx = std::max(mx, std::abs(c));
    for (int d = 1; d <= q; ++d) {
        if (q % d != 0) continue;
        bool ok = true;
        for (int m = -n; m <= n && ok; ++m)
            if (std::abs(coeffs[m + n]) > rel_tol * mx && (static_cast<long>(m) * d) % q != 0) ok = false;
        if (ok) return d;
    }
    return q;
}

SpectrumResult spectrum(const PeriodicPair& pair, int q, int n_modes) {
    if (q <= 0) throw InvalidInput("spectrum: q must be positive");
    if (n_modes < 8) throw InvalidInput("spectrum: n_modes must be at least 8");
    SpectrumResult r;
    r.q = q;
    r.n_modes = n_modes;
    if (pair.band() * q > n_modes / 2)
        r.warnings.push_back("n_modes too small to resolve the Fourier content of the pair");
    const Eigen::MatrixXd M = L_matrix(pair, q, n_modes);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw NumericalFailure("spectrum: eigen-decomposition failed");
    const int dim = static_cast<int>(M.rows());
    for (int i = 0; i < dim; ++i) {
        r.eigenvalues.push_back(es.eigenvalues()(i));
        std::vector<cplx> c(2 * n_modes + 1);
        for (int m = 0; m < 2 * n_modes + 1; ++m)
            c[m] = cplx(es.eigenvectors()(2 * m, i), es.eigenvectors()(2 * m + 1, i));
        r.primitive_period.push_back(primitive_period(c, q));
        r.eigenvectors.push_back(std::move(c));
    }
    return r;
}

OperatorFamily OperatorFamily::uniform(std::function<Eigen::MatrixXd(double)> f, int samples) {
    if (samples < 2) throw InvalidInput("OperatorFamily: need at least two grid points");
    OperatorFamily fam;
    fam.at = std::move(f);
    for (int i = 0; i < samples; ++i) fam.grid.push_back(static_cast<double>(i) / (samples - 1));
    return fam;
}

OperatorFamily OperatorFamily::from_pairs(std::function<PeriodicPair(double)> path, int q, int n_modes,
                                          int samples) {
    return uniform([path = std::move(path), q, n_modes](double tau) { return L_matrix(path(tau), q, n_modes); },
                   samples);
}

OperatorFamily OperatorFamily::reversed() const {
    OperatorFamily r;
    r.at = [f = at](double tau) { return f(1.0 - tau); };
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) r.grid.push_back(1.0 - *it);
    return r;
}

OperatorFamily OperatorFamily::concatenate(const OperatorFamily& a, const OperatorFamily& b) {
    OperatorFamily r;
    r.at = [fa = a.at, fb = b.at](double tau) { return tau <= 0.5 ? fa(2 * tau) : fb(2 * tau - 1); };
    for (double g : a.grid) r.grid.push_back(0.5 * g);
    for (double g : b.grid)
        if (g > 0) r.grid.push_back(0.5 + 0.5 * g);
    return r;
}

namespace {

class FlowTracker {
public:
    FlowTracker(const OperatorFamily& f, const SpectralFlowOptions& o) : fam_(f), opt_(o) {}

    const Eigen::VectorXd& eig(double tau) {
        auto it = cache_.find(tau);
        if (it != cache_.end()) return it->second;
        if (++evals_ > opt_.refine_budget + static_cast<int>(fam_.grid.size()))
            throw NumericalFailure("spectral_flow: refinement budget exhausted");
        const Eigen::MatrixXd M = fam_.at(tau);
        check_symmetric(M);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        return cache_.emplace(tau, es.eigenvalues()).first->second;
    }

    int nneg(double tau) {
        const auto& e = eig(tau);
        return static_cast<int>((e.array() < 0.0).count());
    }

    double min_abs(double tau) { return eig(tau).cwiseAbs().minCoeff(); }

    void interval(double a, double b, SpectralFlowResult& out, int depth = 0) {
        const int na = nneg(a), nb = nneg(b);
        const int delta = na - nb;
        const double width = b - a;
        const double lim = std::max(opt_.min_width, 1e-10);
        if (delta == 0) {
            // possible pair of crossings hidden inside a sampled interval
            const bool near = min_abs(a) < 10 * opt_.tol || min_abs(b) < 10 * opt_.tol;
            if (!near || width < 1e-6 || depth > 30) return;
            const double m = 0.5 * (a + b);
            interval(a, m, out, depth + 1);
            interval(m, b, out, depth + 1);
            return;
        }
        if (width > lim) {
            const double m = 0.5 * (a + b);
            if (min_abs(m) == 0.0) {
                // land exactly on a crossing: nudge the split point
                const double m2 = m + 0.25 * width * 1e-3;
                interval(a, m2, out, depth + 1);
                interval(m2, b, out, depth + 1);
                return;
            }
            interval(a, m, out, depth + 1);
            interval(m, b, out, depth + 1);
            return;
        }
        // isolated crossing point of multiplicity |delta|
        const double tau = 0.5 * (a + b);
        const int s = crossing_sign(tau, std::abs(delta));
        if (s == 0 || s != (delta > 0 ? 1 : -1))
            throw NumericalFailure("spectral_flow: crossing derivative inconsistent with the eigenvalue count");
        out.crossings.push_back({tau, s, std::abs(delta)});
        out.flow += s;
        out.eigenvalue_count += delta;
    }

private:
    int crossing_sign(double tau, int mult) {
        const double h = 1e-6;
        const double lo = std::max(0.0, tau - h), hi = std::min(1.0, tau + h);
        const Eigen::MatrixXd dA = (fam_.at(hi) - fam_.at(lo)) / (hi - lo);
        evals_ += 3;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fam_.at(tau));
        const auto& ev = es.eigenvalues();
        std::vector<int> order(ev.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(ev(i)) < std::abs(ev(j)); });
        int sgn = 0;
        for (int k = 0; k < mult; ++k) {
            const Eigen::VectorXd v = es.eigenvectors().col(order[k]);
            const double d = v.dot(dA * v);
            const int sk = d > 0 ? 1 : (d < 0 ? -1 : 0);
            if (k == 0) sgn = sk;
            else if (sk != sgn) return 0;
        }
        return sgn;
    }

    void check_symmetric(const Eigen::MatrixXd& M) const {
        if (M.rows() != M.cols()) throw InvalidInput("spectral_flow: matrix is not square");
        const double n = std::max(1.0, M.norm());
        if ((M - M.transpose()).norm() > 1e-12 * n) throw InvalidInput("spectral_flow: matrix is not symmetric");
    }

    const OperatorFamily& fam_;
    SpectralFlowOptions opt_;
    std::map<double, Eigen::VectorXd> cache_;
    int evals_ = 0;
};

}  // namespace

SpectralFlowResult spectral_flow_detail(const OperatorFamily& family, const SpectralFlowOptions& opt) {
    if (family.grid.size() < 2 || !family.at) throw InvalidInput("spectral_flow: empty family");
    for (std::size_t i = 1; i < family.grid.size(); ++i)
        if (!(family.grid[i] > family.grid[i - 1])) throw InvalidInput("spectral_flow: grid must increase");
    FlowTracker tr(family, opt);
    if (tr.min_abs(family.grid.front()) <= opt.tol || tr.min_abs(family.grid.back()) <= opt.tol)
        throw InvalidInput("spectral_flow: endpoint operator is singular");
    SpectralFlowResult out;
    for (std::size_t i = 1; i < family.grid.size(); ++i) tr.interval(family.grid[i - 1], family.grid[i], out);
    return out;
}

int spectral_flow(const OperatorFamily& family, const SpectralFlowOptions& opt) {
    return spectral_flow_detail(family, opt).flow;
}

HomotopyReport verify_homotopy(const std::vector<PeriodicPair>& path, const Classification& expect,
                               const HomotopyOptions& opt) {
    if (path.size() < 2) throw InvalidInput("verify_homotopy: path needs at least two entries");
    HomotopyReport rep;
    rep.pass = true;
    auto fail = [&](std::size_t i, const std::string& why) {
        if (!rep.first_failure) {
            rep.first_failure = i;
            rep.reason = why;
        }
        rep.pass = false;
    };
    const double expect_frac = expect.rotation_R - std::floor(expect.rotation_R);
    for (std::size_t i = 0; i < path.size(); ++i) {
        HomotopyEntry e;
        e.index = i;
        e.cls = classify(path[i], opt.classify);
        e.ok = true;
        if (e.cls.kind == OrbitKind::Degenerate) {
            e.ok = false;
            fail(i, "degenerate entry at index " + std::to_string(i));
        } else if (e.cls.kind != expect.kind) {
            e.ok = false;
            fail(i, "kind changes at index " + std::to_string(i));
        } else if (e.cls.kind == OrbitKind::Elliptic) {
            const double f = e.cls.rotation_R - std::floor(e.cls.rotation_R);
            double d = std::abs(f - expect_frac);
            d = std::min(d, 1.0 - d);
            if (d > opt.rotation_tol) {
                e.ok = false;
                fail(i, "rotation number mod 1 drifts at index " + std::to_string(i));
            }
        } else if (e.cls.rotation_k != expect.rotation_k) {
            e.ok = false;
            fail(i, "rotation number k changes at index " + std::to_string(i));
        }
        rep.entries.push_back(e);
    }
    return rep;
}

std::vector<PeriodicPair> linear_path(const PeriodicPair& from, const PeriodicPair& to, int steps) {
    if (steps < 2) throw InvalidInput("linear_path: need at least two entries");
    std::vector<PeriodicPair> p;
    for (int i = 0; i < steps; ++i) p.push_back(from.lerp(to, static_cast<double>(i) / (steps - 1)));
    return p;
}

double hyperbolic_canonical_trace(int k, double eps) {
    return (k % 2 == 0 ? 2.0 : -2.0) * std::cosh(4 * kPi * eps);
}

PeriodicPair canonical_target(const PeriodicPair& pair, const ClassifyOptions& opt) {
    const Classification c = classify(pair, opt);
    if (c.kind == OrbitKind::Elliptic) return PeriodicPair::elliptic_canonical(c.rotation_R, pair.size());
    if (c.kind == OrbitKind::Hyperbolic) {
        const double eps = std::acosh(0.5 * std::abs(c.trace)) / (4 * kPi);
        return PeriodicPair::hyperbolic_canonical(c.rotation_k, eps, pair.size());
    }
    throw InvalidInput("canonical_target: pair is degenerate");
}

}  // namespace echkit
