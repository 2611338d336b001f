#include "echkit/approx_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "echkit/fourier.hpp"

namespace echkit {

// ---------------------------------------------------------------------------
// cutoff and tau

namespace {

constexpr double kBumpLo = 5.0 / 16.0, kBumpHi = 7.0 / 16.0;

double psi(double y) { return y > 0 ? std::exp(-1.0 / y) : 0.0; }

}  // namespace

double bump(double x) {
    if (x < 0) throw InvalidInput("bump: negative argument");
    const double y = (x - kBumpLo) / (kBumpHi - kBumpLo);
    if (y <= 0) return 1.0;
    if (y >= 1) return 0.0;
    const double a = psi(1 - y), b = psi(y);
    return a / (a + b);
}

double bump_derivative(double x) {
    if (x < 0) throw InvalidInput("bump: negative argument");
    const double y = (x - kBumpLo) / (kBumpHi - kBumpLo);
    if (y <= 0 || y >= 1) return 0.0;
    const double a = psi(1 - y), b = psi(y);
    const double da = -a / ((1 - y) * (1 - y)), db = b / (y * y);
    return (da * b - a * db) / ((a + b) * (a + b)) / (kBumpHi - kBumpLo);
}

double tau_rho(cplx z, int k, int Q, double rho) {
    if (Q < 1) throw InvalidInput("Q must be positive");
    if (!(rho > 0)) throw InvalidInput("rho must be positive");
    return (k + bump(std::abs(z) / rho)) / Q;
}

TauBounds tau_rho_bounds(int Q, double rho, int grid) {
    if (grid < 5) throw InvalidInput("grid too small");
    TauBounds b;
    const double h = 2.0 * rho / (grid - 1);
    auto tau = [&](double x, double y) { return tau_rho(cplx(x, y), 0, Q, rho); };
    for (int i = 1; i < grid - 1; ++i)
        for (int j = 1; j < grid - 1; ++j) {
            const double x = -rho + i * h, y = -rho + j * h;
            const double c = tau(x, y);
            const double tx = (tau(x + h, y) - tau(x - h, y)) / (2 * h);
            const double ty = (tau(x, y + h) - tau(x, y - h)) / (2 * h);
            const double txx = (tau(x + h, y) - 2 * c + tau(x - h, y)) / (h * h);
            const double tyy = (tau(x, y + h) - 2 * c + tau(x, y - h)) / (h * h);
            const double txy =
                (tau(x + h, y + h) - tau(x + h, y - h) - tau(x - h, y + h) + tau(x - h, y - h)) / (4 * h * h);
            b.sup_d = std::max(b.sup_d, std::hypot(tx, ty));
            const double m = 0.5 * (txx + tyy), d = std::hypot(0.5 * (txx - tyy), txy);
            b.sup_hessian = std::max(b.sup_hessian, std::max(std::abs(m + d), std::abs(m - d)));
        }
    b.c_d = b.sup_d * Q * rho;
    b.c_hessian = b.sup_hessian * Q * rho * rho;
    return b;
}

// ---------------------------------------------------------------------------
// families

PairFamily PairFamily::constant(double nu, cplx mu) {
    return {[nu](double, double) { return nu; }, [mu](double, double) { return mu; }};
}

PairFamily PairFamily::constant(const PeriodicPair& p) {
    return {[p](double, double t) { return p.nu(t); }, [p](double, double t) { return p.mu(t); }};
}

PairFamily PairFamily::interpolate(const PeriodicPair& p0, const PeriodicPair& p1) {
    return {[p0, p1](double s, double t) { return (1 - s) * p0.nu(t) + s * p1.nu(t); },
            [p0, p1](double s, double t) { return (1 - s) * p0.mu(t) + s * p1.mu(t); }};
}

PeriodicPair PairFamily::at(double tau, std::size_t n) const {
    return PeriodicPair::from_functions([&](double t) { return nu(tau, t); }, [&](double t) { return mu(tau, t); }, n);
}

// ---------------------------------------------------------------------------
// interpolated forms

FormField build_form(const PairFamily& family, int k, int Q, double rho, double ell, const FormOptions& opt) {
    if (Q < 1 || k < 0 || k >= Q) throw InvalidInput("need 0 <= k < Q");
    if (!(rho > 0) || !(ell > 0)) throw InvalidInput("rho and ell must be positive");
    if (opt.Nxy < 5 || opt.Nt < 4) throw InvalidInput("form grid too small");
    if (!family.nu || !family.mu) throw InvalidInput("family is empty");
    FormField f;
    f.ell = ell;
    f.k = k;
    f.Q = Q;
    f.rho = rho;
    f.D = opt.disk_radius > 0 ? opt.disk_radius : 1.25 * rho;
    f.Nxy = opt.Nxy;
    f.Nt = opt.Nt;
    const std::size_t n = static_cast<std::size_t>(f.Nt) * f.Nxy * f.Nxy;
    for (auto* v : {&f.at, &f.ax, &f.ay, &f.Fxy, &f.Ftx, &f.Fty, &f.model_vt, &f.model_vx, &f.model_vy, &f.tau})
        v->assign(n, 0.0);
    const double c = ell / kTwoPi;
    const double dtau = 1e-6;
    const double dT = 1e-3;
    for (int j = 0; j < f.Nt; ++j) {
        const double t = f.t(j);
        for (int iy = 0; iy < f.Nxy; ++iy)
            for (int ix = 0; ix < f.Nxy; ++ix) {
                const double x = f.x(ix), y = f.x(iy);
                const cplx z(x, y);
                const double r = std::abs(z);
                const std::size_t p = f.index(j, ix, iy);
                const double chi = bump(r / rho), dchi = bump_derivative(r / rho);
                const double tau = (k + chi) / Q;
                const double nu = family.nu(tau, t);
                const cplx mu = family.mu(tau, t);
                const double nu_t = (family.nu(tau + dtau, t) - family.nu(tau - dtau, t)) / (2 * dtau);
                const cplx mu_t = (family.mu(tau + dtau, t) - family.mu(tau - dtau, t)) / (2 * dtau);
                const double q = -2 * nu * r * r - 2 * (std::conj(mu) * z * z).real();
                const double q_tau = -2 * nu_t * r * r - 2 * (std::conj(mu_t) * z * z).real();
                const double tau_r = dchi / (Q * rho);
                const double tau_x = r > 0 ? tau_r * x / r : 0.0, tau_y = r > 0 ? tau_r * y / r : 0.0;
                const double Px = -4 * nu * x - 4 * (std::conj(mu) * z).real() + tau_x * q_tau;
                const double Py = -4 * nu * y + 4 * (std::conj(mu) * z).imag() + tau_y * q_tau;
                f.tau[p] = tau;
                f.at[p] = c * (1 + q);
                f.ax[p] = -c * y;
                f.ay[p] = c * x;
                f.Fxy[p] = 2 * c;
                f.Ftx[p] = -c * Px;
                f.Fty[p] = -c * Py;
                const cplx w = 2.0 * cplx(0, 1) * (nu * z + mu * std::conj(z));
                f.model_vt[p] = 1.0 / c;
                f.model_vx[p] = w.real() / c;
                f.model_vy[p] = w.imag() / c;
                if (opt.tail) {
                    const double g = 1 - chi;
                    const double gx = r > 0 ? -dchi / rho * x / r : 0.0, gy = r > 0 ? -dchi / rho * y / r : 0.0;
                    const auto T = opt.tail(t, x, y);
                    auto d4 = [&](int axis) {
                        auto at = [&](double s) {
                            return axis == 0 ? opt.tail(t + s, x, y) : axis == 1 ? opt.tail(t, x + s, y) : opt.tail(t, x, y + s);
                        };
                        const auto a2 = at(2 * dT), a1 = at(dT), m1 = at(-dT), m2 = at(-2 * dT);
                        std::array<double, 3> d{};
                        for (int cpt = 0; cpt < 3; ++cpt) d[cpt] = (-a2[cpt] + 8 * a1[cpt] - 8 * m1[cpt] + m2[cpt]) / (12 * dT);
                        return d;
                    };
                    const auto Tt = d4(0), Tx = d4(1), Ty = d4(2);
                    for (int cpt = 0; cpt < 3; ++cpt)
                        if (!std::isfinite(T[cpt])) throw InvalidInput("tail not finite on the grid");
                    f.at[p] += c * g * T[0];
                    f.ax[p] += c * g * T[1];
                    f.ay[p] += c * g * T[2];
                    // d((1 - chi) T) = (1 - chi) dT + d(1 - chi) ^ T
                    f.Fxy[p] += c * (gx * T[2] + g * Tx[2] - gy * T[1] - g * Ty[1]);
                    f.Ftx[p] += c * (g * Tt[1] - gx * T[0] - g * Tx[0]);
                    f.Fty[p] += c * (g * Tt[2] - gy * T[0] - g * Ty[0]);
                }
            }
    }
    return f;
}

double exterior_derivative_error(const FormField& f) {
    const double h = f.h();
    // eighth order central differences
    static constexpr double w[4] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    auto dx = [&](const std::vector<double>& a, int j, int ix, int iy) {
        double s = 0;
        for (int k = 1; k <= 4; ++k) s += w[k - 1] * (a[f.index(j, ix + k, iy)] - a[f.index(j, ix - k, iy)]);
        return s / h;
    };
    auto dy = [&](const std::vector<double>& a, int j, int ix, int iy) {
        double s = 0;
        for (int k = 1; k <= 4; ++k) s += w[k - 1] * (a[f.index(j, ix, iy + k)] - a[f.index(j, ix, iy - k)]);
        return s / h;
    };
    double err = 0;
    std::vector<cplx> col(f.Nt);
    for (int iy = 4; iy < f.Nxy - 4; ++iy)
        for (int ix = 4; ix < f.Nxy - 4; ++ix) {
            if (!f.inside(ix, iy)) continue;
            std::vector<double> axt(f.Nt), ayt(f.Nt);
            for (const auto* comp : {&f.ax, &f.ay}) {
                for (int j = 0; j < f.Nt; ++j) col[j] = (*comp)[f.index(j, ix, iy)];
                const auto d = spectral_derivative(col, kTwoPi);
                for (int j = 0; j < f.Nt; ++j) (comp == &f.ax ? axt : ayt)[j] = d[j].real();
            }
            for (int j = 0; j < f.Nt; ++j) {
                const std::size_t p = f.index(j, ix, iy);
                const double Fxy = dx(f.ay, j, ix, iy) - dy(f.ax, j, ix, iy);
                const double Ftx = axt[j] - dx(f.at, j, ix, iy);
                const double Fty = ayt[j] - dy(f.at, j, ix, iy);
                err = std::max({err, std::abs(Fxy - f.Fxy[p]), std::abs(Ftx - f.Ftx[p]), std::abs(Fty - f.Fty[p])});
            }
        }
    return err;
}

ContactReport contact_check(const FormField& f) {
    ContactReport rep;
    rep.min_coefficient = std::numeric_limits<double>::infinity();
    rep.max_coefficient = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < f.Nt; ++j)
        for (int iy = 0; iy < f.Nxy; ++iy)
            for (int ix = 0; ix < f.Nxy; ++ix) {
                if (!f.inside(ix, iy)) continue;
                const double v = f.volume_coefficient(f.index(j, ix, iy));
                if (v < rep.min_coefficient) {
                    rep.min_coefficient = v;
                    rep.argmin = {f.t(j), f.x(ix), f.x(iy)};
                }
                rep.max_coefficient = std::max(rep.max_coefficient, v);
            }
    rep.contact = rep.min_coefficient > 0;
    return rep;
}

ReebReport reeb_check(const FormField& f) {
    if (!contact_check(f).contact) throw InvalidInput("reeb_check needs a contact form");
    ReebReport rep;
    for (int j = 0; j < f.Nt; ++j)
        for (int iy = 0; iy < f.Nxy; ++iy)
            for (int ix = 0; ix < f.Nxy; ++ix) {
                if (!f.inside(ix, iy)) continue;
                const std::size_t p = f.index(j, ix, iy);
                // a(v) = 1 and i_v da = 0: v is the kernel direction (Fxy, -Fty, Ftx) of da,
                // normalized by a, whose pairing with it is the volume coefficient
                const double vol = f.volume_coefficient(p);
                if (std::abs(vol) < 1e-14) throw NumericalFailure("contact degeneracy in reeb_check");
                const double vt = f.Fxy[p] / vol, vx = -f.Fty[p] / vol, vy = f.Ftx[p] / vol;
                const double diff = std::sqrt(std::pow(vt - f.model_vt[p], 2) + std::pow(vx - f.model_vx[p], 2) +
                                              std::pow(vy - f.model_vy[p], 2));
                const double r = std::hypot(f.x(ix), f.x(iy));
                if (r == 0.0) rep.diff_at_origin = std::max(rep.diff_at_origin, diff);
                if (r < f.rho / 8 || r > f.rho) continue;
                ++rep.points;
                rep.sup_diff = std::max(rep.sup_diff, diff);
                rep.sup_diff_over_z = std::max(rep.sup_diff_over_z, diff / r);
            }
    rep.sup_ratio = rep.sup_diff_over_z * f.Q;
    return rep;
}

// ---------------------------------------------------------------------------
// eigenvalue gaps and the forced-zero argument

EigenGapReport eigen_gap(const PairFamily& family, int tau_grid, int q_max, int n_modes) {
    if (q_max < 1) throw InvalidInput("q_max must be at least 1");
    if (tau_grid < 1) throw InvalidInput("tau_grid must be positive");
    EigenGapReport rep;
    rep.lambda0 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tau_grid; ++i) {
        const double tau = tau_grid == 1 ? 0.0 : static_cast<double>(i) / (tau_grid - 1);
        const auto pair = family.at(tau);
        for (int q = 1; q <= q_max; ++q) {
            const double g = spectrum(pair, q, n_modes).min_abs();
            if (g < rep.lambda0) {
                rep.lambda0 = g;
                rep.tau = tau;
                rep.q = q;
            }
        }
    }
    rep.degenerate = rep.lambda0 < 1e-9;
    return rep;
}

Eigen::MatrixXd L_samples(const PeriodicPair& pair, int q, int Nt) {
    if (q < 1 || Nt < 4) throw InvalidInput("L_samples: need q >= 1 and Nt >= 4");
    Eigen::MatrixXd Dm(Nt, Nt);
    std::vector<cplx> e(Nt, 0.0);
    for (int k = 0; k < Nt; ++k) {
        std::fill(e.begin(), e.end(), cplx(0.0));
        e[k] = 1.0;
        const auto d = spectral_derivative(e, kTwoPi * q);
        for (int j = 0; j < Nt; ++j) Dm(j, k) = d[j].real();
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * Nt, 2 * Nt);
    for (int j = 0; j < Nt; ++j) {
        const double t = kTwoPi * q * j / Nt;
        const double nu = pair.nu(t);
        const cplx mu = pair.mu(t);
        for (int k = 0; k < Nt; ++k) {
            M(2 * j, 2 * k + 1) += -0.5 * Dm(j, k);
            M(2 * j + 1, 2 * k) += 0.5 * Dm(j, k);
        }
        M(2 * j, 2 * j) += nu + mu.real();
        M(2 * j, 2 * j + 1) += mu.imag();
        M(2 * j + 1, 2 * j) += mu.imag();
        M(2 * j + 1, 2 * j + 1) += nu - mu.real();
    }
    return M;
}

ForcedZeroReport forced_zero_check(double lambda0, double c0, int Q, double ball_radius, const PeriodicPair& pair,
                                   int q, int Nt, unsigned seed) {
    if (Q < 1 || c0 < 0 || !(ball_radius >= 0)) throw InvalidInput("forced_zero_check: bad parameters");
    ForcedZeroReport rep;
    rep.arithmetic = c0 == 0 || 1.0 / Q <= lambda0 / (100.0 * c0);
    if (Nt % 2 == 0) ++Nt;
    const Eigen::MatrixXd L = L_samples(pair, q, Nt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    const double gap = es.eigenvalues().cwiseAbs().minCoeff();
    if (gap < 1e-12) throw NumericalFailure("L is not invertible on the discretization");
    rep.inverse_norm = 1.0 / gap;
    rep.lipschitz_bound = rep.inverse_norm * (c0 / Q + 2 * c0 * ball_radius);
    rep.contraction = rep.lipschitz_bound < 1.0;
    const auto lu = L.partialPivLu();
    auto tau = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd out(z.size());
        for (int j = 0; j < Nt; ++j) {
            const cplx w(z[2 * j], z[2 * j + 1]);
            const cplx v = c0 * (w / static_cast<double>(Q) + std::abs(w) * w);
            out[2 * j] = v.real();
            out[2 * j + 1] = v.imag();
        }
        return out;
    };
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    auto random_point = [&]() {
        Eigen::VectorXd z(2 * Nt);
        for (int j = 0; j < Nt; ++j) {
            const cplx w = std::polar(ball_radius * std::sqrt(u(rng)), kTwoPi * u(rng));
            z[2 * j] = w.real();
            z[2 * j + 1] = w.imag();
        }
        return z;
    };
    for (int s = 0; s < 200 && ball_radius > 0; ++s) {
        const auto a = random_point(), b = random_point();
        const double d = (a - b).norm();
        if (d > 0) rep.lipschitz_measured = std::max(rep.lipschitz_measured, (lu.solve(tau(a)) - lu.solve(tau(b))).norm() / d);
    }
    Eigen::VectorXd z = random_point();
    for (int it = 0; it < 200; ++it) z = -lu.solve(tau(z));
    for (int j = 0; j < Nt; ++j) rep.iterate_norm = std::max(rep.iterate_norm, std::hypot(z[2 * j], z[2 * j + 1]));
    return rep;
}

// ---------------------------------------------------------------------------
// cylinder fields and the star norm

CylinderField CylinderField::on(double S, int Ns, int Nt, int q) {
    if (!(S > 0) || Ns < 2 || Nt < 1 || q < 1) throw InvalidInput("bad cylinder grid");
    CylinderField f;
    f.s0 = -S;
    f.hs = 2 * S / (Ns - 1);
    f.Ns = Ns;
    f.Nt = Nt;
    f.q = q;
    f.values.assign(static_cast<std::size_t>(Ns) * Nt, 0.0);
    return f;
}

double star_norm(const CylinderField& f) {
    if (f.values.size() != static_cast<std::size_t>(f.Ns) * f.Nt) throw InvalidInput("cylinder field size mismatch");
    const double hs = f.hs, ht = f.ht();
    if (hs > 0.125 + 1e-12 || ht > 0.125 + 1e-12) throw InvalidInput("star_norm: resolution coarser than 1/8");
    std::vector<double> w(f.values.size());
    for (int i = 0; i < f.Ns; ++i) {
        const double ws = (i == 0 || i == f.Ns - 1) ? 0.5 : 1.0;
        for (int j = 0; j < f.Nt; ++j) w[static_cast<std::size_t>(i) * f.Nt + j] = ws * std::norm(f.at(i, j)) * hs * ht;
    }
    double l2 = 0;
    for (double v : w) l2 += v;
    double ball = 0;
    const int sub = 8;
    for (double x = 1.0; x >= std::max(hs, ht) * (1 - 1e-12); x /= 2) {
        // fraction of each cell inside the disk of radius x about a grid point
        const int ri = static_cast<int>(std::ceil(x / hs)) + 1, rj = static_cast<int>(std::ceil(x / ht)) + 1;
        struct Off {
            int di, dj;
            double frac;
        };
        std::vector<Off> mask;
        for (int di = -ri; di <= ri; ++di)
            for (int dj = -rj; dj <= rj; ++dj) {
                int in = 0;
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b) {
                        const double ds = (di + (a + 0.5) / sub - 0.5) * hs, dt = (dj + (b + 0.5) / sub - 0.5) * ht;
                        if (ds * ds + dt * dt <= x * x) ++in;
                    }
                if (in > 0) mask.push_back({di, dj, static_cast<double>(in) / (sub * sub)});
            }
        const double weight = std::pow(x, -0.01);
        for (int i = 0; i < f.Ns; ++i)
            for (int j = 0; j < f.Nt; ++j) {
                double s = 0;
                for (const auto& m : mask) {
                    const int ii = i + m.di;
                    if (ii < 0 || ii >= f.Ns) continue;
                    const int jj = ((j + m.dj) % f.Nt + f.Nt) % f.Nt;
                    s += m.frac * w[static_cast<std::size_t>(ii) * f.Nt + jj];
                }
                ball = std::max(ball, weight * s);
            }
    }
    return std::sqrt(l2 + std::pow(2.0, 0.01) * ball);
}

// ---------------------------------------------------------------------------
// cylinder operator

struct CylinderOperator::Factor {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

CylinderOperator::CylinderOperator(const PeriodicPair& pair, int q, double S, int Ns, int Nt, Multiplier p)
    : q_(q), Ns_(Ns), Nt_(Nt), S_(S) {
    if (q < 1 || Ns < 3 || Nt < 4 || !(S > 0)) throw InvalidInput("bad cylinder discretization");
    hs_ = 2 * S / (Ns + 1);
    const Eigen::MatrixXd L = L_samples(pair, q, Nt);
    const int b = 2 * Nt;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(Ns) * (b * b + 2 * b + 2 * b));
    for (int i = 0; i < Ns; ++i) {
        const int o = i * b;
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c)
                if (L(r, c) != 0.0) trip.emplace_back(o + r, o + c, L(r, c));
        for (int r = 0; r < b; ++r) {
            if (i + 1 < Ns) trip.emplace_back(o + r, o + b + r, 0.5 / hs_);
            if (i > 0) trip.emplace_back(o + r, o - b + r, -0.5 / hs_);
        }
        if (p) {
            const double s = -S + (i + 1) * hs_;
            for (int j = 0; j < Nt; ++j) {
                const cplx v = p(s, kTwoPi * q * j / Nt);
                trip.emplace_back(o + 2 * j, o + 2 * j, v.real());
                trip.emplace_back(o + 2 * j, o + 2 * j + 1, -v.imag());
                trip.emplace_back(o + 2 * j + 1, o + 2 * j, v.imag());
                trip.emplace_back(o + 2 * j + 1, o + 2 * j + 1, v.real());
            }
        }
    }
    D_.resize(Ns * b, Ns * b);
    D_.setFromTriplets(trip.begin(), trip.end());
    D_.makeCompressed();
    lu_ = std::make_shared<Factor>();
    lu_->lu.compute(D_);
    if (lu_->lu.info() != Eigen::Success) throw NumericalFailure("cylinder operator factorization failed");
}

CylinderField CylinderOperator::blank() const {
    CylinderField f;
    f.s0 = -S_ + hs_;
    f.hs = hs_;
    f.Ns = Ns_;
    f.Nt = Nt_;
    f.q = q_;
    f.values.assign(static_cast<std::size_t>(Ns_) * Nt_, 0.0);
    return f;
}

Eigen::VectorXd CylinderOperator::to_vector(const CylinderField& f) const {
    if (f.Ns != Ns_ || f.Nt != Nt_) throw InvalidInput("field grid does not match the operator");
    Eigen::VectorXd v(2 * f.values.size());
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        v[2 * k] = f.values[k].real();
        v[2 * k + 1] = f.values[k].imag();
    }
    return v;
}

CylinderField CylinderOperator::from_vector(const Eigen::VectorXd& v) const {
    auto f = blank();
    if (v.size() != static_cast<Eigen::Index>(2 * f.values.size())) throw InvalidInput("vector size mismatch");
    for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = {v[2 * k], v[2 * k + 1]};
    return f;
}

Eigen::VectorXd CylinderOperator::solve(const Eigen::VectorXd& v) const { return lu_->lu.solve(v); }

double CylinderOperator::smallest_singular_value(Eigen::VectorXd* vec, int steps) const {
    const Eigen::Index n = D_.rows();
    steps = std::min<int>(steps, static_cast<int>(n));
    // Lanczos on A = D^{-1} D^{-T}, whose largest eigenvalue is sigma_min^{-2}
    auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::VectorXd y = lu_->lu.transpose().solve(x);
        return lu_->lu.solve(y);
    };
    std::mt19937 rng(12345);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = g(rng);
    v.normalize();
    Eigen::MatrixXd V(n, steps);
    std::vector<double> alpha, beta;
    double theta = 0;
    Eigen::VectorXd ritz;
    for (int k = 0; k < steps; ++k) {
        V.col(k) = v;
        Eigen::VectorXd w = apply(v);
        const double a = v.dot(w);
        alpha.push_back(a);
        for (int r = 0; r < 2; ++r) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
        const double b = w.norm();
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int i = 0; i <= k; ++i) {
            T(i, i) = alpha[i];
            if (i < k) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues()[k];
        ritz = es.eigenvectors().col(k);
        if (b * std::abs(ritz[k]) < 1e-11 * theta || b < 1e-300) break;
        beta.push_back(b);
        v = w / b;
    }
    if (vec) {
        *vec = V.leftCols(ritz.size()) * ritz;
        vec->normalize();
    }
    return 1.0 / std::sqrt(theta);
}

CylinderBound cylinder_inverse_norm(const PeriodicPair& pair, int q, double S_min, double hs, int Nt) {
    if (!(hs > 0)) throw InvalidInput("hs must be positive");
    CylinderBound b;
    b.fourier_gap = spectrum(pair, q).min_abs();
    if (!(b.fourier_gap > 1e-9)) throw InvalidInput("cylinder_inverse_norm: spectral gap is zero");
    b.fourier_sigma_star = 1.0 / b.fourier_gap;
    if (Nt % 2 == 0) ++Nt;
    b.S = std::max(S_min, 6.0 / b.fourier_gap);
    b.Ns = 2 * static_cast<int>(std::ceil(b.S / hs)) - 1;
    b.Nt = Nt;
    const CylinderOperator op(pair, q, b.S, b.Ns, Nt);
    b.sigma_min = op.smallest_singular_value();
    b.sigma_star = 1.0 / b.sigma_min;
    b.relative_error = std::abs(b.sigma_star - b.fourier_sigma_star) / b.fourier_sigma_star;
    return b;
}

double ramp(double s, double R) {
    const double a = std::abs(s);
    if (a <= R) return 0.0;
    if (a >= 2 * R) return 1.0;
    return a / R - 1.0;
}

PerturbationReport perturbed_invertibility(const PeriodicPair& pair, int q, const CylinderOperator::Multiplier& p,
                                           const Support& support, double S_min, double hs, int Nt) {
    if (!(support.R > 0)) throw InvalidInput("support radius must be positive");
    const double gap = spectrum(pair, q).min_abs();
    if (!(gap > 1e-9)) throw InvalidInput("perturbed_invertibility: spectral gap is zero");
    if (Nt % 2 == 0) ++Nt;
    const double S = std::max({S_min, 6.0 / gap, 3.0 * support.R});
    const int Ns = 2 * static_cast<int>(std::ceil(S / hs)) - 1;
    const CylinderOperator base(pair, q, S, Ns, Nt);
    PerturbationReport rep;
    const double h = base.hs();
    for (int i = 0; i < Ns; ++i) {
        const double s = -S + (i + 1) * h;
        for (int j = 0; j < Nt; ++j) {
            const double v = p ? std::abs(p(s, kTwoPi * q * j / Nt)) : 0.0;
            rep.sup_p = std::max(rep.sup_p, v);
            const bool in = support.kind == Support::Kind::Everywhere ||
                            (support.kind == Support::Kind::FarOut && std::abs(s) > 2 * support.R) ||
                            (support.kind == Support::Kind::Localized && std::abs(s) < support.R);
            if (!in && v > 1e-14) throw InvalidInput("perturbation does not vanish outside its declared support");
        }
    }
    const CylinderOperator pert(pair, q, S, Ns, Nt, p);
    rep.sigma_unperturbed = base.smallest_singular_value();
    Eigen::VectorXd eta;
    rep.sigma_perturbed = pert.smallest_singular_value(&eta);
    rep.margin = rep.sup_p / rep.sigma_unperturbed + 1.0 / support.R;
    rep.pass = rep.sigma_perturbed >= (1 - rep.margin) * rep.sigma_unperturbed;
    const Eigen::VectorXd w = pert.apply(eta), w0 = base.apply(eta);
    const int b = 2 * Nt;
    for (int i = 0; i < Ns; ++i) {
        const double u = ramp(-S + (i + 1) * h, support.R);
        const double s1 = w.segment(i * b, b).squaredNorm(), s0 = w0.segment(i * b, b).squaredNorm();
        rep.lhs += s1;
        rep.rhs_outer += std::pow(u, 4) * s1;
        rep.rhs_inner += std::pow(1 - u, 4) * s0;
    }
    rep.splitting_holds = rep.lhs >= (rep.rhs_outer + rep.rhs_inner) * (1 - 1e-12);
    return rep;
}

// ---------------------------------------------------------------------------
// contraction

bool ContractionBounds::admissible() const {
    return c_C1 > 0 && c_C2 > 0 && rho > 0 && sigma > 0 && sigma < 0.25 / (c_C1 + c_C2) &&
           rho < 0.125 / (c_C1 * c_C1);
}

ContractionReport contraction_solve(const ContractionBounds& bounds,
                                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& T,
                                    const std::function<double(const Eigen::VectorXd&)>& norm,
                                    const Eigen::VectorXd& start, int budget, double tol) {
    if (!T || !norm) throw InvalidInput("contraction_solve: map and norm are required");
    ContractionReport rep;
    Eigen::VectorXd eta = start, prev, prev_T;
    bool have_prev = false;
    const double cap = 1e6 * std::max(1.0, bounds.sigma);
    for (int it = 1; it <= budget; ++it) {
        const Eigen::VectorXd te = T(eta);
        const double ne = norm(eta), nt = norm(te);
        if (ne * ne + bounds.rho > 0) rep.c1_estimate = std::max(rep.c1_estimate, nt / (ne * ne + bounds.rho));
        if (have_prev) {
            const double np = norm(prev), d = norm(eta - prev);
            if (d > 0 && np + ne > 0) rep.c2_estimate = std::max(rep.c2_estimate, norm(te - prev_T) / ((ne + np) * d));
        }
        rep.last_step = norm(te - eta);
        prev = eta;
        prev_T = te;
        have_prev = true;
        eta = te;
        rep.iterations = it;
        const double n = norm(eta);
        if (n > bounds.sigma) rep.stayed_in_ball = false;
        if (!std::isfinite(n) || n > cap) {
            rep.diverged = true;
            rep.message = "iterates left every bounded set";
            break;
        }
        if (rep.last_step < tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged && !rep.diverged) {
        rep.diverged = true;
        rep.message = "no convergence within the iteration budget";
    }
    rep.fixed_point = eta;
    rep.fixed_point_norm = norm(eta);
    rep.bounds_hold = rep.c1_estimate <= bounds.c_C1 && rep.c2_estimate <= bounds.c_C2;
    if (rep.diverged && rep.c2_estimate > bounds.c_C2)
        rep.message += "; measured Lipschitz constant " + std::to_string(rep.c2_estimate) + " exceeds c_C2";
    return rep;
}

}  // namespace echkit
