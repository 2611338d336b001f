#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "echkit/approx_forms.hpp"
#include "echkit/ech_complex.hpp"
#include "echkit/local_model.hpp"
#include "echkit/moduli.hpp"
#include "echkit/reeb_linops.hpp"
#include "echkit/vortex.hpp"

using namespace echkit;

namespace {

struct Result {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Mat2 rotation(double a) {
    Mat2 R;
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return R;
}

// Canonical hyperbolic pair: z = e^{ikt/2} w turns z' = A z into w' = -2 eps conj(w) up to the
// rotation, so U(t) = rot(kt/2) diag(e^{-2 eps t}, e^{2 eps t}).
Mat2 hyperbolic_U(int k, double eps, double t) {
    Mat2 D = Mat2::Zero();
    D(0, 0) = std::exp(-2 * eps * t);
    D(1, 1) = std::exp(2 * eps * t);
    return rotation(0.5 * k * t) * D;
}

PeriodicPair random_pair(std::mt19937& rng, double nu0, double amp) {
    std::normal_distribution<double> g(0.0, 1.0);
    const cplx a1(g(rng), g(rng)), b0(g(rng), g(rng)), b1(g(rng), g(rng)), bm(g(rng), g(rng));
    return PeriodicPair::from_functions(
        [=](double t) { return nu0 + 2 * amp * (a1 * std::exp(cplx(0, t))).real(); },
        [=](double t) { return amp * (b0 + b1 * std::exp(cplx(0, t)) + bm * std::exp(cplx(0, -t))); }, 32);
}

OrbitRecord elliptic(const std::string& id, double action, double R, int n_max, std::vector<long> h = {}) {
    OrbitRecord o;
    o.id = id;
    o.action = action;
    o.kind = OrbitKind::Elliptic;
    o.R = R;
    o.n_max = n_max;
    o.homology = std::move(h);
    return o;
}

OrbitRecord hyperbolic(const std::string& id, double action, int k, std::vector<long> h = {}) {
    OrbitRecord o;
    o.id = id;
    o.action = action;
    o.kind = OrbitKind::Hyperbolic;
    o.k = k;
    o.homology = std::move(h);
    return o;
}

// min over q <= q_max and integers m of |nu - m / (2q)|
double brute_gap(double nu, int q_max) {
    double best = 1e300;
    for (int q = 1; q <= q_max; ++q)
        for (int m = -200; m <= 200; ++m) best = std::min(best, std::abs(nu - m / (2.0 * q)));
    return best;
}

Result monodromy_exactness() {
    Result r;
    const auto t0 = Clock::now();
    double worst = 0;
    for (double R : {0.3, 0.7, 1.0 / std::sqrt(2.0)}) {
        const auto m = monodromy(PeriodicPair::elliptic_canonical(R), 4096);
        const double err = (m.final() - rotation(kTwoPi * R)).cwiseAbs().maxCoeff();
        const double terr = std::abs(m.trace_final - 2 * std::cos(kTwoPi * R));
        worst = std::max({worst, err, terr});
    }
    const double secs = seconds_since(t0);
    r.detail << "max error " << worst << ", " << secs << " s";
    r.require(worst < 1e-8, "matrix and trace error < 1e-8");
    r.require(secs < 1.0, "runtime < 1 s");
    return r;
}

Result hyperbolic_verification() {
    Result r;
    const auto t0 = Clock::now();
    double worst = 0;
    for (auto [k, eps] : {std::pair{1, 0.05}, {2, 0.05}, {3, 0.02}}) {
        const auto pair = PeriodicPair::hyperbolic_canonical(k, eps);
        const auto c = classify(pair);
        r.require(c.kind == OrbitKind::Hyperbolic, "k = " + std::to_string(k) + " classified hyperbolic");
        r.require(c.rotation_k == k, "k = " + std::to_string(k) + " rotation number");
        const double oracle = (k % 2 == 0 ? 2.0 : -2.0) * std::cosh(4 * kPi * eps);
        const double closed = hyperbolic_U(k, eps, kTwoPi).trace();
        worst = std::max({worst, std::abs(c.trace - oracle), std::abs(closed - oracle)});
        const auto m = monodromy(pair);
        worst = std::max(worst, (m.final() - hyperbolic_U(k, eps, kTwoPi)).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    r.detail << "max trace/matrix error " << worst << ", " << secs << " s";
    r.require(worst < 1e-6, "trace within 1e-6");
    r.require(secs < 1.0, "runtime < 1 s");
    return r;
}

Result spectrum_oracle() {
    Result r;
    double worst = 0;
    for (double nu : {0.15, 0.35, -0.2})
        for (int q : {1, 2, 3, 4}) {
            const int n = 24;
            const auto s = spectrum(PeriodicPair::constant(nu, 0.0), q, n);
            std::vector<double> oracle;
            for (int m = -n; m <= n; ++m) oracle.insert(oracle.end(), 2, nu - m / (2.0 * q));
            std::sort(oracle.begin(), oracle.end());
            if (s.eigenvalues.size() != oracle.size()) {
                r.require(false, "eigenvalue count");
                continue;
            }
            for (std::size_t i = 0; i < oracle.size(); ++i) worst = std::max(worst, std::abs(s.eigenvalues[i] - oracle[i]));
        }
    double min_hyp = 1e300;
    for (int k : {1, 2, 3})
        for (int q = 1; q <= 4; ++q)
            min_hyp = std::min(min_hyp, spectrum(PeriodicPair::hyperbolic_canonical(k, 0.05, 64), q, 32).min_abs());
    r.detail << "max eigenvalue error " << worst << ", hyperbolic min |lambda| " << min_hyp;
    r.require(worst < 1e-10, "mu = 0 eigenvalues within 1e-10");
    r.require(min_hyp > 0, "hyperbolic kernel trivial for q <= 4");
    return r;
}

Result spectral_flow_check() {
    Result r;
    // R = 2 nu from 0.5 to 1.5; the eigenvalue (R - 1)/2 goes from negative to positive
    const auto fam = OperatorFamily::from_pairs(
        [](double t) { return PeriodicPair::elliptic_canonical(0.5 + t, 16); }, 1, 12, 21);
    const auto d = spectral_flow_detail(fam);
    r.detail << "flow " << d.flow;
    r.require(d.flow == 1, "flow +1 (negative-to-positive crossings count +1)");
    r.require(spectral_flow(fam.reversed()) == -1, "reversed flow -1");

    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> unu(-0.9, 0.9);
    int checked = 0, failures = 0, nonzero = 0;
    while (checked < 100) {
        const auto p0 = random_pair(rng, unu(rng), 0.05), p1 = random_pair(rng, unu(rng), 0.05),
                   p2 = random_pair(rng, unu(rng), 0.05);
        auto seg = [](const PeriodicPair& a, const PeriodicPair& b) {
            return OperatorFamily::from_pairs([a, b](double t) { return a.lerp(b, t); }, 1, 6, 41);
        };
        try {
            const auto f1 = seg(p0, p1), f2 = seg(p1, p2);
            const int s1 = spectral_flow(f1), s2 = spectral_flow(f2);
            const int s12 = spectral_flow(OperatorFamily::concatenate(f1, f2));
            if (s12 != s1 + s2) ++failures;
            if (s1 != 0 || s2 != 0) ++nonzero;
        } catch (const InvalidInput&) {
            continue;  // singular endpoint: draw again
        }
        ++checked;
    }
    r.detail << ", additivity failures " << failures << "/100 (" << nonzero << " with nonzero flow)";
    r.require(failures == 0, "concatenation additivity");
    return r;
}

Result ech_index_check() {
    Result r;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> coin(0, 1), small(-5, 5), mult(1, 4);
    std::uniform_real_distribution<double> ur(-2.0, 2.0);
    std::vector<OrbitRecord> recs;
    for (int i = 0; i < 4; ++i)
        recs.push_back(elliptic("e" + std::to_string(i), 1.0 + i, ur(rng) + 1e-3 * std::sqrt(2.0 + i), 6));
    for (int i = 0; i < 3; ++i) recs.push_back(hyperbolic("h" + std::to_string(i), 2.0 + i, small(rng)));
    const OrbitDb db(recs);
    auto random_set = [&]() {
        OrbitSet s;
        for (const auto& o : db.orbits()) {
            if (!coin(rng)) continue;
            s.pairs.emplace_back(o.id, o.kind == OrbitKind::Hyperbolic ? 1 : mult(rng));
        }
        s.normalize();
        return s;
    };
    int sum_failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const OrbitSet a = random_set(), b = random_set(), c = random_set();
        const SurfaceData z12{small(rng), small(rng)}, z23{small(rng), small(rng)};
        if (ech_index(db, a, b, z12) + ech_index(db, b, c, z23) != ech_index(db, a, c, z12 + z23)) ++sum_failures;
    }
    r.detail << "sum rule failures " << sum_failures << "/1000";
    r.require(sum_failures == 0, "sum rule");

    const OrbitDb worked({elliptic("e", 1.0, 1 / std::sqrt(2.0), 5)});
    const long I = ech_index(worked, {}, OrbitSet::parse("e:3"), SurfaceData{2, 1});
    r.detail << ", worked example I = " << I;
    r.require(I == 10, "worked example I = 10");

    std::mt19937 rng2(5);
    std::uniform_real_distribution<double> act(0.6, 2.5), rot(0.05, 0.95);
    std::uniform_int_distribution<int> hc(-1, 1), kind(0, 2);
    int dbs = 0, mismatches = 0;
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<OrbitRecord> rs;
        const int n = 5;
        for (int i = 0; i < n; ++i) {
            const std::string id = "o" + std::to_string(i);
            const double a = act(rng2);
            if (kind(rng2) == 0) rs.push_back(hyperbolic(id, a, hc(rng2), {hc(rng2)}));
            else rs.push_back(elliptic(id, a, rot(rng2) + 1e-7 * std::sqrt(2.0), 8, {hc(rng2)}));
        }
        const OrbitDb d(rs);
        const double L = 4.0 + 0.123456789 * trial / 40.0;
        std::optional<std::vector<long>> cls;
        if (trial % 2) cls = std::vector<long>{trial % 3 - 1};
        std::vector<OrbitSet> got;
        try {
            got = enumerate_generators(d, L, cls);
        } catch (const InvalidInput&) {
            continue;  // an orbit set with action equal to L
        }
        std::set<std::string> brute;
        std::vector<int> m(n, 0);
        for (;;) {
            double A = 0;
            long h = 0;
            bool ok = true;
            for (int i = 0; i < n; ++i) {
                A += m[i] * rs[i].action;
                h += m[i] * rs[i].homology[0];
                if (rs[i].kind == OrbitKind::Hyperbolic && m[i] > 1) ok = false;
            }
            if (ok && A < L && (!cls || h == (*cls)[0])) {
                OrbitSet s;
                for (int i = 0; i < n; ++i)
                    if (m[i]) s.pairs.emplace_back(rs[i].id, m[i]);
                brute.insert(s.str());
            }
            int i = 0;
            while (i < n && ++m[i] > 8) m[i++] = 0;
            if (i == n) break;
        }
        std::set<std::string> mine;
        for (const auto& s : got) mine.insert(s.str());
        if (mine != brute || mine.size() != got.size()) ++mismatches;
        ++dbs;
    }
    r.detail << ", enumeration mismatches " << mismatches << "/" << dbs << " databases";
    r.require(mismatches == 0 && dbs > 0, "enumerate_generators matches brute force");
    return r;
}

Result vortex_quantization() {
    Result r;
    double worst_solve = 0;
    auto solve = [&](const std::vector<cplx>& zeros) {
        const auto t0 = Clock::now();
        auto s = solve_planar(VortexConfig{zeros});
        worst_solve = std::max(worst_solve, seconds_since(t0));
        return s;
    };
    const auto s1 = solve({0.0});
    const auto s2 = solve({0.5, -0.5});
    r.detail << "flux n=1 " << s1.flux << ", n=2 " << s2.flux;
    r.require(s1.flux >= 0.98 && s1.flux <= 1.005, "n = 1 flux");
    r.require(s2.flux >= 1.96 && s2.flux <= 2.01, "n = 2 flux");

    double worst_res = 0, worst_moment = 0;
    const std::vector<std::vector<cplx>> configs{
        {0.0}, {0.5, -0.5}, {1.0, cplx(0, 1)}, {cplx(0.6, 0.3)}, {cplx(-0.4, 0.7), cplx(0.2, -0.5), cplx(0.9, 0.1)}};
    for (const auto& zeros : configs) {
        const auto s = zeros == configs[0] ? s1 : zeros == configs[1] ? s2 : solve(zeros);
        const auto res = check_residuals(s);
        worst_res = std::max({worst_res, res.curvature_sup, res.dbar_sup});
        const auto m = moments(s, 3);
        const auto ps = power_sums(zeros, 3);
        for (int q = 0; q < 3; ++q) {
            double scale = 0;
            for (const auto& z : zeros) scale += std::pow(std::abs(z), q + 1);
            if (scale == 0) scale = 1;
            worst_moment = std::max(worst_moment, std::abs(m.moments[q] - ps[q]) / scale);
        }
    }
    r.detail << ", max residual " << worst_res << ", max relative moment error " << worst_moment
             << ", slowest solve " << worst_solve << " s";
    r.require(worst_res < 1e-4, "residuals < 1e-4");
    r.require(worst_moment <= 0.02, "moment identity within 2%");
    r.require(worst_solve < 60, "runtime < 60 s per solve");
    return r;
}

Result decay_rate() {
    Result r;
    const auto s = solve_planar(VortexConfig{{0.0}});
    const auto d = decay_fit(s, 3.0, 6.0);
    r.detail << "fitted exponent " << d.exponent << " (prefactor corrected " << d.corrected_exponent
             << ", sqrt2 = " << std::sqrt(2.0) << ")";
    r.require(d.exponent >= 1.25 && d.exponent <= 1.5, "exponent in [1.25, 1.5]");
    return r;
}

Result hamiltonian_translation() {
    Result r;
    const double nu = 0.15;
    const cplx mu(0.0, 0.1);
    const double h0 = hamiltonian(solve_planar(VortexConfig{{0.0}}), nu, mu);
    double worst = 0;
    for (double rad : {0.25, 0.5})
        for (int k = 0; k < 4; ++k) {
            const cplx w = std::polar(rad, kPi * k / 4 + 0.1);
            const double lhs = hamiltonian(solve_planar(VortexConfig{{w}}), nu, mu) - h0;
            const double rhs = nu * std::norm(w) + (std::conj(mu) * w * w).real();
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
    r.detail << "max relative error " << worst << " over 8 points with |w| <= 0.5";
    r.require(worst <= 0.02, "within 2%");
    return r;
}

Result elliptic_search() {
    Result r;
    const auto t0 = Clock::now();
    const auto model = ReducedModel::build(1);
    const auto pair = PeriodicPair::elliptic_canonical(0.7);
    const auto rep = closed_orbit_search(pair, model, SearchRegion{{0.0}, {0.6}});
    double min_other = 1e300;
    for (const auto& s : rep.samples)
        if (std::abs(s.sigma[0]) > 1e-12) min_other = std::min(min_other, s.displacement);
    r.detail << rep.samples.size() << " samples, " << rep.candidates.size() << " candidate(s)";
    r.require(rep.samples.size() == 81 && rep.complete, "9x9 grid completed");
    r.require(rep.candidates.size() == 1, "exactly one candidate");
    if (!rep.candidates.empty()) {
        r.detail << " at " << rep.candidates[0].sigma[0];
        r.require(std::abs(rep.candidates[0].sigma[0]) < 1e-6, "candidate at the origin");
    }
    r.require(min_other > 0, "other samples displaced");
    const auto f = linearized_monodromy(pair, model);
    double mod_err = 0;
    for (const auto& l : f.multipliers) mod_err = std::max(mod_err, std::abs(std::abs(l) - 1));
    const bool conj_pair = f.multipliers.size() == 2 && std::abs(f.multipliers[0] - std::conj(f.multipliers[1])) < 1e-9;
    const double secs = seconds_since(t0);
    r.detail << ", min other displacement " << min_other << ", multipliers " << f.multipliers[0] << " "
             << f.multipliers[1] << ", product " << f.product << ", " << secs << " s";
    r.require(conj_pair && mod_err < 0.02, "unit-modulus conjugate pair within 2%");
    r.require(std::abs(f.product - 1) < 0.02, "product within 2% of 1");
    r.require(secs < 1800, "runtime < 30 min");
    return r;
}

Result hyperbolic_search() {
    Result r;
    const auto t0 = Clock::now();
    const auto model = ReducedModel::build(2);
    const auto pair = PeriodicPair::hyperbolic_canonical(2, 0.05);
    r.require(pair.nu(0.3) == 0.5 && std::abs(pair.mu(0.0) - cplx(0, 0.05)) < 1e-12, "pair (0.5, 0.05i e^{2it})");

    // reduced gradient against vortex solves at one point of the region
    const std::vector<cplx> probe{cplx(0.2, 0.1), cplx(0.6, 0.3)};
    const auto gr = model.gradient(probe, 0.5, cplx(0, 0.05));
    const auto gd = DirectModel(2).gradient(probe, 0.5, cplx(0, 0.05));
    double gdiff = 0, gsize = 0;
    for (int q = 0; q < 2; ++q) {
        gdiff = std::max(gdiff, std::abs(gr[q] - gd[q]));
        gsize = std::max(gsize, std::abs(gd[q]));
    }
    r.require(gdiff <= 0.05 * gsize, "reduced gradient within 5% of the direct gradient");

    SearchOptions o;
    o.grid = 5;
    const auto rep = closed_orbit_search(pair, model, SearchRegion{{0.0, 0.0}, {0.8, 0.8}}, o);
    const double secs = seconds_since(t0);
    r.detail << rep.samples.size() << " samples in |sigma_1|, |sigma_2| <= 0.8, min displacement "
             << rep.min_displacement << ", " << rep.candidates.size() << " refined candidate(s), gradient check "
             << gdiff / gsize << ", " << secs << " s (region-limited evidence, not a proof)";
    r.require(rep.samples.size() == 625 && rep.complete, "5^4 samples completed");
    r.require(rep.min_displacement > 0, "min displacement > 0");
    r.require(rep.candidates.empty(), "no refined candidate");
    r.require(secs < 7200, "runtime <= 2 h");
    return r;
}

Result local_model_check() {
    Result r;
    double analytic = 0, grid = 0;
    for (double R : {0.3, 0.7, -0.4})
        for (int n = -4; n <= 4; ++n) {
            const auto mode = generate_mode(n, cplx(0.6, -0.3), R);
            const Domain dom{-1, 1, 801, 32};
            analytic = std::max(analytic, model_residual(mode, dom));
            grid = std::max(grid, model_residual(ModelField::sampled(R, mode.sample(-1, 1, 801, 32)), dom));
        }
    r.detail << "mode residual analytic " << analytic << ", grid " << grid;
    r.require(analytic < 1e-10, "analytic residual < 1e-10");
    r.require(grid < 1e-6, "grid residual < 1e-6");

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> nn(-3, 3);
    double holo = 0;
    for (int k = 0; k < 20; ++k) {
        std::vector<std::tuple<cplx, double, int>> terms;
        for (int j = 0; j < 4; ++j) terms.emplace_back(cplx(u(rng), u(rng)), 1.5 * u(rng), nn(rng));
        const cplx p0(u(rng), u(rng)), p1(u(rng), u(rng));
        auto f = [=](double w, double t) {
            cplx s = (p0 + p1 * w) * std::cos(t);
            for (const auto& [a, b, m] : terms) s += a * std::exp(cplx(b * w, m * t));
            return s;
        };
        auto fw = [=](double w, double t) {
            cplx s = p1 * std::cos(t);
            for (const auto& [a, b, m] : terms) s += b * a * std::exp(cplx(b * w, m * t));
            return s;
        };
        auto ft = [=](double w, double t) {
            cplx s = -(p0 + p1 * w) * std::sin(t);
            for (const auto& [a, b, m] : terms) s += cplx(0, m) * a * std::exp(cplx(b * w, m * t));
            return s;
        };
        holo = std::max(holo, holo_check(ModelField::callable(0.1 * k - 1.0, f, fw, ft)));
    }
    r.detail << ", holo identity " << holo;
    r.require(holo < 1e-9, "holo_check < 1e-9");

    // closed form: the mode e^{(n - R) w + int} pairs with the eigenvalue (R - n)/2 of L for (R/2, 0)
    bool closed_exact = true;
    double numeric = 0;
    for (double R : {0.3, 0.7}) {
        const auto sp = spectrum(PeriodicPair::elliptic_canonical(R), 1, 16);
        for (int n = -10; n <= 10; ++n) {
            const double exponent = n - R, eigenvalue = (R - n) / 2;
            if (exponent + 2 * eigenvalue != 0.0) closed_exact = false;
            const auto m = end_match(generate_mode(n, 1.0, R), sp);
            if (m.matches.size() != 1) {
                closed_exact = false;
                continue;
            }
            numeric = std::max(numeric, std::abs(m.matches[0].eigenvalue - eigenvalue));
            numeric = std::max(numeric, std::abs(m.matches[0].exponent - exponent));
        }
    }
    r.detail << ", exponent-eigenvalue numeric error " << numeric;
    r.require(closed_exact, "closed form matching exact");
    r.require(numeric < 1e-10, "numeric matching < 1e-10");
    return r;
}

Result approximation_suite() {
    Result r;
    const PairFamily sloped{[](double tau, double) { return 0.1 + 0.5 * tau; },
                            [](double, double) { return cplx(0.05, 0.02); }};
    {
        const auto c = contact_check(build_form(sloped, 10, 50, 0.05, kTwoPi));
        r.detail << "contact min " << c.min_coefficient;
        r.require(c.min_coefficient > 0, "contact min > 0");
    }
    {
        const double r50 = reeb_check(build_form(sloped, 25, 50, 0.05, kTwoPi)).sup_diff_over_z;
        const double r100 = reeb_check(build_form(sloped, 50, 100, 0.05, kTwoPi)).sup_diff_over_z;
        const double ratio = r100 / r50;
        r.detail << ", reeb Q-doubling ratio " << ratio;
        r.require(ratio >= 0.375 && ratio <= 0.625, "reeb ratio halves within 25%");
    }
    {
        const auto g = eigen_gap(PairFamily::constant(0.15, 0.0), 3, 3);
        const double oracle = brute_gap(0.15, 3);
        r.detail << ", eigen gap " << g.lambda0 << " (brute force " << oracle << ")";
        r.require(std::abs(g.lambda0 - oracle) < 1e-4 && std::abs(g.lambda0 - 0.0167) < 1e-4, "eigen gap 0.0167");
    }
    {
        double worst = 0;
        for (const auto& p : {PeriodicPair::constant(0.15, 0.0), PeriodicPair::hyperbolic_canonical(1, 0.05)}) {
            const auto b = cylinder_inverse_norm(p, 1);
            const double gap = spectrum(p, 1, 32).min_abs();
            worst = std::max(worst, std::abs(b.sigma_star - 1 / gap) * gap);
        }
        r.detail << ", cylinder relative error " << worst;
        r.require(worst < 0.05, "cylinder inverse norm within 5%");
    }
    {
        auto f = CylinderField::on(4.0, 65, 64, 1);
        for (auto& v : f.values) v = 1.0;
        // L2 part: 2S * 2pi; ball part: the unit ball of area pi at the largest radius
        const double oracle = std::sqrt(2 * 4.0 * kTwoPi + std::pow(2.0, 0.01) * kPi);
        const double rel = std::abs(star_norm(f) - oracle) / oracle;
        r.detail << ", star norm relative error " << rel;
        r.require(rel < 0.01, "star norm within 1%");
    }
    {
        const auto pair = PeriodicPair::constant(0.15, 0.0);
        const CylinderOperator op(pair, 1, 4.0, 63, 51);
        const double sigma_star = 1 / op.smallest_singular_value();
        auto star = [&](const Eigen::VectorXd& v) { return star_norm(op.from_vector(v)); };
        auto gf = op.blank();
        for (int i = 0; i < gf.Ns; ++i)
            for (int j = 0; j < gf.Nt; ++j) gf.at(i, j) = std::exp(-gf.s(i) * gf.s(i)) * std::polar(1.0, gf.t(j));
        Eigen::VectorXd g = op.to_vector(gf);
        g /= star(g);
        const double eps = 0.05, rho = 1e-4;
        auto T = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd rhs(v.size());
            for (Eigen::Index k = 0; k < v.size(); k += 2) {
                const cplx e(v[k], v[k + 1]);
                const cplx s = eps * e * e;
                rhs[k] = s.real() + rho * g[k];
                rhs[k + 1] = s.imag() + rho * g[k + 1];
            }
            return Eigen::VectorXd(-op.solve(rhs));
        };
        const ContractionBounds bounds{2 * sigma_star, 2 * sigma_star, rho, 0.5 / (16 * sigma_star)};
        const auto a = contraction_solve(bounds, T, star, Eigen::VectorXd::Zero(g.size()));
        r.detail << ", contraction " << (a.converged ? "converged" : "did not converge") << " in " << a.iterations
                 << " steps, fixed point norm " << a.fixed_point_norm << " <= " << 2 * sigma_star * rho;
        r.require(bounds.admissible(), "contraction bounds admissible");
        r.require(a.converged && a.fixed_point_norm <= 2 * sigma_star * rho, "contraction converges in the ball");
    }
    return r;
}

struct Criterion {
    int id;
    std::string name;
    std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "monodromy exactness", monodromy_exactness},
        {2, "hyperbolic verification", hyperbolic_verification},
        {3, "spectrum oracle", spectrum_oracle},
        {4, "spectral flow", spectral_flow_check},
        {5, "ECH index", ech_index_check},
        {6, "vortex quantization", vortex_quantization},
        {7, "decay rate", decay_rate},
        {8, "hamiltonian translation identity", hamiltonian_translation},
        {9, "elliptic closed orbit search, m = 1", elliptic_search},
        {10, "hyperbolic closed orbit search, m = 2", hyperbolic_search},
        {11, "local model", local_model_check},
        {12, "approximation suite", approximation_suite},
    };
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail << "error: " << e.what();
        }
        std::printf("%s %2d %s: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), r.detail.str().c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
