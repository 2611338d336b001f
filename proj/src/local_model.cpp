#include "echkit/local_model.hpp"

#include <algorithm>
#include <cmath>

#include "echkit/fourier.hpp"

namespace echkit {

double model_coords(double s, cplx z, double ell) {
    if (!(ell > 0)) throw InvalidInput("ell must be positive");
    return kTwoPi / ell * s - 0.5 * std::norm(z);
}

ModelField ModelField::callable(double R, Fn f, Fn f_w, Fn f_t) {
    if (!f) throw InvalidInput("field callable is empty");
    ModelField m;
    m.R = R;
    m.f = std::move(f);
    m.f_w = std::move(f_w);
    m.f_t = std::move(f_t);
    return m;
}

ModelField ModelField::sampled(double R, SampledField s) {
    if (s.Nw < 1 || s.Nt < 1 || s.values.size() != static_cast<std::size_t>(s.Nw) * s.Nt)
        throw InvalidInput("sample array does not match the grid");
    if (!(s.w1 > s.w0)) throw InvalidInput("empty w range");
    ModelField m;
    m.R = R;
    m.samples = std::move(s);
    return m;
}

ModelField ModelField::empty(double R) {
    ModelField m;
    m.R = R;
    m.mode_sum = true;
    auto zero = [](double, double) { return cplx(0, 0); };
    m.f = m.f_w = m.f_t = zero;
    return m;
}

SampledField ModelField::sample(double w0, double w1, int Nw, int Nt) const {
    if (!f) throw InvalidInput("field has no callable to sample");
    SampledField s{w0, w1, Nw, Nt, {}};
    s.values.resize(static_cast<std::size_t>(Nw) * Nt);
    for (int j = 0; j < Nt; ++j)
        for (int i = 0; i < Nw; ++i) s.values[static_cast<std::size_t>(j) * Nw + i] = f(s.w(i), s.t(j));
    return s;
}

ModelField operator+(const ModelField& a, const ModelField& b) {
    if (a.R != b.R) throw InvalidInput("fields have different rotation numbers");
    if (!a.f || !b.f) throw InvalidInput("only callable fields can be added");
    ModelField m;
    m.R = a.R;
    m.ell = a.ell;
    m.f = [fa = a.f, fb = b.f](double w, double t) { return fa(w, t) + fb(w, t); };
    if (a.analytic() && b.analytic()) {
        m.f_w = [fa = a.f_w, fb = b.f_w](double w, double t) { return fa(w, t) + fb(w, t); };
        m.f_t = [fa = a.f_t, fb = b.f_t](double w, double t) { return fa(w, t) + fb(w, t); };
    }
    m.mode_sum = a.mode_sum && b.mode_sum;
    if (m.mode_sum) {
        m.modes = a.modes;
        m.modes.insert(m.modes.end(), b.modes.begin(), b.modes.end());
    }
    return m;
}

ModelField generate_mode(int n, cplx c, double R) {
    const double lam = n - R;
    ModelField m;
    m.R = R;
    m.f = [=](double w, double t) { return c * std::exp(cplx(lam * w, n * t)); };
    m.f_w = [=](double w, double t) { return lam * c * std::exp(cplx(lam * w, n * t)); };
    m.f_t = [=](double w, double t) { return cplx(0, n) * c * std::exp(cplx(lam * w, n * t)); };
    m.modes = {{n, c}};
    m.mode_sum = true;
    return m;
}

namespace {

struct GridDerivs {
    SampledField s;
    std::vector<cplx> fw, ft;  // valid for 2 <= i < Nw - 2
};

GridDerivs grid_derivs(SampledField s) {
    if (s.Nw < 5) throw InvalidInput("domain too small for the difference stencil");
    if (s.Nt < 2) throw InvalidInput("need at least two samples in t");
    GridDerivs g;
    const int Nw = s.Nw, Nt = s.Nt;
    const double h = s.dw();
    g.fw.assign(s.values.size(), 0.0);
    g.ft.assign(s.values.size(), 0.0);
    for (int j = 0; j < Nt; ++j)
        for (int i = 2; i < Nw - 2; ++i)
            g.fw[static_cast<std::size_t>(j) * Nw + i] =
                (-s.at(i + 2, j) + 8.0 * s.at(i + 1, j) - 8.0 * s.at(i - 1, j) + s.at(i - 2, j)) / (12.0 * h);
    std::vector<cplx> col(Nt);
    for (int i = 0; i < Nw; ++i) {
        for (int j = 0; j < Nt; ++j) col[j] = s.at(i, j);
        const auto d = spectral_derivative(col, kTwoPi);
        for (int j = 0; j < Nt; ++j) g.ft[static_cast<std::size_t>(j) * Nw + i] = d[j];
    }
    g.s = std::move(s);
    return g;
}

void check_domain(const Domain& d) {
    if (!(d.w1 > d.w0) || d.Nw < 1 || d.Nt < 1) throw InvalidInput("bad model domain");
}

template <class F>
double sup_analytic(const Domain& d, F&& fn) {
    double s = 0;
    for (int j = 0; j < d.Nt; ++j)
        for (int i = 0; i < d.Nw; ++i) {
            const double w = d.Nw == 1 ? d.w0 : d.w0 + (d.w1 - d.w0) * i / (d.Nw - 1);
            s = std::max(s, std::abs(fn(w, kTwoPi * j / d.Nt)));
        }
    return s;
}

const SampledField& grid_of(const ModelField& field, const Domain& dom, std::optional<SampledField>& tmp) {
    if (field.samples) return *field.samples;
    tmp = field.sample(dom.w0, dom.w1, dom.Nw, dom.Nt);
    return *tmp;
}

}  // namespace

double model_residual(const ModelField& field, const Domain& dom) {
    check_domain(dom);
    const double R = field.R;
    if (field.analytic())
        return sup_analytic(dom, [&](double w, double t) {
            return field.f_w(w, t) + cplx(0, 1) * field.f_t(w, t) + R * field.f(w, t);
        });
    std::optional<SampledField> tmp;
    const auto g = grid_derivs(grid_of(field, dom, tmp));
    double s = 0;
    for (int j = 0; j < g.s.Nt; ++j)
        for (int i = 2; i < g.s.Nw - 2; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * g.s.Nw + i;
            s = std::max(s, std::abs(g.fw[k] + cplx(0, 1) * g.ft[k] + R * g.s.values[k]));
        }
    return s;
}

double holo_check(const ModelField& field, const Domain& dom) {
    check_domain(dom);
    const double R = field.R;
    if (field.analytic())
        return sup_analytic(dom, [&](double w, double t) {
            const double e = std::exp(R * w);
            const cplx f = field.f(w, t), fw = field.f_w(w, t), ft = field.f_t(w, t);
            // derivatives of x = e^{Rw} f by the product rule
            const cplx xw = R * e * f + e * fw, xt = e * ft;
            const cplx dubar = 0.5 * (xw + cplx(0, 1) * xt);
            return dubar - 0.5 * e * (fw + cplx(0, 1) * ft + R * f);
        });
    // differentiate x = e^{Rw} f on the grid independently of f's derivatives
    std::optional<SampledField> tmp;
    const SampledField& s = grid_of(field, dom, tmp);
    SampledField x = s;
    for (int j = 0; j < s.Nt; ++j)
        for (int i = 0; i < s.Nw; ++i) x.values[static_cast<std::size_t>(j) * s.Nw + i] *= std::exp(R * s.w(i));
    const auto gf = grid_derivs(s);
    const auto gx = grid_derivs(std::move(x));
    double sup = 0;
    for (int j = 0; j < s.Nt; ++j)
        for (int i = 2; i < s.Nw - 2; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * s.Nw + i;
            const double e = std::exp(R * s.w(i));
            const cplx dubar = 0.5 * (gx.fw[k] + cplx(0, 1) * gx.ft[k]);
            sup = std::max(sup, std::abs(dubar - 0.5 * e * (gf.fw[k] + cplx(0, 1) * gf.ft[k] + R * s.values[k])));
        }
    return sup;
}

EndMatchReport end_match(const ModelField& field, const SpectrumResult& spectrum, double tol) {
    if (!field.mode_sum) throw InvalidInput("end matching needs a finite sum of generated modes");
    EndMatchReport rep;
    rep.scale = kTwoPi / field.ell;
    for (const auto& mode : field.modes) {
        const double target = (field.R - mode.n) / 2.0;
        double best = 0, err = 1e300;
        for (double l : spectrum.eigenvalues)
            if (std::abs(l - target) < err) {
                err = std::abs(l - target);
                best = l;
            }
        if (!(err <= tol))
            throw InvalidInput("mode n = " + std::to_string(mode.n) + " has no matching eigenvalue (spectrum window too small)");
        rep.matches.push_back({mode.n, mode.n - field.R, best, err});
        rep.max_error = std::max(rep.max_error, err);
    }
    return rep;
}

void EndExpansion::validate() const {
    if (q_E < 1) throw InvalidInput("q_E must be positive");
    for (const auto& term : terms) {
        if (term.q_prime < 1 || q_E % term.q_prime != 0) throw InvalidInput("q' must divide q_E");
        if (side == Side::Negative && !(term.lambda < 0)) throw InvalidInput("negative end needs negative eigenvalues");
        if (side == Side::Positive && !(term.lambda > 0)) throw InvalidInput("positive end needs positive eigenvalues");
    }
}

bool EndExpansion::ordering_holds() const {
    const Term* last = nullptr;
    for (const auto& term : terms)
        if (term.q_prime == q_E) last = &term;
    if (!last || side != Side::Negative) return true;
    for (const auto& term : terms)
        if (term.lambda < last->lambda) return false;
    return true;
}

}  // namespace echkit
