#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "echkit/core.hpp"
#include "echkit/reeb_linops.hpp"

namespace echkit {

// w = (2 pi / ell) s - |z|^2 / 2; t is unchanged.
double model_coords(double s, cplx z, double ell);

struct ModeTerm {
    int n = 0;
    cplx c = 0.0;
};

// Samples of f on [w0, w1] x [0, 2pi): values[j * Nw + i] at (w0 + i dw, 2 pi j / Nt).
struct SampledField {
    double w0 = -1, w1 = 1;
    int Nw = 0, Nt = 0;
    std::vector<cplx> values;

    double dw() const { return (w1 - w0) / (Nw - 1); }
    double w(int i) const { return w0 + i * dw(); }
    double t(int j) const { return kTwoPi * j / Nt; }
    cplx at(int i, int j) const { return values[static_cast<std::size_t>(j) * Nw + i]; }
};

// A complex function f(w, t), 2pi-periodic in t, either as a callable (with
// optional analytic derivatives) or as samples.
struct ModelField {
    using Fn = std::function<cplx(double, double)>;

    double R = 0;
    double ell = kTwoPi;
    Fn f, f_w, f_t;
    std::optional<SampledField> samples;
    std::vector<ModeTerm> modes;  // set when the field is a sum of generated modes
    bool mode_sum = false;

    static ModelField callable(double R, Fn f, Fn f_w = {}, Fn f_t = {});
    static ModelField sampled(double R, SampledField s);
    static ModelField empty(double R);

    bool analytic() const { return f && f_w && f_t; }
    // sample a callable field on a grid
    SampledField sample(double w0, double w1, int Nw, int Nt) const;
};

ModelField operator+(const ModelField& a, const ModelField& b);

// f = c e^{(n - R) w + i n t}
ModelField generate_mode(int n, cplx c, double R);

struct Domain {
    double w0 = -1, w1 = 1;
    int Nw = 201;  // samples in w (grid evaluation uses a 5-point stencil)
    int Nt = 32;
};

// sup |(d_w + i d_t + R) f|; analytic derivatives when present, otherwise
// 4th order differences in w and spectral differentiation in t
double model_residual(const ModelField& field, const Domain& dom = {});

// sup |d_ubar(e^{Rw} f) - (1/2) e^{Rw} (d_w + i d_t + R) f|, d_ubar = (d_w + i d_t) / 2
double holo_check(const ModelField& field, const Domain& dom = {});

struct ModeMatch {
    int n = 0;
    double exponent = 0;    // n - R, growth rate of the mode in w
    double eigenvalue = 0;  // matched eigenvalue of L
    double error = 0;       // |eigenvalue - (R - n) / 2|
};

struct EndMatchReport {
    std::vector<ModeMatch> matches;
    double scale = 1.0;  // 2 pi / ell: the mode decays like e^{scale (n - R) s} in s
    double max_error = 0;
};

EndMatchReport end_match(const ModelField& field, const SpectrumResult& spectrum, double tol = 1e-10);

// Terms (zeta_{q'} + tau) e^{-2 lambda_{q'} s} of an end with multiplicity q_E.
struct EndExpansion {
    struct Term {
        int q_prime = 1;
        double lambda = 0;
        std::vector<cplx> zeta;  // samples over [0, 2 pi q')
    };
    enum class Side { Positive, Negative };

    int q_E = 1;
    std::vector<Term> terms;
    Side side = Side::Negative;

    // divisibility and sign of each eigenvalue; throws InvalidInput
    void validate() const;
    // lambda_{q'} >= lambda_{q_E} on a negative end, recorded but not enforced
    bool ordering_holds() const;
};

}  // namespace echkit
