#include <cmath>
#include <random>

#include "doctest.h"
#include "echkit/local_model.hpp"

using namespace echkit;

namespace {

// random smooth field: sum of a_k e^{b_k w + i n_k t} plus a polynomial in w times cos t
ModelField random_field(std::mt19937& rng, double R) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> n(-3, 3);
    std::vector<std::tuple<cplx, double, int>> terms;
    for (int k = 0; k < 4; ++k) terms.emplace_back(cplx(u(rng), u(rng)), 1.5 * u(rng), n(rng));
    const cplx p0(u(rng), u(rng)), p1(u(rng), u(rng)), p2(u(rng), u(rng));
    auto f = [=](double w, double t) {
        cplx s = (p0 + p1 * w + p2 * w * w) * std::cos(t);
        for (const auto& [a, b, m] : terms) s += a * std::exp(cplx(b * w, m * t));
        return s;
    };
    auto fw = [=](double w, double t) {
        cplx s = (p1 + 2.0 * p2 * w) * std::cos(t);
        for (const auto& [a, b, m] : terms) s += b * a * std::exp(cplx(b * w, m * t));
        return s;
    };
    auto ft = [=](double w, double t) {
        cplx s = -(p0 + p1 * w + p2 * w * w) * std::sin(t);
        for (const auto& [a, b, m] : terms) s += cplx(0, m) * a * std::exp(cplx(b * w, m * t));
        return s;
    };
    return ModelField::callable(R, f, fw, ft);
}

}  // namespace

TEST_CASE("model coordinates") {
    CHECK(model_coords(0, 0.0, 1.0) == 0.0);
    CHECK(std::abs(model_coords(1, 0.0, kTwoPi) - 1.0) < 1e-15);
    CHECK(std::abs(model_coords(1, cplx(1, 1), kTwoPi)) < 1e-15);
    CHECK_THROWS_AS(model_coords(1, 0.0, 0.0), InvalidInput);
}

TEST_CASE("model residual examples") {
    auto one = [](double, double) { return cplx(1, 0); };
    auto zero = [](double, double) { return cplx(0, 0); };
    CHECK(model_residual(ModelField::callable(0.0, one, zero, zero)) == 0.0);
    CHECK(std::abs(model_residual(ModelField::callable(0.3, one, zero, zero)) - 0.3) < 1e-15);
    const auto mode = generate_mode(2, 1.0, 0.3);
    CHECK(model_residual(mode) < 1e-10);
    // grid path: sampled values only
    const auto grid = ModelField::sampled(0.3, mode.sample(-1, 1, 201, 32));
    CHECK(model_residual(grid) < 1e-6);
    CHECK(model_residual(ModelField::callable(0.3, mode.f)) < 1e-6);
    CHECK_THROWS_AS(model_residual(ModelField::sampled(0.3, mode.sample(-1, 1, 4, 8))), InvalidInput);
}

TEST_CASE("generated modes") {
    const auto m0 = generate_mode(0, 1.0, 0.0);
    CHECK(std::abs(m0.f(0.7, 1.3) - 1.0) < 1e-15);
    // growth rate n - R in w
    const auto m1 = generate_mode(1, 1.0, 0.3);
    CHECK(std::abs(std::log(std::abs(m1.f(2.0, 0.4)) / std::abs(m1.f(1.0, 0.4))) - 0.7) < 1e-12);
    const auto d = generate_mode(0, 1.0, 0.3);
    CHECK(std::abs(std::log(std::abs(d.f(2.0, 0.4)) / std::abs(d.f(1.0, 0.4))) + 0.3) < 1e-12);
}

TEST_CASE("superposition of modes") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    auto sum = ModelField::empty(0.3);
    for (int n = -3; n <= 3; ++n) sum = sum + generate_mode(n, cplx(u(rng), u(rng)), 0.3);
    CHECK(sum.modes.size() == 7);
    CHECK(model_residual(sum) < 1e-9);
}

TEST_CASE("holomorphic coordinate identity") {
    for (int n = -2; n <= 2; ++n) CHECK(holo_check(generate_mode(n, cplx(0.4, -0.2), 0.3)) < 1e-10);
    auto one = [](double, double) { return cplx(1, 0); };
    auto zero = [](double, double) { return cplx(0, 0); };
    const auto c = ModelField::callable(1.0, one, zero, zero);
    CHECK(holo_check(c) < 1e-10);
    CHECK(model_residual(c) == doctest::Approx(1.0));
    std::mt19937 rng(11);
    for (int k = 0; k < 20; ++k) {
        const auto f = random_field(rng, 0.1 * k - 1.0);
        CHECK(holo_check(f) < 1e-9);
        CHECK(holo_check(ModelField::sampled(f.R, f.sample(-1, 1, 201, 32))) < 1e-6);
    }
}

TEST_CASE("end matching against the spectrum of L") {
    const auto sp = spectrum(PeriodicPair::constant(0.15, 0.0), 1, 16);
    const auto r0 = end_match(generate_mode(0, 1.0, 0.3), sp);
    REQUIRE(r0.matches.size() == 1);
    CHECK(std::abs(r0.matches[0].eigenvalue - 0.15) < 1e-10);
    CHECK(std::abs(r0.matches[0].exponent + 0.3) < 1e-15);
    const auto r1 = end_match(generate_mode(1, 1.0, 0.3), sp);
    CHECK(std::abs(r1.matches[0].eigenvalue + 0.35) < 1e-10);
    CHECK(std::abs(r1.matches[0].exponent - 0.7) < 1e-15);
    CHECK(end_match(ModelField::empty(0.3), sp).matches.empty());
    CHECK_THROWS_AS(end_match(generate_mode(40, 1.0, 0.3), sp), InvalidInput);
    auto scaled = generate_mode(1, 1.0, 0.3);
    scaled.ell = kPi;
    CHECK(end_match(scaled, sp).scale == doctest::Approx(2.0));
    // exponent-eigenvalue duality over a window
    for (int n = -10; n <= 10; ++n) {
        const auto r = end_match(generate_mode(n, 1.0, 0.3), sp);
        CHECK((n - 0.3) + 2.0 * ((0.3 - n) / 2.0) == 0.0);
        CHECK(r.matches[0].error < 1e-10);
    }
}

TEST_CASE("end expansion invariants") {
    EndExpansion e;
    e.q_E = 4;
    e.terms = {{1, -0.2, {}}, {2, -0.3, {}}, {4, -0.5, {}}};
    CHECK_NOTHROW(e.validate());
    CHECK(e.ordering_holds());
    e.terms[0].lambda = -0.7;
    CHECK_FALSE(e.ordering_holds());
    e.terms[1].q_prime = 3;
    CHECK_THROWS_AS(e.validate(), InvalidInput);
    e.terms[1].q_prime = 2;
    e.terms[2].lambda = 0.1;
    CHECK_THROWS_AS(e.validate(), InvalidInput);
    e.side = EndExpansion::Side::Positive;
    for (auto& t : e.terms) t.lambda = std::abs(t.lambda);
    CHECK_NOTHROW(e.validate());
}
