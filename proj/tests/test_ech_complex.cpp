#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "echkit/ech_complex.hpp"

using namespace echkit;
using boost::multiprecision::cpp_rational;

namespace {

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
    o.n_max = 1;
    o.homology = std::move(h);
    return o;
}

Generator gen(const OrbitDb& db, const std::string& s) { return Generator::canonical(db, OrbitSet::parse(s)); }

long rational_rank(const IntMatrix& m) {
    std::vector<std::vector<cpp_rational>> a(m.rows, std::vector<cpp_rational>(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) a[i][j] = cpp_rational(m(i, j));
    long rank = 0;
    std::size_t row = 0;
    for (std::size_t c = 0; c < m.cols && row < m.rows; ++c) {
        std::size_t piv = row;
        while (piv < m.rows && a[piv][c] == 0) ++piv;
        if (piv == m.rows) continue;
        std::swap(a[piv], a[row]);
        for (std::size_t i = row + 1; i < m.rows; ++i) {
            if (a[i][c] == 0) continue;
            const cpp_rational f = a[i][c] / a[row][c];
            for (std::size_t j = c; j < m.cols; ++j) a[i][j] -= f * a[row][j];
        }
        ++row;
        ++rank;
    }
    return rank;
}

long rank_mod(const IntMatrix& m, long ell) {
    std::vector<std::vector<long>> a(m.rows, std::vector<long>(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            BigInt v = m(i, j) % ell;
            if (v < 0) v += ell;
            a[i][j] = static_cast<long>(v);
        }
    auto inv = [ell](long x) {
        for (long y = 1; y < ell; ++y)
            if ((x * y) % ell == 1) return y;
        return 0L;
    };
    long rank = 0;
    std::size_t row = 0;
    for (std::size_t c = 0; c < m.cols && row < m.rows; ++c) {
        std::size_t piv = row;
        while (piv < m.rows && a[piv][c] == 0) ++piv;
        if (piv == m.rows) continue;
        std::swap(a[piv], a[row]);
        const long iv = inv(a[row][c]);
        for (std::size_t i = row + 1; i < m.rows; ++i) {
            const long f = (a[i][c] * iv) % ell;
            for (std::size_t j = c; j < m.cols; ++j) a[i][j] = ((a[i][j] - f * a[row][j]) % ell + ell) % ell;
        }
        ++row;
        ++rank;
    }
    return rank;
}

}  // namespace

TEST_CASE("z weights") {
    CHECK(z_weight(elliptic("a", 1, 0.3, 4), 4) == 3);
    CHECK(z_weight(elliptic("b", 1, 1 / std::sqrt(2.0), 4), 2) == 3);
    CHECK(z_weight(hyperbolic("h", 1, -1), 1) == -1);
    CHECK_THROWS_AS(z_weight(hyperbolic("h", 1, -1), 2), InvalidInput);
    CHECK_THROWS_AS(z_weight(elliptic("c", 1, 0.25, 3), 4), InvalidInput);
    CHECK(z_weight(elliptic("d", 1, -0.3, 2), 1) == -1);
}

TEST_CASE("ech index examples") {
    OrbitDb db({elliptic("g", 1.0, 0.3, 3), elliptic("e", 1.0, 1 / std::sqrt(2.0), 5)});
    CHECK(ech_index(db, {}, {}, {}) == 0);
    CHECK(ech_index(db, {}, OrbitSet::parse("g:1"), {}) == 1);
    CHECK(ech_index(db, {}, OrbitSet::parse("e:3"), SurfaceData{2, 1}) == 10);
}

TEST_CASE("ech index sum rule and antisymmetry on random triples") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> coin(0, 1), small(-5, 5), mult(1, 4);
    std::uniform_real_distribution<double> ur(-2.0, 2.0);
    std::vector<OrbitRecord> recs;
    for (int i = 0; i < 4; ++i) recs.push_back(elliptic("e" + std::to_string(i), 1.0 + i, ur(rng) + 1e-3 * std::sqrt(2.0 + i), 6));
    for (int i = 0; i < 3; ++i) recs.push_back(hyperbolic("h" + std::to_string(i), 2.0 + i, small(rng)));
    OrbitDb db(recs);
    auto random_set = [&]() {
        OrbitSet s;
        for (const auto& o : db.orbits()) {
            if (!coin(rng)) continue;
            s.pairs.emplace_back(o.id, o.kind == OrbitKind::Hyperbolic ? 1 : mult(rng));
        }
        s.normalize();
        return s;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const OrbitSet a = random_set(), b = random_set(), c = random_set();
        const SurfaceData z12{small(rng), small(rng)}, z23{small(rng), small(rng)};
        CHECK(ech_index(db, a, b, z12) + ech_index(db, b, c, z23) == ech_index(db, a, c, z12 + z23));
        CHECK(ech_index(db, a, b, z12) == -ech_index(db, b, a, -z12));
    }
}

TEST_CASE("grading modulus") {
    CHECK(grading_modulus({4, 6}) == 2);
    CHECK(grading_modulus({0, 0, 0}) == 0);
    CHECK(grading_modulus({6}) == 6);
    CHECK(grading_modulus({-4, 10}) == 2);
}

TEST_CASE("enumerate generator examples") {
    OrbitDb db({elliptic("g1", 1.0, 0.3, 3), hyperbolic("g2", 1.5, 1)});
    const auto sets = enumerate_generators(db, 3.2);
    std::set<std::string> got;
    for (const auto& s : sets) got.insert(s.str());
    CHECK(got == std::set<std::string>{"", "g1:1", "g1:2", "g1:3", "g2:1", "g1:1,g2:1"});
    CHECK(enumerate_generators(OrbitDb{}, 5.0).size() == 1);
    CHECK_THROWS_AS(enumerate_generators(db, 1.0), InvalidInput);  // g1:1 sits exactly at L
    const auto one = enumerate_generators(db, 1.0, std::nullopt, true);
    REQUIRE(one.size() == 1);
    CHECK(one[0].pairs.empty());
    CHECK_THROWS_AS(enumerate_generators(db, 2.5), InvalidInput);  // g1:1,g2:1 has action 2.5
    CHECK_THROWS_AS(enumerate_generators(db, 4.5), InvalidInput);  // needs g1 multiplicity 4
}

TEST_CASE("enumerate generators matches brute force") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> act(0.6, 2.5), rot(0.05, 0.95);
    std::uniform_int_distribution<int> nor(1, 5), hc(-1, 1), kind(0, 2);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<OrbitRecord> recs;
        const int n = 1 + trial % 5;
        for (int i = 0; i < n; ++i) {
            const std::string id = "o" + std::to_string(i);
            const double a = act(rng);
            if (kind(rng) == 0) recs.push_back(hyperbolic(id, a, hc(rng), {hc(rng)}));
            else {
                double R = rot(rng);
                recs.push_back(elliptic(id, a, R + 1e-7 * std::sqrt(2.0), 8, {hc(rng)}));
            }
        }
        OrbitDb db(recs);
        const double L = 4.0 + 0.123456789 * trial / 60.0;
        std::optional<std::vector<long>> cls;
        if (trial % 2) cls = std::vector<long>{trial % 3 - 1};
        std::vector<OrbitSet> got;
        try {
            got = enumerate_generators(db, L, cls);
        } catch (const InvalidInput&) {
            continue;  // collision with L: skip the database
        }
        std::set<std::string> brute;
        std::vector<int> m(n, 0);
        for (;;) {
            double A = 0;
            long h = 0;
            bool ok = true;
            for (int i = 0; i < n; ++i) {
                A += m[i] * recs[i].action;
                h += m[i] * recs[i].homology[0];
                if (recs[i].kind == OrbitKind::Hyperbolic && m[i] > 1) ok = false;
            }
            if (ok && A < L && (!cls || h == (*cls)[0])) {
                OrbitSet s;
                for (int i = 0; i < n; ++i)
                    if (m[i]) s.pairs.emplace_back(recs[i].id, m[i]);
                brute.insert(s.str());
            }
            int i = 0;
            while (i < n && ++m[i] > 8) m[i++] = 0;
            if (i == n) break;
        }
        std::set<std::string> mine;
        for (const auto& s : got) mine.insert(s.str());
        CHECK(mine == brute);
        CHECK(mine.size() == got.size());
    }
}

TEST_CASE("canonicalize signs") {
    Generator g;
    g.ordering = {"a", "b", "c"};
    CHECK(canonicalize(g).sign == 1);
    g.ordering = {"b", "a", "c"};
    CHECK(canonicalize(g).sign == -1);
    g.ordering = {"c", "a", "b"};
    CHECK(canonicalize(g).sign == 1);
    const auto c = canonicalize(g);
    const auto c2 = canonicalize(c.gen);
    CHECK(c2.sign == 1);
    CHECK(c2.gen.ordering == c.gen.ordering);
}

TEST_CASE("differential assembly and validation") {
    OrbitDb db({elliptic("a", 1.0, 0.3, 1), elliptic("b", 0.5, 0.3, 1), elliptic("c", 0.25, 0.3, 1)});
    std::vector<Generator> gens{gen(db, "a:1"), gen(db, "b:1"), gen(db, "c:1")};
    std::vector<long> deg{2, 1, 0};
    auto empty = build_differential(db, gens, {}, deg, 0);
    CHECK(empty.matrix.is_zero());
    CHECK(empty.squares_to_zero);

    auto two = build_differential(db, gens, {{gens[1], gens[0], 1}}, deg, 0);
    CHECK(two.matrix(1, 0) == 1);
    CHECK(two.valid());

    auto bad = build_differential(db, gens, {{gens[1], gens[0], 1}, {gens[2], gens[1], 1}}, deg, 0);
    CHECK(!bad.squares_to_zero);
    CHECK(((bad.matrix * bad.matrix)(2, 0)) == 1);

    auto shift = build_differential(db, gens, {{gens[2], gens[0], 3}}, deg, 0);
    CHECK(shift.degree_violations.size() == 1);
    auto shift_mod = build_differential(db, gens, {{gens[2], gens[0], 3}}, deg, 1);
    CHECK(shift_mod.degree_violations.empty());
    auto up = build_differential(db, gens, {{gens[0], gens[1], 1}}, std::vector<long>{0, 1, 2}, 0);
    CHECK(up.action_violations.size() == 1);
    CHECK_THROWS_AS(build_differential(db, gens, {{gen(db, "a:1,b:1"), gens[0], 1}}, deg, 0), InvalidInput);
}

TEST_CASE("ordering signs are folded into the differential") {
    OrbitDb db({hyperbolic("x", 1.0, 2), hyperbolic("y", 1.1, 0), elliptic("e", 0.3, 0.41, 3)});
    const Generator xy = gen(db, "x:1,y:1");
    Generator yx = xy;
    yx.ordering = {"y", "x"};
    const Generator e = gen(db, "e:1");
    auto r1 = build_differential(db, {xy, e}, {{e, xy, 1}}, {1, 0}, 0);
    auto r2 = build_differential(db, {xy, e}, {{e, yx, 1}}, {1, 0}, 0);
    auto r3 = build_differential(db, {yx, e}, {{e, yx, 1}}, {1, 0}, 0);
    CHECK(r1.matrix(1, 0) == 1);
    CHECK(r2.matrix(1, 0) == -1);
    CHECK(r3.matrix(1, 0) == 1);
}

TEST_CASE("homology examples") {
    IntMatrix z(3, 3);
    auto h = homology(z, {0, 0, 0}, 0);
    REQUIRE(h.size() == 1);
    CHECK(h[0].rank == 3);

    IntMatrix d(2, 2);
    d(1, 0) = 2;  // a in degree 1, b in degree 0
    auto h2 = homology(d, {1, 0}, 0);
    REQUIRE(h2.size() == 2);
    CHECK(h2[0].degree == 0);
    CHECK(h2[0].rank == 0);
    REQUIRE(h2[0].torsion.size() == 1);
    CHECK(h2[0].torsion[0] == 2);
    CHECK(h2[1].rank == 0);
    CHECK(h2[1].torsion.empty());

    d(1, 0) = 1;
    for (const auto& g : homology(d, {1, 0}, 0)) {
        CHECK(g.rank == 0);
        CHECK(g.torsion.empty());
    }
    IntMatrix bad(2, 2);
    bad(1, 0) = 1;
    bad(0, 1) = 1;
    CHECK_THROWS_AS(homology(bad, {1, 0}, 0), InvalidInput);
}

TEST_CASE("smith invariants") {
    IntMatrix m(2, 2);
    m(0, 0) = 2;
    m(1, 1) = 3;
    auto inv = smith_invariants(m);
    REQUIRE(inv.size() == 2);
    CHECK(inv[0] == 1);
    CHECK(inv[1] == 6);
}

TEST_CASE("homology agrees with rank-nullity on random complexes") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> entry(-3, 3), dim(1, 4), tors(1, 6);
    for (int trial = 0; trial < 40; ++trial) {
        // standard complex in degrees 2 > 1 > 0, conjugated by unimodular matrices
        const int n2 = dim(rng), n1 = dim(rng) + 2, n0 = dim(rng);
        const int n = n0 + n1 + n2;
        IntMatrix D(n, n);
        std::vector<long> deg(n);
        for (int i = 0; i < n; ++i) deg[i] = i < n0 ? 0 : (i < n0 + n1 ? 1 : 2);
        // pair some degree-1 generators with degree-0 ones and degree-2 with degree-1
        int used1 = 0;
        for (int i = 0; i < std::min(n0, n1 / 2); ++i) D(i, n0 + used1++) = tors(rng);
        for (int i = 0; i < n2 && used1 < n1; ++i) D(n0 + used1++, n0 + n1 + i) = tors(rng);
        // block diagonal change of basis P (degree-preserving), D' = P D P^{-1}
        // built as D' = P D Q with Q = P^{-1}: generate P from elementary moves and track the inverse
        IntMatrix P(n, n), Pinv(n, n);
        for (int i = 0; i < n; ++i) P(i, i) = Pinv(i, i) = 1;
        for (int s = 0; s < 12; ++s) {
            const int a = rng() % n, b = rng() % n;
            if (a == b || deg[a] != deg[b]) continue;
            const int f = entry(rng);
            for (int j = 0; j < n; ++j) P(a, j) += f * P(b, j);      // row_a += f row_b
            for (int i = 0; i < n; ++i) Pinv(i, b) -= f * Pinv(i, a); // col_b -= f col_a
        }
        const IntMatrix Dp = P * D * Pinv;
        const IntMatrix I = P * Pinv;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) REQUIRE(I(i, j) == (i == j ? 1 : 0));
        REQUIRE((Dp * Dp).is_zero());
        const auto groups = homology(Dp, deg, 0);
        for (const auto& g : groups) {
            auto block = [&](long from) {
                std::vector<int> src, dst;
                for (int i = 0; i < n; ++i) {
                    if (deg[i] == from) src.push_back(i);
                    if (deg[i] == from - 1) dst.push_back(i);
                }
                IntMatrix b(dst.size(), src.size());
                for (std::size_t r = 0; r < dst.size(); ++r)
                    for (std::size_t c = 0; c < src.size(); ++c) b(r, c) = Dp(dst[r], src[c]);
                return b;
            };
            long dimd = 0;
            for (int i = 0; i < n; ++i) dimd += deg[i] == g.degree;
            const IntMatrix out = block(g.degree), in = block(g.degree + 1);
            CHECK(g.rank == dimd - rational_rank(out) - rational_rank(in));
            for (long ell : {2L, 3L, 5L}) {
                long divisible = 0;
                for (const auto& t : g.torsion) divisible += (t % ell == 0);
                CHECK(divisible == rational_rank(in) - rank_mod(in, ell));
            }
        }
    }
}

TEST_CASE("relative degrees follow the index") {
    OrbitDb db({elliptic("g", 1.0, 0.3, 3)});
    std::vector<Generator> gens{gen(db, ""), gen(db, "g:1"), gen(db, "g:2")};
    const auto d = relative_degrees(db, gens, 0, 0, 0);
    // I(Theta, empty) = -(sum of weights of Theta)
    CHECK(d == std::vector<long>{0, -1, -2});
    const auto d2 = relative_degrees(db, gens, 0, 0, 2);
    CHECK(d2 == std::vector<long>{0, 1, 0});
}

TEST_CASE("database validation") {
    CHECK_THROWS_AS(OrbitDb({elliptic("a", 1, 0.3, 1), elliptic("a", 2, 0.3, 1)}), InvalidInput);
    OrbitRecord h = hyperbolic("h", 1, 1);
    h.n_max = 2;
    CHECK_THROWS_AS(OrbitDb({h}), InvalidInput);
    CHECK_THROWS_AS(OrbitDb({elliptic("a", 1, 0.5, 2)}), InvalidInput);
    CHECK_THROWS_AS(OrbitDb({elliptic("a", -1, 0.3, 2)}), InvalidInput);
    CHECK_THROWS_AS(OrbitSet::parse("a:1,a:2"), InvalidInput);
}
