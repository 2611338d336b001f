#include "echkit/ech_complex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace echkit {

void OrbitRecord::validate() const {
    if (id.empty()) throw InvalidInput("orbit record: empty id");
    if (!(action > 0) || !std::isfinite(action)) throw InvalidInput("orbit " + id + ": action must be positive");
    if (kind == OrbitKind::Degenerate) throw InvalidInput("orbit " + id + ": degenerate orbits are not admissible");
    if (kind == OrbitKind::Hyperbolic && n_max != 1)
        throw InvalidInput("orbit " + id + ": hyperbolic multiplicity must be 1 (n_max)");
    if (n_max < 1) throw InvalidInput("orbit " + id + ": n_max must be positive");
    if (kind == OrbitKind::Elliptic) {
        const auto r = check_n_elliptic_R(R, n_max, 1e-9);
        if (!r.ok)
            throw InvalidInput("orbit " + id + ": q*R is an integer for q = " + std::to_string(*r.witness) +
                               " <= n_max (R)");
    }
}

OrbitDb::OrbitDb(std::vector<OrbitRecord> orbits, std::vector<long> torsion_orders)
    : orbits_(std::move(orbits)), torsion_(std::move(torsion_orders)) {
    std::size_t dim = orbits_.empty() ? 0 : orbits_.front().homology.size();
    for (std::size_t i = 0; i < orbits_.size(); ++i) {
        const auto& o = orbits_[i];
        o.validate();
        if (!index_.emplace(o.id, i).second) throw InvalidInput("duplicate orbit id " + o.id);
        if (o.homology.size() != dim)
            throw InvalidInput("orbit " + o.id + ": homology vector length differs from the other orbits");
    }
    if (torsion_.size() > dim) throw InvalidInput("orbit database: more torsion orders than homology coordinates");
    for (long t : torsion_)
        if (t < 2) throw InvalidInput("orbit database: torsion orders must be at least 2");
}

const OrbitRecord& OrbitDb::at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InvalidInput("unknown orbit id " + id);
    return orbits_[it->second];
}

OrbitSet OrbitSet::parse(const std::string& text) {
    OrbitSet s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty()) continue;
        const auto colon = item.find(':');
        std::string id = item.substr(0, colon);
        int m = 1;
        if (colon != std::string::npos) {
            try {
                std::size_t used = 0;
                m = std::stoi(item.substr(colon + 1), &used);
                if (used != item.size() - colon - 1) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw InvalidInput("orbit set: bad multiplicity in '" + item + "'");
            }
        }
        if (id.empty()) throw InvalidInput("orbit set: empty orbit id in '" + item + "'");
        s.pairs.emplace_back(id, m);
    }
    s.normalize();
    return s;
}

std::string OrbitSet::str() const {
    std::string out;
    for (const auto& [id, m] : pairs) {
        if (!out.empty()) out += ',';
        out += id + ':' + std::to_string(m);
    }
    return out;
}

void OrbitSet::normalize() {
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i)
        if (pairs[i].first == pairs[i - 1].first) throw InvalidInput("orbit set: orbit " + pairs[i].first + " repeated");
}

void validate_orbit_set(const OrbitDb& db, const OrbitSet& s) {
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
        const auto& [id, m] = s.pairs[i];
        const OrbitRecord& o = db.at(id);
        if (m < 1) throw InvalidInput("orbit set: multiplicity of " + id + " must be positive");
        if (o.kind == OrbitKind::Hyperbolic && m != 1)
            throw InvalidInput("orbit set: hyperbolic orbit " + id + " must have multiplicity 1");
        if (i > 0 && s.pairs[i - 1].first == id) throw InvalidInput("orbit set: orbit " + id + " repeated");
    }
}

double total_action(const OrbitDb& db, const OrbitSet& s) {
    double a = 0.0;
    for (const auto& [id, m] : s.pairs) a += m * db.at(id).action;
    return a;
}

std::vector<long> total_class(const OrbitDb& db, const OrbitSet& s) {
    const std::size_t dim = db.size() ? db.orbits().front().homology.size() : 0;
    std::vector<long> c(dim, 0);
    for (const auto& [id, m] : s.pairs) {
        const auto& h = db.at(id).homology;
        for (std::size_t i = 0; i < dim; ++i) c[i] += m * h[i];
    }
    const std::size_t nfree = dim - db.torsion_orders().size();
    for (std::size_t i = nfree; i < dim; ++i) {
        const long t = db.torsion_orders()[i - nfree];
        c[i] = ((c[i] % t) + t) % t;
    }
    return c;
}

Generator Generator::canonical(const OrbitDb& db, OrbitSet s) {
    s.normalize();
    Generator g;
    for (const auto& [id, m] : s.pairs)
        if (db.at(id).positive_hyperbolic()) g.ordering.push_back(id);
    g.set = std::move(s);
    return g;
}

void validate_generator(const OrbitDb& db, const Generator& g) {
    validate_orbit_set(db, g.set);
    std::vector<std::string> want;
    for (const auto& [id, m] : g.set.pairs)
        if (db.at(id).positive_hyperbolic()) want.push_back(id);
    std::vector<std::string> have = g.ordering;
    std::sort(have.begin(), have.end());
    if (have != want) throw InvalidInput("generator " + g.set.str() + ": ordering must list the positive hyperbolic members");
}

int permutation_sign(const std::vector<std::string>& seq) {
    int inv = 0;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j) {
            if (seq[i] == seq[j]) throw InvalidInput("permutation_sign: repeated entry " + seq[i]);
            if (seq[j] < seq[i]) ++inv;
        }
    return inv % 2 == 0 ? 1 : -1;
}

Canonicalized canonicalize(const Generator& g) {
    Canonicalized c;
    c.sign = permutation_sign(g.ordering);
    c.gen = g;
    c.gen.set.normalize();
    std::sort(c.gen.ordering.begin(), c.gen.ordering.end());
    return c;
}

long z_weight(const OrbitRecord& orbit, int q, double tol) {
    if (q < 1) throw InvalidInput("z_weight: q must be positive");
    if (orbit.kind == OrbitKind::Hyperbolic) {
        if (q != 1) throw InvalidInput("z_weight: hyperbolic orbit " + orbit.id + " only has q = 1");
        return orbit.k;
    }
    if (orbit.kind != OrbitKind::Elliptic) throw InvalidInput("z_weight: degenerate orbit " + orbit.id);
    const double x = q * orbit.R;
    if (std::abs(x - std::round(x)) < tol)
        throw InvalidInput("z_weight: q*R is an integer for orbit " + orbit.id + " (not n-elliptic)");
    return 1 + 2 * static_cast<long>(std::floor(x));
}

namespace {

long weight_sum(const OrbitDb& db, const OrbitSet& s) {
    long sum = 0;
    for (const auto& [id, m] : s.pairs) {
        const OrbitRecord& o = db.at(id);
        for (int q = 1; q <= m; ++q) sum += z_weight(o, q);
    }
    return sum;
}

}  // namespace

long ech_index(const OrbitDb& db, const OrbitSet& minus, const OrbitSet& plus, const SurfaceData& z) {
    validate_orbit_set(db, minus);
    validate_orbit_set(db, plus);
    return -z.c1_pairing + z.q_z + weight_sum(db, plus) - weight_sum(db, minus);
}

long grading_modulus(const std::vector<long>& v) {
    long g = 0;
    for (long x : v) g = std::gcd(g, std::abs(x));
    return g;
}

std::vector<OrbitSet> enumerate_generators(const OrbitDb& db, double L,
                                           const std::optional<std::vector<long>>& gamma_class,
                                           bool allow_boundary) {
    if (!(L > 0)) throw InvalidInput("enumerate_generators: L must be positive");
    const std::size_t dim = db.size() ? db.orbits().front().homology.size() : 0;
    std::vector<long> target;
    if (gamma_class) {
        if (db.size() && gamma_class->size() != dim)
            throw InvalidInput("enumerate_generators: class vector length does not match the database");
        target = *gamma_class;
        const std::size_t nfree = dim - db.torsion_orders().size();
        for (std::size_t i = nfree; i < target.size(); ++i) {
            const long t = db.torsion_orders()[i - nfree];
            target[i] = ((target[i] % t) + t) % t;
        }
    }
    for (const auto& o : db.orbits())
        if (o.kind == OrbitKind::Elliptic && (o.n_max + 1) * o.action < L - 1e-9)
            throw InvalidInput("enumerate_generators: orbit " + o.id + " admits multiplicity " +
                               std::to_string(o.n_max + 1) + " below L, beyond its n_max");

    std::vector<const OrbitRecord*> orbs;
    for (const auto& o : db.orbits()) orbs.push_back(&o);
    std::sort(orbs.begin(), orbs.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<OrbitSet> out;
    OrbitSet cur;
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double act) {
        if (i == orbs.size()) {
            if (gamma_class && !db.orbits().empty() && total_class(db, cur) != target) return;
            if (gamma_class && db.orbits().empty() && grading_modulus(*gamma_class) != 0) return;
            if (std::abs(act - L) < 1e-9) {
                if (allow_boundary) return;
                throw InvalidInput("enumerate_generators: orbit set " + cur.str() + " has action equal to L");
            }
            out.push_back(cur);
            return;
        }
        const OrbitRecord& o = *orbs[i];
        const int mmax = o.kind == OrbitKind::Hyperbolic ? 1 : o.n_max;
        rec(i + 1, act);
        for (int m = 1; m <= mmax; ++m) {
            const double a = act + m * o.action;
            if (a >= L + 1e-9) break;  // sets within 1e-9 of L are handled at the leaf
            cur.pairs.emplace_back(o.id, m);
            rec(i + 1, a);
            cur.pairs.pop_back();
        }
    };
    rec(0, 0.0);
    std::sort(out.begin(), out.end(), [&](const OrbitSet& a, const OrbitSet& b) {
        const double xa = total_action(db, a), xb = total_action(db, b);
        if (xa != xb) return xa < xb;
        return a < b;
    });
    return out;
}

IntMatrix IntMatrix::operator*(const IntMatrix& o) const {
    if (cols != o.rows) throw InvalidInput("IntMatrix: dimension mismatch");
    IntMatrix r(rows, o.cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) {
            const BigInt& x = (*this)(i, k);
            if (x == 0) continue;
            for (std::size_t j = 0; j < o.cols; ++j)
                if (o(k, j) != 0) r(i, j) += x * o(k, j);
        }
    return r;
}

bool IntMatrix::is_zero() const {
    return std::all_of(a.begin(), a.end(), [](const BigInt& x) { return x == 0; });
}

DifferentialReport build_differential(const OrbitDb& db, const std::vector<Generator>& gens,
                                      const std::vector<CountEntry>& counts, const std::vector<long>& degrees, long p) {
    if (degrees.size() != gens.size()) throw InvalidInput("build_differential: one degree per generator required");
    if (p < 0) throw InvalidInput("build_differential: modulus must be nonnegative");
    std::map<OrbitSet, std::size_t> index;
    std::vector<int> base_sign(gens.size());
    std::vector<double> action(gens.size());
    for (std::size_t i = 0; i < gens.size(); ++i) {
        validate_generator(db, gens[i]);
        const auto c = canonicalize(gens[i]);
        if (!index.emplace(c.gen.set, i).second)
            throw InvalidInput("build_differential: generator " + c.gen.set.str() + " listed twice");
        base_sign[i] = c.sign;
        action[i] = total_action(db, c.gen.set);
    }
    auto locate = [&](const Generator& g) -> std::pair<std::size_t, int> {
        const auto c = canonicalize(g);
        auto it = index.find(c.gen.set);
        if (it == index.end()) throw InvalidInput("build_differential: unknown generator " + c.gen.set.str());
        validate_generator(db, g);
        return {it->second, c.sign * base_sign[it->second]};
    };
    DifferentialReport rep;
    rep.matrix = IntMatrix(gens.size(), gens.size());
    for (const auto& e : counts) {
        const auto [j, sj] = locate(e.to);
        const auto [i, si] = locate(e.from);
        rep.matrix(j, i) += e.sigma * (sj * si);
    }
    for (std::size_t j = 0; j < gens.size(); ++j)
        for (std::size_t i = 0; i < gens.size(); ++i) {
            if (rep.matrix(j, i) == 0) continue;
            const long shift = degrees[j] - degrees[i] + 1;
            const bool bad_degree = p == 0 ? shift != 0 : (shift % p) != 0;
            if (bad_degree) rep.degree_violations.emplace_back(j, i);
            if (action[j] > action[i] + 1e-9) rep.action_violations.emplace_back(j, i);
        }
    rep.squares_to_zero = (rep.matrix * rep.matrix).is_zero();
    return rep;
}

std::vector<long> relative_degrees(const OrbitDb& db, const std::vector<Generator>& gens, std::size_t anchor,
                                   long anchor_degree, long p, const std::vector<SurfaceData>& surfaces) {
    if (anchor >= gens.size()) throw InvalidInput("relative_degrees: anchor out of range");
    if (!surfaces.empty() && surfaces.size() != gens.size())
        throw InvalidInput("relative_degrees: one surface per generator required");
    std::vector<long> d(gens.size());
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const SurfaceData z = surfaces.empty() ? SurfaceData{} : surfaces[i];
        long v = anchor_degree + ech_index(db, gens[i].set, gens[anchor].set, z);
        if (p > 0) v = ((v % p) + p) % p;
        d[i] = v;
    }
    return d;
}

std::vector<BigInt> smith_invariants(IntMatrix m) {
    const std::size_t R = m.rows, C = m.cols;
    std::vector<BigInt> out;
    auto swap_rows = [&](std::size_t a, std::size_t b) {
        if (a != b)
            for (std::size_t j = 0; j < C; ++j) std::swap(m(a, j), m(b, j));
    };
    auto swap_cols = [&](std::size_t a, std::size_t b) {
        if (a != b)
            for (std::size_t i = 0; i < R; ++i) std::swap(m(i, a), m(i, b));
    };
    for (std::size_t t = 0; t < std::min(R, C); ++t) {
        // smallest nonzero entry of the remaining block becomes the pivot
        bool found = false;
        std::size_t pi = t, pj = t;
        BigInt best;
        for (std::size_t i = t; i < R; ++i)
            for (std::size_t j = t; j < C; ++j)
                if (m(i, j) != 0 && (!found || abs(m(i, j)) < best)) {
                    best = abs(m(i, j));
                    pi = i;
                    pj = j;
                    found = true;
                }
        if (!found) break;
        swap_rows(t, pi);
        swap_cols(t, pj);
        for (;;) {
            bool clean = true;
            for (std::size_t i = t + 1; i < R; ++i) {
                if (m(i, t) == 0) continue;
                const BigInt q = m(i, t) / m(t, t);
                for (std::size_t j = t; j < C; ++j) m(i, j) -= q * m(t, j);
                if (m(i, t) != 0) clean = false;
            }
            for (std::size_t j = t + 1; j < C; ++j) {
                if (m(t, j) == 0) continue;
                const BigInt q = m(t, j) / m(t, t);
                for (std::size_t i = t; i < R; ++i) m(i, j) -= q * m(i, t);
                if (m(t, j) != 0) clean = false;
            }
            if (!clean) {
                // move the smallest remainder in the pivot row/column to the pivot
                std::size_t bi = t, bj = t;
                BigInt b = abs(m(t, t));
                for (std::size_t i = t + 1; i < R; ++i)
                    if (m(i, t) != 0 && abs(m(i, t)) < b) { b = abs(m(i, t)); bi = i; bj = t; }
                for (std::size_t j = t + 1; j < C; ++j)
                    if (m(t, j) != 0 && abs(m(t, j)) < b) { b = abs(m(t, j)); bi = t; bj = j; }
                swap_rows(t, bi);
                swap_cols(t, bj);
                continue;
            }
            // enforce divisibility of the remaining block by the pivot
            bool divides = true;
            for (std::size_t i = t + 1; i < R && divides; ++i)
                for (std::size_t j = t + 1; j < C; ++j)
                    if (m(i, j) % m(t, t) != 0) {
                        for (std::size_t jj = t; jj < C; ++jj) m(t, jj) += m(i, jj);
                        divides = false;
                        break;
                    }
            if (divides) break;
        }
        out.push_back(abs(m(t, t)));
    }
    return out;
}

std::vector<HomologyGroup> homology(const IntMatrix& d, const std::vector<long>& degrees, long p) {
    const std::size_t n = degrees.size();
    if (d.rows != n || d.cols != n) throw InvalidInput("homology: differential must be square with one degree per generator");
    if (p < 0) throw InvalidInput("homology: modulus must be nonnegative");
    if (!(d * d).is_zero()) throw InvalidInput("homology: differential does not square to zero");
    auto red = [p](long v) { return p > 0 ? ((v % p) + p) % p : v; };
    std::map<long, std::vector<std::size_t>> by_degree;
    for (std::size_t i = 0; i < n; ++i) by_degree[red(degrees[i])].push_back(i);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (d(j, i) != 0 && red(degrees[j]) != red(degrees[i] - 1))
                throw InvalidInput("homology: differential does not lower the degree by one");
    auto block = [&](long deg) {  // boundary map from degree deg to deg - 1
        const auto src = by_degree.count(red(deg)) ? by_degree[red(deg)] : std::vector<std::size_t>{};
        const auto dst = by_degree.count(red(deg - 1)) ? by_degree[red(deg - 1)] : std::vector<std::size_t>{};
        IntMatrix b(dst.size(), src.size());
        for (std::size_t r = 0; r < dst.size(); ++r)
            for (std::size_t c = 0; c < src.size(); ++c) b(r, c) = d(dst[r], src[c]);
        return b;
    };
    std::vector<HomologyGroup> out;
    for (const auto& [deg, idx] : by_degree) {
        const auto out_inv = smith_invariants(block(deg));
        const auto in_inv = smith_invariants(block(deg + 1));
        HomologyGroup g;
        g.degree = deg;
        g.rank = static_cast<long>(idx.size()) - static_cast<long>(out_inv.size()) - static_cast<long>(in_inv.size());
        for (const auto& v : in_inv)
            if (v > 1) g.torsion.push_back(v);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace echkit
