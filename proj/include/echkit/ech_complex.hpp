#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "echkit/core.hpp"
#include "echkit/reeb_linops.hpp"

namespace echkit {

using BigInt = boost::multiprecision::cpp_int;

struct OrbitRecord {
    std::string id;
    double action = 0.0;
    OrbitKind kind = OrbitKind::Elliptic;
    double R = 0.0;  // elliptic rotation number
    int k = 0;       // hyperbolic rotation number
    std::vector<long> homology;  // free coordinates followed by torsion coordinates
    int n_max = 1;               // largest admissible multiplicity
    std::optional<PeriodicPair> pair;  // present when the classification was computed

    bool positive_hyperbolic() const { return kind == OrbitKind::Hyperbolic && k % 2 == 0; }
    void validate() const;
};

class OrbitDb {
public:
    OrbitDb() = default;
    explicit OrbitDb(std::vector<OrbitRecord> orbits, std::vector<long> torsion_orders = {});

    const OrbitRecord& at(const std::string& id) const;
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const std::vector<OrbitRecord>& orbits() const { return orbits_; }
    // orders of the trailing torsion coordinates of the homology vectors
    const std::vector<long>& torsion_orders() const { return torsion_; }
    std::size_t size() const { return orbits_.size(); }

private:
    std::vector<OrbitRecord> orbits_;
    std::vector<long> torsion_;
    std::map<std::string, std::size_t> index_;
};

// (orbit id, multiplicity) pairs, kept sorted by id.
struct OrbitSet {
    std::vector<std::pair<std::string, int>> pairs;

    static OrbitSet parse(const std::string& text);  // "g1:2,g2:1"; empty string is the empty set
    std::string str() const;
    void normalize();
    bool operator==(const OrbitSet& o) const { return pairs == o.pairs; }
    bool operator<(const OrbitSet& o) const { return pairs < o.pairs; }
};

void validate_orbit_set(const OrbitDb& db, const OrbitSet& s);
double total_action(const OrbitDb& db, const OrbitSet& s);
std::vector<long> total_class(const OrbitDb& db, const OrbitSet& s);

struct Generator {
    OrbitSet set;
    std::vector<std::string> ordering;  // positive hyperbolic members

    // orbit set with its positive hyperbolic members in lexicographic order
    static Generator canonical(const OrbitDb& db, OrbitSet s);
};

void validate_generator(const OrbitDb& db, const Generator& g);

struct Canonicalized {
    Generator gen;
    int sign = 1;
};

Canonicalized canonicalize(const Generator& g);

// Parity of the permutation sorting the sequence (entries must be distinct).
int permutation_sign(const std::vector<std::string>& seq);

struct SurfaceData {
    long q_z = 0;
    long c1_pairing = 0;  // <c1, Z>

    SurfaceData operator+(const SurfaceData& o) const { return {q_z + o.q_z, c1_pairing + o.c1_pairing}; }
    SurfaceData operator-() const { return {-q_z, -c1_pairing}; }
};

long z_weight(const OrbitRecord& orbit, int q, double tol = 1e-9);
long ech_index(const OrbitDb& db, const OrbitSet& minus, const OrbitSet& plus, const SurfaceData& z);

// gcd of the entries; 0 for the zero vector
long grading_modulus(const std::vector<long>& class_vector);

// Orbit sets of total action < L. A set with action within 1e-9 of L is an
// error unless allow_boundary is set, in which case it is simply excluded.
std::vector<OrbitSet> enumerate_generators(const OrbitDb& db, double L,
                                           const std::optional<std::vector<long>>& gamma_class = std::nullopt,
                                           bool allow_boundary = false);

// Integer matrix in row-major order.
struct IntMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<BigInt> a;

    IntMatrix() = default;
    IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}
    BigInt& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const BigInt& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    IntMatrix operator*(const IntMatrix& o) const;
    bool is_zero() const;
};

struct CountEntry {
    Generator to;    // Theta'
    Generator from;  // Theta
    BigInt sigma;
};

struct DifferentialReport {
    IntMatrix matrix;  // rows: targets Theta', columns: sources Theta
    std::vector<std::pair<std::size_t, std::size_t>> degree_violations;
    std::vector<std::pair<std::size_t, std::size_t>> action_violations;
    bool squares_to_zero = true;
    bool valid() const { return degree_violations.empty() && action_violations.empty() && squares_to_zero; }
};

DifferentialReport build_differential(const OrbitDb& db, const std::vector<Generator>& gens,
                                      const std::vector<CountEntry>& counts, const std::vector<long>& degrees, long p);

// Degrees relative to an anchor: deg(Theta) = anchor_degree + I(Theta, anchor; Z(Theta)),
// reduced into [0, p) when p > 0.
std::vector<long> relative_degrees(const OrbitDb& db, const std::vector<Generator>& gens, std::size_t anchor,
                                   long anchor_degree, long p,
                                   const std::vector<SurfaceData>& surfaces = {});

// Nonzero invariant factors (positive, each dividing the next).
std::vector<BigInt> smith_invariants(IntMatrix m);

struct HomologyGroup {
    long degree = 0;
    long rank = 0;
    std::vector<BigInt> torsion;
};

std::vector<HomologyGroup> homology(const IntMatrix& d, const std::vector<long>& degrees, long p);

}  // namespace echkit
