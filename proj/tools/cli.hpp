#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echkit/ech_complex.hpp"
#include "echkit/reeb_linops.hpp"

namespace echkit::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct Database {
    OrbitDb db;
    std::optional<double> L;
    std::optional<std::vector<long>> gamma;
    std::optional<std::vector<long>> grading_class;  // class vector whose divisibility is p
};

// Parse and validate; errors name the orbit id and field.
Database parse_database(const json& j);
Database load_database(const std::string& path);
json to_json(const Database& d);
void save_database(const Database& d, const std::string& path);

// Write via a temporary file in the same directory and rename.
void write_atomic(const std::string& path, const std::string& content);

// Pair specs: elliptic:R=0.3, hyperbolic:k=2,eps=0.05 (alias hyperbolic-canonical),
// constant:nu=0.15,mu_re=0,mu_im=0.1, or file:path.json with sample arrays.
PeriodicPair parse_pair(const std::string& spec);

// Complex lists such as "0, 0.5+0.2i, -1i".
std::vector<cplx> parse_complex_list(const std::string& text);
cplx parse_complex(const std::string& text);

// kind: "radial" (series f against r), "trajectory" (sigma_1 in the plane),
// "heat" (grid values) or "auto" (all present). Returns the files written.
// Throws InvalidInput("nothing to plot") when the report has no such series.
std::vector<std::string> emit_plots(const json& report, const std::string& kind, const std::string& dir,
                                    const std::string& stem);

// Runs a subcommand. Exit code 0 on pass, 1 on a fail verdict, 2 on errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace echkit::cli
