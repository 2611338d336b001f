#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <boost/crc.hpp>

#include "echkit/approx_forms.hpp"
#include "echkit/local_model.hpp"
#include "echkit/moduli.hpp"
#include "echkit/vortex.hpp"

namespace echkit::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// parsing helpers

cplx parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw InvalidInput("empty complex number");
    const bool imag = s.back() == 'i' || s.back() == 'j';
    if (imag) s.pop_back();
    // split at the last sign that is not the leading sign or an exponent sign
    std::size_t split = std::string::npos;
    for (std::size_t k = 1; k < s.size(); ++k)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') split = k;
    auto number = [&](const std::string& part) {
        if (part == "" || part == "+") return 1.0;
        if (part == "-") return -1.0;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            throw InvalidInput("cannot parse complex number '" + text + "'");
        }
        if (used != part.size()) throw InvalidInput("cannot parse complex number '" + text + "'");
        return v;
    };
    if (!imag) return {number(s), 0.0};
    if (split == std::string::npos) return {0.0, number(s)};
    return {number(s.substr(0, split)), number(s.substr(split))};
}

std::vector<cplx> parse_complex_list(const std::string& text) {
    std::vector<cplx> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(parse_complex(item));
    }
    return out;
}

namespace {

std::map<std::string, std::string> parse_keyvals(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidInput("expected key=value in '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

double number_of(const std::map<std::string, std::string>& kv, const std::string& key, std::optional<double> def = {}) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        if (def) return *def;
        throw InvalidInput("missing parameter '" + key + "'");
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("parameter '" + key + "' is not a number");
    }
}

std::vector<double> doubles_of(const json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + " must be an array");
    std::vector<double> v;
    for (const auto& e : j) {
        if (!e.is_number()) throw InvalidInput(what + " must hold numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

PeriodicPair pair_from_samples(const json& p, const std::string& where) {
    for (const char* key : {"nu_samples", "mu_re_samples", "mu_im_samples"})
        if (!p.contains(key)) throw InvalidInput(where + ": pair.samples missing " + std::string(key));
    const auto nu = doubles_of(p["nu_samples"], where + ": nu_samples");
    const auto re = doubles_of(p["mu_re_samples"], where + ": mu_re_samples");
    const auto im = doubles_of(p["mu_im_samples"], where + ": mu_im_samples");
    if (re.size() != nu.size() || im.size() != nu.size()) throw InvalidInput(where + ": sample arrays differ in length");
    std::vector<cplx> mu(nu.size());
    for (std::size_t k = 0; k < nu.size(); ++k) mu[k] = {re[k], im[k]};
    return PeriodicPair(nu, mu);
}

}  // namespace

PeriodicPair parse_pair(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "file") {
        std::ifstream in(rest);
        if (!in) throw InvalidInput("cannot open pair file " + rest);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidInput("pair file " + rest + ": " + e.what());
        }
        return pair_from_samples(j, rest);
    }
    const auto kv = rest.empty() ? std::map<std::string, std::string>{} : parse_keyvals(rest);
    if (kind == "elliptic" || kind == "elliptic-canonical") return PeriodicPair::elliptic_canonical(number_of(kv, "R"));
    if (kind == "hyperbolic" || kind == "hyperbolic-canonical") {
        const double k = number_of(kv, "k");
        if (k != std::round(k)) throw InvalidInput("k must be an integer");
        return PeriodicPair::hyperbolic_canonical(static_cast<int>(k), number_of(kv, "eps"));
    }
    if (kind == "constant")
        return PeriodicPair::constant(number_of(kv, "nu", 0.0), cplx(number_of(kv, "mu_re", 0.0), number_of(kv, "mu_im", 0.0)));
    throw InvalidInput("unknown pair kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// database

namespace {

std::vector<long> longs_of(const json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + " must be an array of integers");
    std::vector<long> v;
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw InvalidInput(what + " must be an array of integers");
        v.push_back(e.get<long>());
    }
    return v;
}

double action_of(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = j.get<std::string>();
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw InvalidInput(where + ": action must be a number or a decimal string");
}

std::string exact_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Database parse_database(const json& j) {
    if (!j.is_object()) throw InvalidInput("database must be a JSON object");
    if (!j.contains("version")) throw InvalidInput("database: missing schema version");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kSchemaVersion)
        throw InvalidInput("database: unknown schema version " + j["version"].dump());
    if (!j.contains("orbits") || !j["orbits"].is_array()) throw InvalidInput("database: missing orbits array");
    std::vector<OrbitRecord> records;
    std::map<std::string, int> seen;
    for (const auto& o : j["orbits"]) {
        if (!o.contains("id") || !o["id"].is_string()) throw InvalidInput("database: orbit without string id");
        OrbitRecord r;
        r.id = o["id"].get<std::string>();
        const std::string where = "orbit " + r.id;
        if (seen[r.id]++) throw InvalidInput("database: duplicate orbit id " + r.id);
        if (!o.contains("action")) throw InvalidInput(where + ": missing field action");
        r.action = action_of(o["action"], where);
        r.homology = o.contains("homology") ? longs_of(o["homology"], where + ": homology") : std::vector<long>{};
        if (o.contains("n_max")) {
            if (!o["n_max"].is_number_integer()) throw InvalidInput(where + ": n_max must be an integer");
            r.n_max = o["n_max"].get<int>();
        }
        if (!o.contains("pair") || !o["pair"].is_object()) throw InvalidInput(where + ": missing field pair");
        const auto& p = o["pair"];
        if (p.contains("nu_samples")) {
            r.pair = pair_from_samples(p, where);
            const auto c = classify(*r.pair);
            r.kind = c.kind;
            r.R = c.rotation_R;
            r.k = c.rotation_k;
        } else {
            if (!p.contains("kind") || !p["kind"].is_string()) throw InvalidInput(where + ": pair.kind missing");
            const std::string kind = p["kind"].get<std::string>();
            if (kind == "el") {
                if (!p.contains("R") || !p["R"].is_number()) throw InvalidInput(where + ": pair.R missing");
                r.kind = OrbitKind::Elliptic;
                r.R = p["R"].get<double>();
            } else if (kind == "hyp") {
                if (!p.contains("k") || !p["k"].is_number_integer()) throw InvalidInput(where + ": pair.k missing");
                r.kind = OrbitKind::Hyperbolic;
                r.k = p["k"].get<int>();
                if (p.contains("positive") && p["positive"].get<bool>() != r.positive_hyperbolic())
                    throw InvalidInput(where + ": pair.positive disagrees with the parity of k");
            } else {
                throw InvalidInput(where + ": pair.kind must be el or hyp");
            }
        }
        records.push_back(std::move(r));
    }
    Database d;
    const std::vector<long> torsion = j.contains("torsion") ? longs_of(j["torsion"], "torsion") : std::vector<long>{};
    d.db = OrbitDb(std::move(records), torsion);
    if (j.contains("L")) {
        if (!j["L"].is_number()) throw InvalidInput("database: L must be a number");
        d.L = j["L"].get<double>();
    }
    if (j.contains("gamma")) d.gamma = longs_of(j["gamma"], "gamma");
    if (j.contains("grading_class")) d.grading_class = longs_of(j["grading_class"], "grading_class");
    return d;
}

Database load_database(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open database " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return parse_database(j);
}

json to_json(const Database& d) {
    json j;
    j["version"] = kSchemaVersion;
    json orbits = json::array();
    for (const auto& r : d.db.orbits()) {
        json o;
        o["id"] = r.id;
        o["action"] = exact_decimal(r.action);
        if (r.pair) {
            json p;
            std::vector<double> re, im;
            for (const auto& m : r.pair->mu_samples()) {
                re.push_back(m.real());
                im.push_back(m.imag());
            }
            p["nu_samples"] = r.pair->nu_samples();
            p["mu_re_samples"] = re;
            p["mu_im_samples"] = im;
            o["pair"] = p;
        } else if (r.kind == OrbitKind::Elliptic) {
            o["pair"] = {{"kind", "el"}, {"R", r.R}};
        } else {
            o["pair"] = {{"kind", "hyp"}, {"k", r.k}, {"positive", r.positive_hyperbolic()}};
        }
        o["homology"] = r.homology;
        o["n_max"] = r.n_max;
        orbits.push_back(o);
    }
    j["orbits"] = orbits;
    if (!d.db.torsion_orders().empty()) j["torsion"] = d.db.torsion_orders();
    if (d.L) j["L"] = *d.L;
    if (d.gamma) j["gamma"] = *d.gamma;
    if (d.grading_class) j["grading_class"] = *d.grading_class;
    return j;
}

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw InvalidInput("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

void save_database(const Database& d, const std::string& path) { write_atomic(path, to_json(d).dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// plots

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double W = 480, H = 360, M = 50;
    double px(double x) const { return M + (x - x0) / (x1 - x0) * (W - 2 * M); }
    double py(double y) const { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); }
};

Frame frame_of(const std::vector<double>& x, const std::vector<double>& y) {
    auto [xa, xb] = std::minmax_element(x.begin(), x.end());
    auto [ya, yb] = std::minmax_element(y.begin(), y.end());
    Frame f{*xa, *xb, *ya, *yb};
    if (f.x1 - f.x0 < 1e-12) f.x1 = f.x0 + 1;
    if (f.y1 - f.y0 < 1e-12) f.y1 = f.y0 + 1;
    return f;
}

std::string line_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel) {
    const Frame f = frame_of(x, y);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::W << "\" height=\"" << Frame::H << "\">\n";
    s << "<rect x=\"" << Frame::M << "\" y=\"" << Frame::M << "\" width=\"" << Frame::W - 2 * Frame::M << "\" height=\""
      << Frame::H - 2 * Frame::M << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << Frame::W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    s << "<text x=\"" << Frame::W / 2 << "\" y=\"" << Frame::H - 10 << "\" text-anchor=\"middle\">" << xlabel << " ["
      << fmt(f.x0) << ", " << fmt(f.x1) << "]</text>\n";
    s << "<text x=\"12\" y=\"" << Frame::H / 2 << "\" transform=\"rotate(-90 12 " << Frame::H / 2
      << ")\" text-anchor=\"middle\">" << ylabel << " [" << fmt(f.y0) << ", " << fmt(f.y1) << "]</text>\n";
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < x.size(); ++k) s << fmt(f.px(x[k])) << ',' << fmt(f.py(y[k])) << ' ';
    s << "\"/>\n</svg>\n";
    return s.str();
}

std::string heat_svg(const std::vector<std::vector<double>>& rows, const std::string& title) {
    const std::size_t ny = rows.size(), nx = ny ? rows[0].size() : 0;
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows)
        for (double v : r) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi - lo < 1e-300) hi = lo + 1;
    const double cell = 360.0 / std::max<std::size_t>(nx, ny);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"420\">\n";
    s << "<text x=\"200\" y=\"20\" text-anchor=\"middle\">" << title << " [" << fmt(lo) << ", " << fmt(hi) << "]</text>\n";
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const int g = static_cast<int>(std::lround(255 * (rows[j][i] - lo) / (hi - lo)));
            s << "<rect x=\"" << fmt(20 + i * cell) << "\" y=\"" << fmt(40 + (ny - 1 - j) * cell) << "\" width=\""
              << fmt(cell) << "\" height=\"" << fmt(cell) << "\" fill=\"rgb(" << g << ',' << g << ',' << 255 - g
              << ")\"/>\n";
        }
    s << "</svg>\n";
    return s.str();
}

}  // namespace

std::vector<std::string> emit_plots(const json& report, const std::string& kind, const std::string& dir,
                                    const std::string& stem) {
    const json& o = report.contains("outputs") ? report["outputs"] : report;
    const json series = o.contains("series") ? o["series"] : json::object();
    std::vector<std::string> files;
    auto want = [&](const std::string& k) { return kind == k || kind == "auto"; };
    if (kind != "auto" && kind != "radial" && kind != "trajectory" && kind != "heat")
        throw InvalidInput("unknown plot kind '" + kind + "'");
    if (want("radial") && series.contains("radial")) {
        const auto& r = series["radial"];
        const auto path = (fs::path(dir) / (stem + ".radial.svg")).string();
        write_atomic(path, line_svg(r["r"].get<std::vector<double>>(), r["f"].get<std::vector<double>>(),
                                    "radial profile", "r", "f(r)"));
        files.push_back(path);
    }
    if (want("trajectory") && series.contains("trajectory")) {
        const auto& t = series["trajectory"];
        const auto path = (fs::path(dir) / (stem + ".trajectory.svg")).string();
        write_atomic(path, line_svg(t["re_sigma1"].get<std::vector<double>>(), t["im_sigma1"].get<std::vector<double>>(),
                                    "trajectory", "Re sigma_1", "Im sigma_1"));
        files.push_back(path);
    }
    if (want("heat") && series.contains("heat")) {
        const auto& h = series["heat"];
        const auto path = (fs::path(dir) / (stem + ".heat.svg")).string();
        write_atomic(path, heat_svg(h["values"].get<std::vector<std::vector<double>>>(), h.value("title", "field")));
        files.push_back(path);
    }
    if (files.empty()) throw InvalidInput("nothing to plot");
    return files;
}

// ---------------------------------------------------------------------------
// subcommands

namespace {

struct Options {
    std::string db, out = ".", id, pair, from, to, zeros, moments, modes = "1:1", counts, model = "reduced", tables;
    std::string theta_minus, theta_plus;
    int grid = 0, steps = 0, q = 1, n_modes = 64, m = 1, n = 1, q_max = 3, k = 0, Q = 50, tau_grid = 11, nxy = 0, nt = 0;
    unsigned seed = 1;
    double tol = 0, window = 2.0, L = 0, nu = 0.15, mu_re = 0, mu_im = 0, r_lo = 3, r_hi = 6, half_width = 0.6;
    double R = 0.3, rho = 0.05, ell = kTwoPi, hs = 0.25, s_min = 0, eps = 0.05, crho = 1e-4, S = 4;
    long qz = 0, c1 = 0, anchor_degree = 0, p = -1;
    bool plots = false, allow_boundary = false;
};

struct Outcome {
    json outputs = json::object();
    bool pass = true;
};

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json cplx_list(const std::vector<cplx>& v) {
    json a = json::array();
    for (auto z : v) a.push_back(cplx_json(z));
    return a;
}

std::string big(const BigInt& b) { return b.str(); }

PeriodicPair pair_of(const Options& o) {
    if (!o.pair.empty()) return parse_pair(o.pair);
    if (!o.db.empty() && !o.id.empty()) {
        const auto d = load_database(o.db);
        const auto& r = d.db.at(o.id);
        if (r.pair) return *r.pair;
        if (r.kind == OrbitKind::Elliptic) return PeriodicPair::elliptic_canonical(r.R);
        throw InvalidInput("orbit " + o.id + " has no pair samples");
    }
    throw InvalidInput("a pair is required (--pair, or --db with --id)");
}

json classification_json(const Classification& c) {
    return {{"kind", to_string(c.kind)},
            {"rotation_R", c.rotation_R},
            {"rotation_k", c.rotation_k},
            {"positive_hyperbolic", c.positive_hyperbolic},
            {"trace", c.trace},
            {"lift", c.lift},
            {"lift_convention", c.lift_convention}};
}

ClassifyOptions classify_options(const Options& o) {
    ClassifyOptions c;
    if (o.steps > 0) c.steps = o.steps;
    if (o.tol > 0) c.degeneracy_tol = o.tol;
    return c;
}

Outcome cmd_classify(const Options& o) {
    Outcome r;
    if (o.pair.empty() && !o.db.empty()) {
        const auto d = load_database(o.db);
        const auto& rec = d.db.at(o.id);
        if (!rec.pair) {
            r.outputs = {{"id", rec.id},
                         {"kind", to_string(rec.kind)},
                         {"rotation_R", rec.R},
                         {"rotation_k", rec.k},
                         {"positive_hyperbolic", rec.positive_hyperbolic()},
                         {"source", "database"}};
            return r;
        }
    }
    r.outputs = classification_json(classify(pair_of(o), classify_options(o)));
    if (!o.id.empty()) r.outputs["id"] = o.id;
    return r;
}

Outcome cmd_rotation(const Options& o) {
    Outcome r;
    const auto c = classify(pair_of(o), classify_options(o));
    r.outputs["kind"] = to_string(c.kind);
    if (c.kind == OrbitKind::Hyperbolic) r.outputs["rotation_k"] = c.rotation_k;
    else r.outputs["rotation_R"] = c.rotation_R;
    r.outputs["lift_convention"] = c.lift_convention;
    return r;
}

Outcome cmd_spectrum(const Options& o) {
    Outcome r;
    const auto s = spectrum(pair_of(o), o.q, o.n_modes);
    json ev = json::array(), per = json::array();
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
        if (std::abs(s.eigenvalues[k]) <= o.window) {
            ev.push_back(s.eigenvalues[k]);
            per.push_back(s.primitive_period[k]);
        }
    r.outputs = {{"q", s.q}, {"n_modes", s.n_modes}, {"eigenvalues", ev}, {"primitive_period", per},
                 {"min_abs", s.min_abs()}, {"window", o.window}, {"warnings", s.warnings}};
    return r;
}

Outcome cmd_spectral_flow(const Options& o) {
    Outcome r;
    const auto a = parse_pair(o.from), b = parse_pair(o.to);
    const int samples = o.steps > 0 ? o.steps : 41;
    const auto fam = OperatorFamily::from_pairs([&](double s) { return a.lerp(b, s); }, o.q, o.n_modes, samples);
    SpectralFlowOptions opt;
    if (o.tol > 0) opt.tol = o.tol;
    const auto res = spectral_flow_detail(fam, opt);
    json cr = json::array();
    for (const auto& c : res.crossings) cr.push_back({{"tau", c.tau}, {"sign", c.sign}, {"multiplicity", c.multiplicity}});
    r.outputs = {{"flow", res.flow}, {"eigenvalue_count", res.eigenvalue_count}, {"crossings", cr}};
    return r;
}

Outcome cmd_verify_homotopy(const Options& o) {
    Outcome r;
    const auto start = pair_of(o);
    const auto copt = classify_options(o);
    const auto target = o.to.empty() ? canonical_target(start, copt) : parse_pair(o.to);
    const auto expect = classify(start, copt);
    HomotopyOptions hopt;
    hopt.classify = copt;
    const auto rep = verify_homotopy(linear_path(start, target, o.grid > 0 ? o.grid : 41), expect, hopt);
    r.pass = rep.pass;
    r.outputs = {{"pass", rep.pass}, {"entries", rep.entries.size()}, {"reason", rep.reason},
                 {"expected", classification_json(expect)}};
    if (rep.first_failure) r.outputs["first_failure"] = *rep.first_failure;
    return r;
}

Database need_db(const Options& o) {
    if (o.db.empty()) throw InvalidInput("--db is required");
    return load_database(o.db);
}

Outcome cmd_ech_index(const Options& o) {
    Outcome r;
    const auto d = need_db(o);
    const auto minus = OrbitSet::parse(o.theta_minus), plus = OrbitSet::parse(o.theta_plus);
    r.outputs = {{"index", ech_index(d.db, minus, plus, SurfaceData{o.qz, o.c1})}};
    return r;
}

double L_of(const Options& o, const Database& d) {
    if (o.L > 0) return o.L;
    if (d.L) return *d.L;
    throw InvalidInput("an action bound is required (--L or database field L)");
}

Outcome cmd_enumerate(const Options& o) {
    Outcome r;
    const auto d = need_db(o);
    const double L = L_of(o, d);
    const auto sets = enumerate_generators(d.db, L, d.gamma, o.allow_boundary);
    json g = json::array();
    for (const auto& s : sets) g.push_back({{"set", s.str()}, {"action", exact_decimal(total_action(d.db, s))}});
    r.outputs = {{"L", L}, {"count", sets.size()}, {"generators", g}};
    return r;
}

struct Complex {
    std::vector<Generator> gens;
    std::vector<long> degrees;
    long p = 0;
    DifferentialReport report;
};

Complex assemble(const Options& o) {
    const auto d = need_db(o);
    const double L = L_of(o, d);
    Complex c;
    for (const auto& s : enumerate_generators(d.db, L, d.gamma, o.allow_boundary))
        c.gens.push_back(Generator::canonical(d.db, s));
    if (c.gens.empty()) throw InvalidInput("no generators below the action bound");
    c.p = o.p >= 0 ? o.p : d.grading_class ? grading_modulus(*d.grading_class) : 0;
    c.degrees = relative_degrees(d.db, c.gens, 0, o.anchor_degree, c.p);
    std::vector<CountEntry> counts;
    if (!o.counts.empty()) {
        std::ifstream in(o.counts);
        if (!in) throw InvalidInput("cannot open count table " + o.counts);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidInput(o.counts + ": parse error at byte " + std::to_string(e.byte));
        }
        if (!j.contains("counts") || !j["counts"].is_array()) throw InvalidInput(o.counts + ": missing counts array");
        for (const auto& e : j["counts"]) {
            auto gen = [&](const char* key, const char* order) {
                if (!e.contains(key) || !e[key].is_string()) throw InvalidInput(o.counts + ": entry without " + key);
                Generator g = Generator::canonical(d.db, OrbitSet::parse(e[key].get<std::string>()));
                if (e.contains(order)) g.ordering = e[order].get<std::vector<std::string>>();
                return g;
            };
            CountEntry ce;
            ce.from = gen("from", "from_order");
            ce.to = gen("to", "to_order");
            if (!e.contains("sigma")) throw InvalidInput(o.counts + ": entry without sigma");
            ce.sigma = e["sigma"].is_string() ? BigInt(e["sigma"].get<std::string>()) : BigInt(e["sigma"].get<long long>());
            counts.push_back(std::move(ce));
        }
    }
    c.report = build_differential(d.db, c.gens, counts, c.degrees, c.p);
    return c;
}

json complex_json(const Complex& c) {
    json gens = json::array(), mat = json::array();
    for (std::size_t k = 0; k < c.gens.size(); ++k) gens.push_back({{"set", c.gens[k].set.str()}, {"degree", c.degrees[k]}});
    for (std::size_t i = 0; i < c.report.matrix.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < c.report.matrix.cols; ++j) row.push_back(big(c.report.matrix(i, j)));
        mat.push_back(row);
    }
    auto pairs = [](const auto& v) {
        json a = json::array();
        for (const auto& [i, j] : v) a.push_back({i, j});
        return a;
    };
    return {{"p", c.p}, {"generators", gens}, {"matrix", mat},
            {"degree_violations", pairs(c.report.degree_violations)},
            {"action_violations", pairs(c.report.action_violations)},
            {"squares_to_zero", c.report.squares_to_zero}, {"valid", c.report.valid()}};
}

Outcome cmd_differential(const Options& o) {
    Outcome r;
    const auto c = assemble(o);
    r.outputs = complex_json(c);
    r.pass = c.report.valid();
    return r;
}

Outcome cmd_homology(const Options& o) {
    Outcome r;
    const auto c = assemble(o);
    r.pass = c.report.valid();
    r.outputs["valid"] = c.report.valid();
    if (!r.pass) {
        r.outputs["differential"] = complex_json(c);
        return r;
    }
    json groups = json::array();
    for (const auto& g : homology(c.report.matrix, c.degrees, c.p)) {
        json t = json::array();
        for (const auto& x : g.torsion) t.push_back(big(x));
        groups.push_back({{"degree", g.degree}, {"rank", g.rank}, {"torsion", t}});
    }
    r.outputs["p"] = c.p;
    r.outputs["groups"] = groups;
    return r;
}

VortexSolution vortex_of(const Options& o, std::vector<cplx> zeros) {
    VortexConfig cfg{std::move(zeros)};
    if (cfg.zeros.empty()) throw InvalidInput("at least one zero is required");
    auto grid = GridSpec::default_for(cfg, o.grid > 0 ? o.grid : 256);
    SolveOptions opt;
    opt.enforce_residual = false;
    return solve_planar(cfg, grid, opt);
}

json heat_series(const VortexSolution& s) {
    const int N = s.grid.N, stride = std::max(1, N / 64);
    json rows = json::array();
    for (int j = 0; j < N; j += stride) {
        json row = json::array();
        for (int i = 0; i < N; i += stride) row.push_back(s.rho[s.grid.index(i, j)]);
        rows.push_back(row);
    }
    return {{"title", "1 - |alpha|^2"}, {"values", rows}};
}

Outcome cmd_solve_vortex(const Options& o) {
    Outcome r;
    const auto s = vortex_of(o, parse_complex_list(o.zeros));
    const double tol = o.tol > 0 ? o.tol : 1e-4;
    const auto& res = s.residuals;
    r.pass = res.ok(tol);
    r.outputs = {{"n", s.config.n()},
                 {"grid", {{"N", s.grid.N}, {"half_width", s.grid.half_width}, {"center", cplx_json(s.grid.center)}}},
                 {"flux", s.flux},
                 {"newton_iterations", s.newton_iterations},
                 {"residuals",
                  {{"curvature_sup", res.curvature_sup}, {"curvature_l2", res.curvature_l2}, {"dbar_sup", res.dbar_sup},
                   {"dbar_l2", res.dbar_l2}, {"alpha_max", res.alpha_max}, {"tol", tol}}},
                 {"series", {{"heat", heat_series(s)}}}};
    return r;
}

Outcome cmd_vortex_moments(const Options& o) {
    Outcome r;
    const auto zeros = parse_complex_list(o.zeros);
    const auto s = vortex_of(o, zeros);
    const auto mr = moments(s, o.q_max);
    const auto p = power_sums(zeros, o.q_max);
    json rows = json::array();
    for (int q = 0; q < o.q_max; ++q) {
        double scale = 0;
        for (auto z : zeros) scale += std::pow(std::abs(z), q + 1);
        const double err = std::abs(mr.moments[q] - p[q]);
        const bool ok = err <= 0.02 * std::max(1.0, scale);
        r.pass = r.pass && ok;
        rows.push_back({{"q", q + 1}, {"moment", cplx_json(mr.moments[q])}, {"power_sum", cplx_json(p[q])},
                        {"error", err}, {"ok", ok}});
    }
    r.outputs = {{"moments", rows}, {"effective_radius", mr.effective_radius}};
    return r;
}

Outcome cmd_vortex_decay(const Options& o) {
    Outcome r;
    const auto s = vortex_of(o, std::vector<cplx>(o.n, 0.0));
    const auto fit = decay_fit(s, o.r_lo, o.r_hi);
    r.pass = fit.exponent >= 1.25 && fit.exponent <= 1.5;
    const auto prof = solve_radial(o.n);
    std::vector<double> rr, ff;
    for (std::size_t k = 0; k < prof.r.size(); k += 16) {
        rr.push_back(prof.r[k]);
        ff.push_back(prof.f[k]);
    }
    r.outputs = {{"n", o.n}, {"r_lo", o.r_lo}, {"r_hi", o.r_hi}, {"exponent", fit.exponent},
                 {"corrected_exponent", fit.corrected_exponent}, {"points", fit.points},
                 {"bracket", {1.25, 1.5}}, {"reference_rate", std::sqrt(2.0)},
                 {"series", {{"radial", {{"r", rr}, {"f", ff}}}}}};
    return r;
}

Outcome cmd_hamiltonian(const Options& o) {
    Outcome r;
    const auto zeros = parse_complex_list(o.zeros);
    const cplx mu(o.mu_re, o.mu_im);
    const auto s = vortex_of(o, zeros);
    const double h = hamiltonian(s, o.nu, mu);
    r.outputs = {{"h", h}, {"nu", o.nu}, {"mu", cplx_json(mu)}};
    if (zeros.size() == 1 && zeros[0] != 0.0) {
        const double h0 = hamiltonian(vortex_of(o, {0.0}), o.nu, mu);
        const cplx w = zeros[0];
        const double pred = o.nu * std::norm(w) + (std::conj(mu) * w * w).real();
        const double scale = (std::abs(o.nu) + std::abs(mu)) * std::norm(w);
        const double err = std::abs(h - h0 - pred);
        r.pass = err <= 0.02 * scale;
        r.outputs["translation"] = {{"difference", h - h0}, {"predicted", pred}, {"error", err}, {"relative", err / scale}};
    }
    return r;
}

std::unique_ptr<ModuliModel> model_of(const Options& o) {
    if (o.model == "direct") {
        DirectOptions d;
        if (o.grid > 0) d.grid_points = o.grid;
        return std::make_unique<DirectModel>(o.m, d);
    }
    if (o.model != "reduced") throw InvalidInput("model must be reduced or direct");
    if (!o.tables.empty() && fs::exists(o.tables)) {
        std::ifstream in(o.tables);
        const json j = json::parse(in);
        if (j.at("m").get<int>() != o.m) throw InvalidInput("table file " + o.tables + " is for a different m");
        return std::make_unique<ReducedModel>(ReducedModel::from_tables(
            o.m, j.at("g1").get<double>(), j.at("h0").get<double>(), j.at("r").get<std::vector<double>>(),
            j.at("A").get<std::vector<double>>(), j.at("B").get<std::vector<double>>(),
            j.at("g_rel").get<std::vector<double>>()));
    }
    ReducedOptions ropt;
    if (o.grid > 0) ropt.grid_points = o.grid;
    auto model = ReducedModel::build(o.m, ropt);
    if (!o.tables.empty()) {
        const json j = {{"m", o.m}, {"g1", model.g1()}, {"h0", model.h0()}, {"r", model.r()},
                        {"A", model.A()}, {"B", model.B()}, {"g_rel", model.g_rel()}, {"g_cm", model.g_cm()}};
        write_atomic(o.tables, j.dump(2) + "\n");
    }
    return std::make_unique<ReducedModel>(std::move(model));
}

FlowOptions flow_options(const Options& o) {
    FlowOptions f;
    if (o.steps > 0) f.steps = o.steps;
    if (o.tol > 0) f.abs_tol = f.rel_tol = o.tol;
    return f;
}

ModuliPoint start_of(const Options& o) {
    if (!o.moments.empty()) return ModuliPoint::from_moments(parse_complex_list(o.moments));
    if (!o.zeros.empty()) return ModuliPoint::from_zeros(parse_complex_list(o.zeros));
    return ModuliPoint::origin(o.m);
}

Outcome cmd_flow(const Options& o) {
    Outcome r;
    const auto pair = pair_of(o);
    const auto model = model_of(o);
    const auto start = start_of(o);
    if (start.m != o.m) throw InvalidInput("start point has the wrong number of vortices");
    const auto res = flow(pair, *model, start, flow_options(o));
    json traj = json::array();
    std::vector<double> re, im;
    for (const auto& st : res.trajectory) {
        traj.push_back({{"t", st.t}, {"sigma", cplx_list(st.point.moments)}, {"energy", st.energy}});
        re.push_back(st.point.moments[0].real());
        im.push_back(st.point.moments[0].imag());
    }
    r.pass = !res.escaped;
    r.outputs = {{"model", model->name()}, {"escaped", res.escaped}, {"escape_time", res.escape_time},
                 {"trajectory", traj}, {"series", {{"trajectory", {{"re_sigma1", re}, {"im_sigma1", im}}}}}};
    return r;
}

Outcome cmd_orbit_search(const Options& o) {
    Outcome r;
    const auto pair = pair_of(o);
    const auto model = model_of(o);
    SearchRegion region;
    region.center.assign(o.m, 0.0);
    region.half_width.assign(o.m, o.half_width);
    SearchOptions sopt;
    if (o.grid > 0) sopt.grid = o.grid;
    sopt.flow = flow_options(o);
    const auto rep = closed_orbit_search(pair, *model, region, sopt);
    json cands = json::array();
    for (const auto& c : rep.candidates)
        cands.push_back({{"sigma", cplx_list(c.sigma)}, {"zeros", cplx_list(c.zeros)}, {"displacement", c.displacement}});
    r.pass = rep.complete;
    r.outputs = {{"model", model->name()}, {"samples", rep.samples.size()}, {"candidates", cands},
                 {"min_displacement", rep.min_displacement}, {"argmin", cplx_list(rep.argmin)},
                 {"refined", rep.refined}, {"degenerate", rep.degenerate}, {"complete", rep.complete},
                 {"evaluations", rep.evaluations}};
    return r;
}

Outcome cmd_floquet(const Options& o) {
    Outcome r;
    const auto pair = pair_of(o);
    const auto model = model_of(o);
    const auto rep = linearized_monodromy(pair, *model, 1e-4, 1e-6, flow_options(o));
    json jac = json::array();
    for (int i = 0; i < rep.jacobian.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < rep.jacobian.cols(); ++j) row.push_back(rep.jacobian(i, j));
        jac.push_back(row);
    }
    r.outputs = {{"model", model->name()}, {"jacobian", jac}, {"multipliers", cplx_list(rep.multipliers)},
                 {"product", rep.product}, {"rotation", rep.rotation}, {"type", rep.type},
                 {"max_fixed_speed", rep.max_fixed_speed}};
    return r;
}

Outcome cmd_local_model(const Options& o) {
    Outcome r;
    ModelField field = ModelField::empty(o.R);
    std::stringstream ss(o.modes);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        const int n = std::stoi(item.substr(0, colon));
        const cplx c = colon == std::string::npos ? cplx(1.0) : parse_complex(item.substr(colon + 1));
        field = field + generate_mode(n, c, o.R);
    }
    field.ell = o.ell;
    Domain dom;
    const double analytic = model_residual(field, dom);
    const double grid = model_residual(ModelField::sampled(o.R, field.sample(dom.w0, dom.w1, dom.Nw, dom.Nt)), dom);
    const double holo = holo_check(field, dom);
    int maxn = 0;
    for (const auto& m : field.modes) maxn = std::max(maxn, std::abs(m.n));
    const auto match = end_match(field, spectrum(PeriodicPair::elliptic_canonical(o.R), 1, std::max(8, maxn + 4)));
    json mm = json::array();
    for (const auto& x : match.matches)
        mm.push_back({{"n", x.n}, {"exponent", x.exponent}, {"eigenvalue", x.eigenvalue}, {"error", x.error}});
    r.pass = analytic < 1e-10 && grid < 1e-6 && holo < 1e-9 && match.max_error < 1e-10;
    r.outputs = {{"R", o.R}, {"residual_analytic", analytic}, {"residual_grid", grid}, {"holo_check", holo},
                 {"matches", mm}, {"scale", match.scale}, {"max_match_error", match.max_error}};
    return r;
}

PairFamily family_of(const Options& o) {
    const auto a = parse_pair(o.from.empty() ? o.pair : o.from);
    const auto b = o.to.empty() ? a : parse_pair(o.to);
    return PairFamily::interpolate(a, b);
}

Outcome cmd_approx_form(const Options& o) {
    Outcome r;
    FormOptions fopt;
    if (o.nxy > 0) fopt.Nxy = o.nxy;
    if (o.nt > 0) fopt.Nt = o.nt;
    const auto form = build_form(family_of(o), o.k, o.Q, o.rho, o.ell, fopt);
    const auto contact = contact_check(form);
    const double derr = exterior_derivative_error(form);
    r.outputs = {{"k", o.k}, {"Q", o.Q}, {"rho", o.rho}, {"ell", o.ell}, {"Nxy", form.Nxy}, {"Nt", form.Nt},
                 {"exterior_derivative_error", derr},
                 {"contact", {{"min", contact.min_coefficient}, {"max", contact.max_coefficient},
                              {"argmin", contact.argmin}, {"pass", contact.contact}}}};
    if (contact.contact) {
        const auto reeb = reeb_check(form);
        r.outputs["reeb"] = {{"sup_diff", reeb.sup_diff}, {"sup_diff_over_z", reeb.sup_diff_over_z},
                             {"sup_ratio", reeb.sup_ratio}, {"diff_at_origin", reeb.diff_at_origin},
                             {"points", reeb.points}};
    }
    r.pass = contact.contact && derr <= 1e-6;
    return r;
}

Outcome cmd_eigen_gap(const Options& o) {
    Outcome r;
    const auto rep = eigen_gap(family_of(o), o.tau_grid, o.q_max, o.n_modes);
    r.pass = !rep.degenerate;
    r.outputs = {{"lambda0", rep.lambda0}, {"tau", rep.tau}, {"q", rep.q}, {"degenerate", rep.degenerate}};
    return r;
}

Outcome cmd_cylinder(const Options& o) {
    Outcome r;
    const auto b = cylinder_inverse_norm(pair_of(o), o.q, o.s_min, o.hs, o.nt > 0 ? o.nt : 32);
    r.pass = b.relative_error <= 0.05;
    r.outputs = {{"sigma_min", b.sigma_min}, {"sigma_star", b.sigma_star}, {"fourier_gap", b.fourier_gap},
                 {"fourier_sigma_star", b.fourier_sigma_star}, {"relative_error", b.relative_error},
                 {"S", b.S}, {"Ns", b.Ns}, {"Nt", b.Nt}};
    return r;
}

Outcome cmd_contraction(const Options& o) {
    Outcome r;
    const auto pair = pair_of(o);
    int Nt = o.nt > 0 ? o.nt : 51;
    if (Nt % 2 == 0) ++Nt;
    const int Ns = 2 * static_cast<int>(std::ceil(o.S / 0.125)) - 1;
    const CylinderOperator op(pair, o.q, o.S, Ns, Nt);
    const double sigma_star = 1 / op.smallest_singular_value();
    auto star = [&](const Eigen::VectorXd& v) { return star_norm(op.from_vector(v)); };
    std::mt19937 rng(o.seed);
    std::normal_distribution<double> gauss;
    std::vector<cplx> coef(5);
    for (auto& c : coef) c = {gauss(rng), gauss(rng)};
    auto gf = op.blank();
    for (int i = 0; i < gf.Ns; ++i)
        for (int j = 0; j < gf.Nt; ++j) {
            cplx v = 0;
            for (int m = 0; m < 5; ++m) v += coef[m] * std::polar(1.0, (m - 2) * gf.t(j) / o.q);
            gf.at(i, j) = std::exp(-gf.s(i) * gf.s(i)) * v;
        }
    Eigen::VectorXd g = op.to_vector(gf);
    g /= star(g);
    auto T = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd rhs(v.size());
        for (Eigen::Index k = 0; k < v.size(); k += 2) {
            const cplx e(v[k], v[k + 1]);
            const cplx s = o.eps * e * e;
            rhs[k] = s.real() + o.crho * g[k];
            rhs[k + 1] = s.imag() + o.crho * g[k + 1];
        }
        return Eigen::VectorXd(-op.solve(rhs));
    };
    const ContractionBounds bounds{2 * sigma_star, 2 * sigma_star, o.crho, 0.5 / (16 * sigma_star)};
    const auto rep = contraction_solve(bounds, T, star, Eigen::VectorXd::Zero(g.size()));
    r.pass = rep.converged && rep.fixed_point_norm <= 2 * sigma_star * o.crho;
    r.outputs = {{"sigma_star", sigma_star}, {"admissible", bounds.admissible()}, {"converged", rep.converged},
                 {"diverged", rep.diverged}, {"iterations", rep.iterations}, {"fixed_point_norm", rep.fixed_point_norm},
                 {"bound", 2 * sigma_star * o.crho}, {"c1_estimate", rep.c1_estimate},
                 {"c2_estimate", rep.c2_estimate}, {"bounds_hold", rep.bounds_hold}, {"message", rep.message}};
    return r;
}

using Handler = std::function<Outcome(const Options&)>;

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"echkit command line"};
    app.require_subcommand(1);
    Options o;
    std::map<CLI::App*, std::pair<std::string, Handler>> handlers;

    auto add = [&](const std::string& name, const std::string& desc, Handler h) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--db", o.db, "orbit database JSON");
        sub->add_option("--out", o.out, "output directory for reports");
        sub->add_option("--grid", o.grid, "grid size (command specific)");
        sub->add_option("--steps", o.steps, "step or sample count (command specific)");
        sub->add_option("--tol", o.tol, "tolerance (command specific)");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_flag("--plots", o.plots, "write SVG plots next to the report");
        handlers[sub] = {name, std::move(h)};
        return sub;
    };
    auto pair_opts = [&](CLI::App* s) {
        s->add_option("--pair", o.pair, "pair spec, e.g. elliptic:R=0.3 or hyperbolic-canonical:k=2,eps=0.05");
        s->add_option("--id", o.id, "orbit id in the database");
    };
    auto moduli_opts = [&](CLI::App* s) {
        pair_opts(s);
        s->add_option("--m", o.m, "number of vortices");
        s->add_option("--model", o.model, "reduced or direct");
        s->add_option("--tables", o.tables, "cache file for reduced model tables");
    };

    pair_opts(add("classify-orbit", "classify the linearized return map", cmd_classify));
    pair_opts(add("rotation-number", "rotation number of an orbit", cmd_rotation));
    {
        auto* s = add("spectrum", "eigenvalues of L on 2 pi q periodic functions", cmd_spectrum);
        pair_opts(s);
        s->add_option("--q", o.q);
        s->add_option("--modes", o.n_modes);
        s->add_option("--window", o.window, "report eigenvalues with |lambda| <= window");
    }
    {
        auto* s = add("spectral-flow", "spectral flow along the straight path between two pairs", cmd_spectral_flow);
        s->add_option("--from", o.from)->required();
        s->add_option("--to", o.to)->required();
        s->add_option("--q", o.q);
        s->add_option("--modes", o.n_modes);
    }
    {
        auto* s = add("verify-homotopy", "check a straight homotopy to the canonical pair", cmd_verify_homotopy);
        pair_opts(s);
        s->add_option("--to", o.to, "target pair (default: canonical target)");
    }
    {
        auto* s = add("ech-index", "ECH index of a pair of orbit sets", cmd_ech_index);
        s->add_option("--theta-minus", o.theta_minus);
        s->add_option("--theta-plus", o.theta_plus);
        s->add_option("--qz", o.qz);
        s->add_option("--c1", o.c1);
    }
    {
        auto* s = add("enumerate", "generators below an action bound", cmd_enumerate);
        s->add_option("--L", o.L);
        s->add_flag("--allow-boundary", o.allow_boundary);
    }
    for (auto [name, h] : {std::pair<const char*, Handler>{"differential", cmd_differential},
                           std::pair<const char*, Handler>{"homology", cmd_homology}}) {
        auto* s = add(name, std::string(name) + " of the filtered complex from a count table", h);
        s->add_option("--counts", o.counts);
        s->add_option("--L", o.L);
        s->add_option("--p", o.p, "grading modulus (default from grading_class)");
        s->add_option("--anchor-degree", o.anchor_degree);
        s->add_flag("--allow-boundary", o.allow_boundary);
    }
    add("solve-vortex", "solve the planar vortex equations", cmd_solve_vortex)->add_option("--zeros", o.zeros)->required();
    {
        auto* s = add("vortex-moments", "moments of 1 - |alpha|^2 against power sums", cmd_vortex_moments);
        s->add_option("--zeros", o.zeros)->required();
        s->add_option("--q-max", o.q_max);
    }
    {
        auto* s = add("vortex-decay", "decay exponent of 1 - |alpha|^2", cmd_vortex_decay);
        s->add_option("--n", o.n);
        s->add_option("--r-lo", o.r_lo);
        s->add_option("--r-hi", o.r_hi);
    }
    {
        auto* s = add("hamiltonian", "moduli Hamiltonian of a vortex", cmd_hamiltonian);
        s->add_option("--zeros", o.zeros)->required();
        s->add_option("--nu", o.nu);
        s->add_option("--mu-re", o.mu_re);
        s->add_option("--mu-im", o.mu_im);
    }
    {
        auto* s = add("flow", "Hamiltonian flow on the moduli space", cmd_flow);
        moduli_opts(s);
        s->add_option("--zeros", o.zeros);
        s->add_option("--moments", o.moments);
    }
    {
        auto* s = add("orbit-search", "closed orbits of the time 2 pi map", cmd_orbit_search);
        moduli_opts(s);
        s->add_option("--half-width", o.half_width);
    }
    moduli_opts(add("floquet", "linearized return map at the symmetric point", cmd_floquet));
    {
        auto* s = add("local-model-check", "residuals and end matching of model modes", cmd_local_model);
        s->add_option("--R", o.R);
        s->add_option("--modes", o.modes, "n:c list, e.g. 1:1,2:0.5+0.1i");
        s->add_option("--ell", o.ell);
    }
    {
        auto* s = add("approx-form-check", "contact and Reeb checks of the interpolated form", cmd_approx_form);
        s->add_option("--pair", o.pair);
        s->add_option("--from", o.from);
        s->add_option("--to", o.to);
        s->add_option("--k", o.k);
        s->add_option("--Q", o.Q);
        s->add_option("--rho", o.rho);
        s->add_option("--ell", o.ell);
        s->add_option("--nxy", o.nxy);
        s->add_option("--nt", o.nt);
    }
    {
        auto* s = add("eigen-gap", "uniform eigenvalue gap of a family", cmd_eigen_gap);
        s->add_option("--pair", o.pair);
        s->add_option("--from", o.from);
        s->add_option("--to", o.to);
        s->add_option("--tau-grid", o.tau_grid);
        s->add_option("--q-max", o.q_max);
        s->add_option("--modes", o.n_modes);
    }
    {
        auto* s = add("cylinder-bounds", "inverse bound of d/ds + L on a truncated cylinder", cmd_cylinder);
        pair_opts(s);
        s->add_option("--q", o.q);
        s->add_option("--hs", o.hs);
        s->add_option("--nt", o.nt);
        s->add_option("--s-min", o.s_min);
    }
    {
        auto* s = add("contraction-demo", "fixed point of a quadratic cylinder map", cmd_contraction);
        pair_opts(s);
        s->add_option("--q", o.q);
        s->add_option("--eps", o.eps);
        s->add_option("--rho", o.crho);
        s->add_option("--S", o.S);
        s->add_option("--nt", o.nt);
    }

    std::vector<std::string> argv_s{"echkit"};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const auto& [name, handler] = handlers.at(chosen);
    std::string joined;
    for (const auto& a : args) joined += a + '\n';
    boost::crc_32_type crc;
    crc.process_bytes(joined.data(), joined.size());
    std::ostringstream digest;
    digest << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();

    const auto t0 = std::chrono::steady_clock::now();
    json report;
    report["command"] = name;
    report["inputs"] = args;
    report["inputs_digest"] = digest.str();
    int code = 0;
    try {
        Outcome res = handler(o);
        json series;
        if (res.outputs.contains("series")) {
            series = res.outputs["series"];
            res.outputs.erase("series");
        }
        report["outputs"] = res.outputs;
        report["verdicts"] = {{"pass", res.pass}};
        code = res.pass ? 0 : 1;
        const std::string text = report.dump(2) + "\n";
        out << text;
        if (!o.out.empty()) {
            write_atomic((fs::path(o.out) / (name + ".json")).string(), text);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_atomic((fs::path(o.out) / (name + ".timing.json")).string(),
                         json{{"command", name}, {"seconds", secs}}.dump(2) + "\n");
            if (o.plots && !series.is_null()) {
                json plot_report = report;
                plot_report["outputs"]["series"] = series;
                for (const auto& f : emit_plots(plot_report, "auto", o.out, name)) err << "wrote " << f << '\n';
            }
        }
    } catch (const std::exception& e) {
        err << name << ": error: " << e.what() << '\n';
        return 2;
    }
    return code;
}

}  // namespace echkit::cli
