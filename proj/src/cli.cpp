#include "mre/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "mre/conditions.hpp"
#include "mre/errors.hpp"
#include "mre/expansion.hpp"
#include "mre/spectral.hpp"
#include "mre/transform.hpp"

namespace mre {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Schema helpers. Every accessor carries the dotted path of the field.

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw SchemaError(path + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
        if (!known) schema_error(path + "." + item.key(), "unknown field");
    }
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) schema_error(path + "." + key, "missing required field");
    return obj.at(key);
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_error(path, "expected a finite number");
    return v;
}

long as_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_error(path, "expected an integer");
    return j.get<long>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
    return obj.contains(key) ? as_number(obj.at(key), path + "." + key) : fallback;
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return as_number(obj.at(key), path + "." + key);
}

const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path, "expected an array");
    return j;
}

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::vector<ExpPolyTerm> parse_exp_poly(const json& arr, const std::string& path) {
    std::vector<ExpPolyTerm> out;
    for (std::size_t i = 0; i < as_array(arr, path).size(); ++i) {
        const std::string p = idx(path, i);
        const json& t = arr[i];
        check_keys(t, {"c", "k", "beta"}, p);
        const long k = t.contains("k") ? as_integer(t.at("k"), p + ".k") : 0;
        if (k < 0) schema_error(p + ".k", "power must be >= 0");
        out.push_back({as_number(require(t, "c", p), p + ".c"), static_cast<int>(k), number_or(t, "beta", 0.0, p)});
    }
    return out;
}

ScalarMeasure parse_measure(const json& j, const std::string& path) {
    ScalarMeasure m;
    if (j.is_null() || (j.is_number() && j.get<double>() == 0.0)) return m;
    check_keys(j, {"atoms", "exp_poly"}, path);
    if (j.contains("atoms")) {
        const json& atoms = as_array(j.at("atoms"), path + ".atoms");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string p = idx(path + ".atoms", i);
            check_keys(atoms[i], {"loc", "w"}, p);
            m.atoms.push_back({number_or(atoms[i], "loc", 0.0, p), as_number(require(atoms[i], "w", p), p + ".w")});
        }
    }
    if (j.contains("exp_poly")) m.densities = parse_exp_poly(j.at("exp_poly"), path + ".exp_poly");
    try {
        m.validate();
    } catch (const InvalidMeasureError& e) {
        schema_error(path, e.what());
    }
    return m;
}

Characteristic parse_characteristic(const json& j, int p, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "counting") return Characteristic::counting(p);
        schema_error(path, "unknown characteristic shortcut '" + j.get<std::string>() + "'");
    }
    if (j.is_object() && j.contains("type_indicator")) {
        check_keys(j, {"type_indicator"}, path);
        const long t = as_integer(j.at("type_indicator"), path + ".type_indicator");
        if (t < 0 || t >= p) throw DimensionError(path + ".type_indicator: type out of range for p = " + std::to_string(p));
        return Characteristic::type_indicator(p, static_cast<int>(t));
    }
    check_keys(j, {"components"}, path);
    const json& comps = as_array(require(j, "components", path), path + ".components");
    if (static_cast<int>(comps.size()) != p)
        throw DimensionError(path + ".components: " + std::to_string(comps.size()) + " components for p = " +
                             std::to_string(p));
    Characteristic f;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string cp = idx(path + ".components", i);
        check_keys(comps[i], {"steps", "exp_poly"}, cp);
        CharacteristicComponent c;
        if (comps[i].contains("steps")) {
            const json& steps = as_array(comps[i].at("steps"), cp + ".steps");
            for (std::size_t s = 0; s < steps.size(); ++s) {
                const std::string sp = idx(cp + ".steps", s);
                check_keys(steps[s], {"loc", "h"}, sp);
                c.steps.push_back({number_or(steps[s], "loc", 0.0, sp), as_number(require(steps[s], "h", sp), sp + ".h")});
            }
        }
        if (comps[i].contains("exp_poly")) c.terms = parse_exp_poly(comps[i].at("exp_poly"), cp + ".exp_poly");
        f.components.push_back(std::move(c));
    }
    try {
        f.validate();
    } catch (const InvalidMeasureError& e) {
        schema_error(path, e.what());
    }
    return f;
}

std::vector<Lifetime> parse_lifetimes(const json& arr, int p, const std::string& path) {
    std::vector<Lifetime> out;
    as_array(arr, path);
    if (!arr.empty() && static_cast<int>(arr.size()) != p)
        throw DimensionError(path + ": need one lifetime per type (p = " + std::to_string(p) + ")");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string lp = idx(path, i);
        check_keys(arr[i], {"kind", "value"}, lp);
        const json& kind = require(arr[i], "kind", lp);
        if (!kind.is_string()) schema_error(lp + ".kind", "expected a string");
        Lifetime l;
        const std::string k = kind.get<std::string>();
        if (k == "infinite") {
            l.kind = Lifetime::Kind::Infinite;
        } else if (k == "deterministic" || k == "exponential") {
            l.kind = k == "deterministic" ? Lifetime::Kind::Deterministic : Lifetime::Kind::Exponential;
            l.value = as_number(require(arr[i], "value", lp), lp + ".value");
            if (!(l.value > 0.0)) schema_error(lp + ".value", "must be positive");
        } else {
            schema_error(lp + ".kind", "expected infinite, deterministic or exponential");
        }
        out.push_back(l);
    }
    return out;
}

json measure_json(const ScalarMeasure& m) {
    json j = json::object();
    j["atoms"] = json::array();
    for (const auto& a : m.atoms) j["atoms"].push_back({{"loc", a.location}, {"w", a.weight}});
    j["exp_poly"] = json::array();
    for (const auto& t : m.densities) j["exp_poly"].push_back({{"c", t.coefficient}, {"k", t.power}, {"beta", t.rate}});
    return j;
}

json matrix_json(const CMatrix& a) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json rr = json::array();
        json ri = json::array();
        for (Eigen::Index k = 0; k < a.cols(); ++k) {
            rr.push_back(a(i, k).real());
            ri.push_back(a(i, k).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return {{"re", re}, {"im", im}};
}

json error_json(const Error& e) { return {{"code", e.code()}, {"message", e.what()}}; }

// ---------------------------------------------------------------------------

struct Resolved {
    double theta = 0.0;
    double re_max = 0.0;
    double im_max = 0.0;
    bool has_alpha = false;
    MalthusianResult malthusian;
};

ExpansionOptions expansion_options(const RunConfig& cfg) {
    ExpansionOptions o;
    o.roots.tol_det = cfg.tolerances.tol_det;
    o.laurent.tol_laurent = cfg.tolerances.tol_laurent;
    o.tol_rho = cfg.tolerances.tol_rho;
    return o;
}

Resolved resolve(const RunConfig& cfg) {
    Resolved r;
    r.im_max = cfg.region.im_max;
    if (cfg.lattice) {
        try {
            r.malthusian = find_malthusian(embed(cfg.lattice_measure), cfg.tolerances.tol_rho);
            r.malthusian.alpha *= cfg.lattice_measure.span();
            r.has_alpha = true;
        } catch (const NoMalthusianError&) {
        }
        r.theta = cfg.region.theta.value_or(r.has_alpha ? r.malthusian.alpha - 0.5 : -0.5);
        r.re_max = cfg.region.re_max.value_or(r.has_alpha ? r.malthusian.alpha + 1.0 : 1.0);
        return r;
    }
    r.malthusian = find_malthusian(cfg.measure, cfg.tolerances.tol_rho);
    r.has_alpha = true;
    r.theta = cfg.region.theta.value_or(0.5 * r.malthusian.alpha);
    r.re_max = cfg.region.re_max.value_or(r.malthusian.alpha + 1.0);
    return r;
}

Expansion build(const RunConfig& cfg, const Resolved& r) {
    const ExpansionOptions o = expansion_options(cfg);
    if (cfg.lattice)
        return cfg.characteristic ? build_lattice_F_expansion(cfg.lattice_measure, *cfg.characteristic, r.theta, o)
                                  : build_lattice_U_expansion(cfg.lattice_measure, r.theta, o);
    const SearchRegion region{r.theta, r.re_max, r.im_max};
    return cfg.characteristic ? build_F_expansion(cfg.measure, *cfg.characteristic, region, o)
                              : build_U_expansion(cfg.measure, region, o);
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string line;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) line += ',';
        line += c;
        first = false;
    }
    return line + '\n';
}

const char* kCsvHeader = "t,entry_i,entry_j,expansion,oracle,abs_err,rel_err\n";

RMatrix expansion_value(const Expansion& e, double t) {
    const ScaledValue v = evaluate_scaled(e, t);
    return v.exponent > 0.0 ? RMatrix(v.mantissa * std::exp(v.exponent)) : v.mantissa;
}

std::vector<double> default_times(const RunConfig& cfg) {
    if (!cfg.oracle.t.empty()) return cfg.oracle.t;
    std::vector<double> t;
    for (int k = 1; k <= 10; ++k) t.push_back(cfg.oracle.grid_t * k / 10.0);
    return t;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("$: invalid JSON: ") + e.what());
    }
    check_keys(doc, {"model", "characteristic", "region", "tolerances", "oracle", "outputs"}, "$");
    RunConfig cfg;

    const json& model = require(doc, "model", "$");
    check_keys(model, {"p", "entries", "lattice", "lifetimes"}, "$.model");
    const bool has_entries = model.contains("entries");
    const bool has_lattice = model.contains("lattice");
    if (has_entries == has_lattice) schema_error("$.model", "give exactly one of 'entries' or 'lattice'");
    cfg.lattice = has_lattice;
    long declared_p = model.contains("p") ? as_integer(model.at("p"), "$.model.p") : -1;
    if (model.contains("p") && declared_p <= 0) schema_error("$.model.p", "must be positive");

    if (has_entries) {
        const json& rows = as_array(model.at("entries"), "$.model.entries");
        const auto p = static_cast<long>(rows.size());
        if (p == 0) schema_error("$.model.entries", "empty matrix");
        if (declared_p > 0 && declared_p != p)
            throw DimensionError("$.model.entries: " + std::to_string(p) + " rows but p = " + std::to_string(declared_p));
        cfg.p = static_cast<int>(p);
        cfg.measure = MeasureMatrix(cfg.p);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const json& row = as_array(rows[i], idx("$.model.entries", i));
            if (static_cast<long>(row.size()) != p)
                throw DimensionError(idx("$.model.entries", i) + ": row has " + std::to_string(row.size()) +
                                     " entries, expected " + std::to_string(p));
            for (std::size_t k = 0; k < row.size(); ++k)
                cfg.measure.at(static_cast<int>(i), static_cast<int>(k)) =
                    parse_measure(row[k], idx(idx("$.model.entries", i), k));
        }
    } else {
        const json& lat = model.at("lattice");
        check_keys(lat, {"h", "weights"}, "$.model.lattice");
        const double h = number_or(lat, "h", 1.0, "$.model.lattice");
        if (!(h > 0.0)) schema_error("$.model.lattice.h", "span must be positive");
        const json& rows = as_array(require(lat, "weights", "$.model.lattice"), "$.model.lattice.weights");
        const auto p = static_cast<long>(rows.size());
        if (p == 0) schema_error("$.model.lattice.weights", "empty matrix");
        if (declared_p > 0 && declared_p != p)
            throw DimensionError("$.model.lattice.weights: " + std::to_string(p) + " rows but p = " +
                                 std::to_string(declared_p));
        cfg.p = static_cast<int>(p);
        cfg.lattice_measure = LatticeMeasureMatrix(cfg.p, h);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::string rp = idx("$.model.lattice.weights", i);
            const json& row = as_array(rows[i], rp);
            if (static_cast<long>(row.size()) != p)
                throw DimensionError(rp + ": row has " + std::to_string(row.size()) + " entries, expected " +
                                     std::to_string(p));
            for (std::size_t k = 0; k < row.size(); ++k) {
                const std::string ep = idx(rp, k);
                std::vector<double> w;
                for (std::size_t n = 0; n < as_array(row[k], ep).size(); ++n) w.push_back(as_number(row[k][n], idx(ep, n)));
                cfg.lattice_measure.weights(static_cast<int>(i), static_cast<int>(k)) = std::move(w);
            }
        }
        try {
            cfg.lattice_measure.validate();
        } catch (const InvalidMeasureError& e) {
            schema_error("$.model.lattice", e.what());
        }
    }
    if (model.contains("lifetimes")) cfg.lifetimes = parse_lifetimes(model.at("lifetimes"), cfg.p, "$.model.lifetimes");

    if (doc.contains("characteristic") && !doc.at("characteristic").is_null())
        cfg.characteristic = parse_characteristic(doc.at("characteristic"), cfg.p, "$.characteristic");

    if (doc.contains("region")) {
        const json& r = doc.at("region");
        check_keys(r, {"theta", "re_max", "im_max"}, "$.region");
        cfg.region.theta = optional_number(r, "theta", "$.region");
        cfg.region.re_max = optional_number(r, "re_max", "$.region");
        cfg.region.im_max = number_or(r, "im_max", cfg.region.im_max, "$.region");
        if (!(cfg.region.im_max > 0.0)) schema_error("$.region.im_max", "must be positive");
        if (cfg.region.theta && cfg.region.re_max && !(*cfg.region.theta < *cfg.region.re_max))
            schema_error("$.region", "theta must be below re_max");
    }
    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        check_keys(t, {"tol_det", "tol_laurent", "tol_rho"}, "$.tolerances");
        cfg.tolerances.tol_det = number_or(t, "tol_det", cfg.tolerances.tol_det, "$.tolerances");
        cfg.tolerances.tol_laurent = number_or(t, "tol_laurent", cfg.tolerances.tol_laurent, "$.tolerances");
        cfg.tolerances.tol_rho = number_or(t, "tol_rho", cfg.tolerances.tol_rho, "$.tolerances");
        for (double v : {cfg.tolerances.tol_det, cfg.tolerances.tol_laurent, cfg.tolerances.tol_rho})
            if (!(v > 0.0)) schema_error("$.tolerances", "tolerances must be positive");
    }
    if (doc.contains("oracle")) {
        const json& o = doc.at("oracle");
        const std::string op = "$.oracle";
        check_keys(o, {"kind", "lattice_n", "grid_t", "grid_h", "mc_replications", "mc_seed", "t"}, op);
        if (o.contains("kind")) {
            if (!o.at("kind").is_string()) schema_error(op + ".kind", "expected a string");
            cfg.oracle.kind = o.at("kind").get<std::string>();
            if (cfg.oracle.kind != "auto" && cfg.oracle.kind != "exact" && cfg.oracle.kind != "grid")
                schema_error(op + ".kind", "expected auto, exact or grid");
        }
        if (o.contains("lattice_n")) cfg.oracle.lattice_n = as_integer(o.at("lattice_n"), op + ".lattice_n");
        cfg.oracle.grid_t = number_or(o, "grid_t", cfg.oracle.grid_t, op);
        cfg.oracle.grid_h = number_or(o, "grid_h", cfg.oracle.grid_h, op);
        if (o.contains("mc_replications"))
            cfg.oracle.mc_replications = as_integer(o.at("mc_replications"), op + ".mc_replications");
        if (o.contains("mc_seed")) {
            if (!o.at("mc_seed").is_number_unsigned() && !o.at("mc_seed").is_number_integer())
                schema_error(op + ".mc_seed", "expected a nonnegative integer");
            cfg.oracle.mc_seed = o.at("mc_seed").get<std::uint64_t>();
        }
        if (o.contains("t")) {
            const json& ts = as_array(o.at("t"), op + ".t");
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const double t = as_number(ts[i], idx(op + ".t", i));
                if (t < 0.0) schema_error(idx(op + ".t", i), "times must be >= 0");
                cfg.oracle.t.push_back(t);
            }
        }
        if (cfg.oracle.lattice_n < 0) schema_error(op + ".lattice_n", "must be >= 0");
        if (!(cfg.oracle.grid_h > 0.0) || !(cfg.oracle.grid_t > 0.0)) schema_error(op, "grid_t and grid_h must be > 0");
        if (cfg.oracle.mc_replications <= 0) schema_error(op + ".mc_replications", "must be positive");
    }
    if (doc.contains("outputs")) {
        const json& o = doc.at("outputs");
        check_keys(o, {"csv", "report"}, "$.outputs");
        for (const char* key : {"csv", "report"})
            if (o.contains(key)) {
                if (!o.at(key).is_string()) schema_error(std::string("$.outputs.") + key, "expected a path string");
                (std::string(key) == "csv" ? cfg.outputs.csv : cfg.outputs.report) = o.at(key).get<std::string>();
            }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json doc;
    json model;
    model["p"] = cfg.p;
    if (cfg.lattice) {
        json w = json::array();
        for (int i = 0; i < cfg.p; ++i) {
            json row = json::array();
            for (int k = 0; k < cfg.p; ++k) row.push_back(cfg.lattice_measure.weights(i, k));
            w.push_back(row);
        }
        model["lattice"] = {{"h", cfg.lattice_measure.span()}, {"weights", w}};
    } else {
        json rows = json::array();
        for (int i = 0; i < cfg.p; ++i) {
            json row = json::array();
            for (int k = 0; k < cfg.p; ++k) row.push_back(measure_json(cfg.measure.at(i, k)));
            rows.push_back(row);
        }
        model["entries"] = rows;
    }
    json lifetimes = json::array();
    for (const auto& l : cfg.lifetimes) {
        switch (l.kind) {
            case Lifetime::Kind::Infinite:
                lifetimes.push_back({{"kind", "infinite"}});
                break;
            case Lifetime::Kind::Deterministic:
                lifetimes.push_back({{"kind", "deterministic"}, {"value", l.value}});
                break;
            case Lifetime::Kind::Exponential:
                lifetimes.push_back({{"kind", "exponential"}, {"value", l.value}});
                break;
        }
    }
    model["lifetimes"] = lifetimes;
    doc["model"] = model;

    if (cfg.characteristic) {
        json comps = json::array();
        for (const auto& c : cfg.characteristic->components) {
            json steps = json::array();
            for (const auto& s : c.steps) steps.push_back({{"loc", s.location}, {"h", s.height}});
            json terms = json::array();
            for (const auto& t : c.terms) terms.push_back({{"c", t.coefficient}, {"k", t.power}, {"beta", t.rate}});
            comps.push_back({{"steps", steps}, {"exp_poly", terms}});
        }
        doc["characteristic"] = {{"components", comps}};
    } else {
        doc["characteristic"] = nullptr;
    }
    doc["region"] = {{"theta", cfg.region.theta ? json(*cfg.region.theta) : json(nullptr)},
                     {"re_max", cfg.region.re_max ? json(*cfg.region.re_max) : json(nullptr)},
                     {"im_max", cfg.region.im_max}};
    doc["tolerances"] = {{"tol_det", cfg.tolerances.tol_det},
                         {"tol_laurent", cfg.tolerances.tol_laurent},
                         {"tol_rho", cfg.tolerances.tol_rho}};
    doc["oracle"] = {{"kind", cfg.oracle.kind},
                     {"lattice_n", cfg.oracle.lattice_n},
                     {"grid_t", cfg.oracle.grid_t},
                     {"grid_h", cfg.oracle.grid_h},
                     {"mc_replications", cfg.oracle.mc_replications},
                     {"mc_seed", cfg.oracle.mc_seed},
                     {"t", cfg.oracle.t}};
    doc["outputs"] = {{"csv", cfg.outputs.csv}, {"report", cfg.outputs.report}};
    return doc.dump(2) + "\n";
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

SlopeTest slope_test(const std::vector<double>& t, const std::vector<double>& residual,
                     const std::vector<double>& floor, double bound, int degree) {
    SlopeTest out;
    out.bound = bound;
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(residual[i] > floor[i]) || !(residual[i] > 0.0)) continue;
        if (degree > 0 && !(t[i] > 0.0)) continue;
        x.push_back(t[i]);
        y.push_back(std::log(residual[i]) - degree * (degree > 0 ? std::log(t[i]) : 0.0));
    }
    out.points = static_cast<int>(x.size());
    if (x.size() < 3) {
        out.note = "fewer than 3 residuals above the noise floor";
        return out;
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.pass = out.slope <= bound;
    return out;
}

// ---------------------------------------------------------------------------

CommandResult cmd_analyze(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    json report;
    report["model"] = {{"p", cfg.p}, {"lattice", cfg.lattice}};
    CommandResult result;
    auto finish = [&](int code) {
        report["timings_ms"] = {{"total", elapsed_ms(start)}};
        result.exit_code = code;
        result.output = report.dump(2) + "\n";
        return result;
    };

    const RMatrix instant = cfg.lattice ? cfg.lattice_measure.mass_at(0) : instant_mass_matrix(cfg.measure);
    const double abscissa = cfg.lattice ? -std::numeric_limits<double>::infinity() : domain_abscissa(cfg.measure);
    const double rho0 = spectral_radius(instant);
    report["assumptions"]["A1"] = {{"abscissa", std::isfinite(abscissa) ? json(abscissa) : json("-inf")},
                                   {"holds", true}};
    report["assumptions"]["A2"] = {{"rho_mu0", rho0}, {"holds", rho0 < 1.0}};
    if (!(rho0 < 1.0)) {
        report["error"] = error_json(AssumptionError("spectral radius of mu({0}) is >= 1"));
        result.summary = "assumption A2 fails";
        return finish(2);
    }

    Resolved r;
    try {
        r = resolve(cfg);
    } catch (const NoMalthusianError& e) {
        report["assumptions"]["A3"] = {{"holds", false}};
        report["error"] = error_json(e);
        result.summary = e.code();
        return finish(2);
    }
    report["assumptions"]["A3"] = {{"holds", r.has_alpha || cfg.lattice}};
    if (r.has_alpha)
        report["malthusian"] = {{"alpha", r.malthusian.alpha},
                                {"bracket", {r.malthusian.bracket.first, r.malthusian.bracket.second}},
                                {"varrho_at_alpha", r.malthusian.varrho_at_alpha}};
    report["region"] = {{"theta", r.theta}, {"re_max", r.re_max}, {"im_max", r.im_max}};

    const auto t_roots = std::chrono::steady_clock::now();
    const Expansion e = build(cfg, r);
    report["timings_ms"]["expansion"] = elapsed_ms(t_roots);

    json roots = json::array();
    for (const auto& root : e.roots) {
        json jr = {{"re", root.lambda.real()},
                   {"im", root.lambda.imag()},
                   {"det_multiplicity", root.det_multiplicity},
                   {"pole_order", root.pole_order},
                   {"residual", root.residual}};
        json laurent = json::array();
        for (const auto& a : root.laurent) laurent.push_back(matrix_json(a));
        jr[cfg.lattice ? "lattice_B" : "A"] = laurent;
        if (!cfg.lattice) {
            const auto c = c_coeffs(root.lambda, root.laurent);
            json jc = json::array();
            json jb = json::array();
            for (const auto& m : c) jc.push_back(matrix_json(m));
            for (const auto& m : b_coeffs(root.lambda, c)) jb.push_back(matrix_json(m));
            jr["C"] = jc;
            jr["B"] = jb;
        }
        roots.push_back(jr);
    }
    report["roots"] = roots;
    report["verified_band"] = cfg.lattice ? json("-pi < Im lambda <= pi") : json(r.im_max);

    json terms = json::array();
    for (const auto& t : e.terms)
        terms.push_back({{"re", t.lambda.real()}, {"im", t.lambda.imag()}, {"power", t.power}, {"coeff", matrix_json(t.coeff)}});
    report["expansion"] = {{"kind", to_string(e.kind)},
                           {"remainder_exponent", e.remainder_exponent},
                           {"remainder_poly_degree", e.remainder_poly_degree},
                           {"epsilon", e.epsilon},
                           {"terms", terms}};

    int code = 0;
    if (!cfg.lattice) {
        json conds = json::array();
        auto add = [&](const ConditionReport& c) {
            json jc = {{"condition", c.condition}, {"verdict", to_string(c.verdict)}, {"note", c.note}};
            if (c.condition == "B") jc["norms"] = c.norms, jc["m_used"] = c.m_used;
            if (c.condition == "E")
                jc["supremum"] = c.supremum, jc["eta_max"] = c.eta_max, jc["refinements"] = c.refinements;
            if (c.condition == "strip") jc["zero_count"] = c.zero_count;
            conds.push_back(jc);
        };
        add(check_B(cfg.measure, r.theta, 8));
        try {
            const ConditionReport ce = check_E(cfg.measure, r.theta, r.im_max, 200);
            if (ce.verdict == Verdict::Fail) code = 2;
            add(ce);
        } catch (const RootOnLineError& err) {
            conds.push_back({{"condition", "E"}, {"verdict", "fail"}, {"error", error_json(err)}});
            code = 2;
        }
        report["conditions"] = conds;
    }
    result.summary = std::to_string(e.roots.size()) + " root(s), expansion " + to_string(e.kind);
    return finish(code);
}

CommandResult cmd_expand(const RunConfig& cfg, const std::vector<double>& t_values) {
    CommandResult result;
    result.output = kCsvHeader;
    if (t_values.empty()) return result;
    const Expansion e = build(cfg, resolve(cfg));
    for (double t : t_values) {
        const double arg = cfg.lattice ? t / cfg.lattice_measure.span() : t;
        const RMatrix v = expansion_value(e, arg);
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            for (Eigen::Index k = 0; k < v.cols(); ++k)
                result.output +=
                    csv_row({format_double(t), std::to_string(i), std::to_string(k), format_double(v(i, k)), "", "", ""});
    }
    result.summary = std::to_string(t_values.size()) + " time point(s)";
    return result;
}

CommandResult cmd_validate(const RunConfig& cfg) {
    CommandResult result;
    result.output = kCsvHeader;
    const Resolved r = resolve(cfg);
    const Expansion e = build(cfg, r);
    std::vector<double> ts;
    std::vector<double> residual;
    std::vector<double> floor;
    double max_rel = 0.0;

    auto emit = [&](double t, const RMatrix& expv, const RMatrix& oracle) {
        for (Eigen::Index i = 0; i < expv.rows(); ++i)
            for (Eigen::Index k = 0; k < expv.cols(); ++k) {
                const double abs_err = std::abs(expv(i, k) - oracle(i, k));
                const double rel_err = oracle(i, k) != 0.0 ? abs_err / std::abs(oracle(i, k)) : abs_err;
                max_rel = std::max(max_rel, rel_err);
                result.output += csv_row({format_double(t), std::to_string(i), std::to_string(k),
                                          format_double(expv(i, k)), format_double(oracle(i, k)),
                                          format_double(abs_err), format_double(rel_err)});
            }
    };

    SlopeTest st;
    if (cfg.lattice) {
        const auto n_max = static_cast<std::size_t>(cfg.oracle.lattice_n);
        std::vector<RMatrix> oracle;
        if (cfg.characteristic) {
            for (const auto& v : lattice_solution(cfg.lattice_measure, *cfg.characteristic, n_max)) oracle.push_back(v);
        } else {
            oracle = lattice_renewal(cfg.lattice_measure, n_max);
        }
        for (std::size_t n = 0; n <= n_max; ++n) {
            const RMatrix v = expansion_value(e, static_cast<double>(n));
            emit(static_cast<double>(n) * cfg.lattice_measure.span(), v, oracle[n]);
            if (n * 3 >= n_max) {
                ts.push_back(static_cast<double>(n));
                residual.push_back((v - oracle[n]).cwiseAbs().maxCoeff());
                floor.push_back(1e-9 * oracle[n].cwiseAbs().maxCoeff());
            }
        }
        st = slope_test(ts, residual, floor, e.remainder_exponent + 0.05, 0);
    } else {
        const std::vector<double> times = default_times(cfg);
        const double t_max = *std::max_element(times.begin(), times.end());
        const double h = cfg.oracle.grid_h;
        std::vector<RMatrix> fine;
        std::vector<RMatrix> coarse;
        if (cfg.characteristic) {
            const auto gf = grid_convolution_F(cfg.measure, *cfg.characteristic, t_max, 0.5 * h);
            const auto gc = grid_convolution_F(cfg.measure, *cfg.characteristic, t_max, h);
            for (double t : times) {
                fine.emplace_back(gf.at(t));
                coarse.emplace_back(gc.at(t));
            }
        } else {
            const auto gf = grid_convolution_U(cfg.measure, t_max, 0.5 * h);
            const auto gc = grid_convolution_U(cfg.measure, t_max, h);
            for (double t : times) {
                fine.push_back(gf.at(t));
                coarse.push_back(gc.at(t));
            }
        }
        for (std::size_t k = 0; k < times.size(); ++k) {
            const RMatrix v = expansion_value(e, times[k]);
            emit(times[k], v, fine[k]);
            ts.push_back(times[k]);
            residual.push_back((v - fine[k]).cwiseAbs().maxCoeff());
            floor.push_back(std::max(3.0 * (fine[k] - coarse[k]).cwiseAbs().maxCoeff(),
                                     1e-9 * fine[k].cwiseAbs().maxCoeff()));
        }
        st = slope_test(ts, residual, floor, e.remainder_exponent + 0.05, e.remainder_poly_degree);
    }
    result.exit_code = st.pass ? 0 : 2;
    result.summary = std::string("slope-test: ") + (st.pass ? "pass" : "fail") + " slope=" + format_double(st.slope) +
                     " bound=" + format_double(st.bound) + " points=" + std::to_string(st.points) +
                     (st.note.empty() ? "" : " (" + st.note + ")") + " max_rel_err=" + format_double(max_rel);
    return result;
}

CommandResult cmd_simulate(const RunConfig& cfg, std::optional<std::uint64_t> seed) {
    CommandResult result;
    result.output = "t,initial_type,mean,std_error,replications,seed\n";
    const MeasureMatrix m = cfg.lattice ? embed(cfg.lattice_measure) : cfg.measure;
    const Characteristic f = cfg.characteristic.value_or(Characteristic::counting(cfg.p));
    const BranchingModel model = BranchingModel::from_measure(m, f, cfg.lifetimes);
    const std::vector<double> times = cfg.oracle.t.empty() ? std::vector<double>{cfg.oracle.grid_t} : cfg.oracle.t;
    const std::uint64_t s = seed.value_or(cfg.oracle.mc_seed);
    for (int i = 0; i < cfg.p; ++i) {
        const SimEstimate est = cmj_simulate(model, times, cfg.oracle.mc_replications, s, i);
        for (std::size_t g = 0; g < times.size(); ++g)
            result.output += csv_row({format_double(times[g]), std::to_string(i), format_double(est.mean[g]),
                                      format_double(est.std_error[g]), std::to_string(est.replications),
                                      std::to_string(est.seed)});
    }
    result.summary = std::to_string(cfg.oracle.mc_replications) + " replication(s) per initial type";
    return result;
}

}  // namespace mre
