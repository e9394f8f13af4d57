#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mre/measure.hpp"
#include "mre/oracle.hpp"

namespace mre {

struct RegionConfig {
    std::optional<double> theta;   // unset: alpha / 2 (non-lattice), alpha - 0.5 (lattice)
    std::optional<double> re_max;  // unset: alpha + 1
    double im_max = 50.0;
    bool operator==(const RegionConfig&) const = default;
};

struct ToleranceConfig {
    double tol_det = 1e-10;
    double tol_laurent = 1e-9;
    double tol_rho = 1e-12;
    bool operator==(const ToleranceConfig&) const = default;
};

struct OracleConfig {
    std::string kind = "auto";  // auto | exact | grid
    long lattice_n = 60;
    double grid_t = 3.0;
    double grid_h = 1e-3;
    long mc_replications = 10000;
    std::uint64_t mc_seed = 12345;
    std::vector<double> t;  // evaluation times; empty: defaults per command
    bool operator==(const OracleConfig&) const = default;
};

struct OutputConfig {
    std::string csv;
    std::string report;
    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    int p = 0;
    bool lattice = false;
    MeasureMatrix measure;
    LatticeMeasureMatrix lattice_measure;
    std::optional<Characteristic> characteristic;
    std::vector<Lifetime> lifetimes;
    RegionConfig region;
    ToleranceConfig tolerances;
    OracleConfig oracle;
    OutputConfig outputs;
    bool operator==(const RunConfig&) const = default;
};

/// Parses and validates a JSON document. Throws SchemaError (with the field
/// path) or DimensionError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// JSON with every default written out; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

struct CommandResult {
    int exit_code = 0;   // 0 pass, 1 error, 2 verdict fail
    std::string output;  // CSV or JSON report
    std::string summary;
};

CommandResult cmd_analyze(const RunConfig& cfg);
CommandResult cmd_expand(const RunConfig& cfg, const std::vector<double>& t_values);
CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg, std::optional<std::uint64_t> seed = std::nullopt);

/// "%.17g".
std::string format_double(double x);

struct SlopeTest {
    bool pass = true;
    double slope = 0.0;
    double bound = 0.0;
    int points = 0;
    std::string note;
};

/// Least-squares slope of log(residual) - degree * log(t) over the points whose
/// residual exceeds floor; passes if it is at most bound (or with fewer than 3 points).
SlopeTest slope_test(const std::vector<double>& t, const std::vector<double>& residual,
                     const std::vector<double>& floor, double bound, int degree = 0);

}  // namespace mre
