#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mre/cli.hpp"
#include "mre/errors.hpp"

namespace {

int write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "mre: cannot write " << path << "\n";
        return 1;
    }
    out << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic expansions for Markov renewal equations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::vector<double> t_values;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "Output file (default: stdout, or outputs.* in the config)");
    };
    CLI::App* analyze = app.add_subcommand("analyze", "Roots, coefficient matrices and condition checks (JSON)");
    CLI::App* expand = app.add_subcommand("expand", "Evaluate the expansion at the given times (CSV)");
    CLI::App* validate = app.add_subcommand("validate", "Compare the expansion with an oracle (CSV)");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimates of the mean (CSV)");
    for (CLI::App* sub : {analyze, expand, validate, simulate}) add_common(sub);
    expand->add_option("--t", t_values, "Evaluation times")->delimiter(',');
    simulate->add_option("--t", t_values, "Evaluation times")->delimiter(',');
    simulate->add_option("--seed", seed, "Override oracle.mc_seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        mre::RunConfig cfg = mre::load_config(config_path);
        mre::CommandResult result;
        std::string default_out = cfg.outputs.csv;
        if (*analyze) {
            result = mre::cmd_analyze(cfg);
            default_out = cfg.outputs.report;
        } else if (*expand) {
            if (t_values.empty()) t_values = cfg.oracle.t;
            result = mre::cmd_expand(cfg, t_values);
        } else if (*validate) {
            result = mre::cmd_validate(cfg);
        } else {
            if (!t_values.empty()) cfg.oracle.t = t_values;
            result = mre::cmd_simulate(cfg, seed);
        }
        if (write_output(result.output, out_path.empty() ? default_out : out_path) != 0) return 1;
        if (!result.summary.empty()) std::cerr << result.summary << "\n";
        return result.exit_code;
    } catch (const mre::Error& e) {
        std::cerr << "mre: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mre: " << e.what() << "\n";
        return 1;
    }
}
