#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "chainstab/commands.hpp"
#include "chainstab/errors.hpp"

using namespace chainstab;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    int figure = 0;
};

std::optional<std::size_t> env_workers() {
    const char* v = std::getenv("CHAINSTAB_WORKERS");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const unsigned long long n = std::strtoull(v, &end, 10);
    if (*end != '\0' || n == 0) throw ConfigError(std::string("CHAINSTAB_WORKERS: expected a positive integer, got '") + v + "'");
    return static_cast<std::size_t>(n);
}

ScenarioConfig resolve(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    ScenarioConfig cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers)
        cfg.workers = *o.workers;
    else if (auto w = env_workers())
        cfg.workers = *w;
    return cfg;
}

// Writes to --out when given, stdout otherwise.
void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open output file '" + o.out + "'");
    f << text;
}

int emit_trajectory(const Options& o, const Trajectory& traj) {
    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    emit(o, csv.str());
    if (traj.termination != Termination::reached_t_end) {
        std::cerr << "terminated: " << to_string(traj.termination) << " t=" << format_number(traj.termination_time)
                  << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_simulate(const Options& o) { return emit_trajectory(o, simulate_from_config(resolve(o))); }

int cmd_certify(const Options& o) {
    const auto res = run_certify(resolve(o));
    emit(o, dump_report(res.report));
    return res.exit_code;
}

int cmd_suite(const Options& o) {
    const auto res = run_suite(resolve(o));
    emit(o, dump_report(res.report));
    return res.exit_code;
}

int cmd_figure(const Options& o) {
    ScenarioConfig cfg = figure_config(o.figure);
    if (o.seed) cfg.seed = *o.seed;
    const auto traj = simulate_from_config(cfg);
    const int code = emit_trajectory(o, traj);
    if (!o.out.empty()) std::cout << dump_report(figure_summary(o.figure, traj));
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chainstab: sampled-data stabilization with set-chain feedback"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub, bool with_config) {
        if (with_config) sub->add_option("--config", o.config, "scenario configuration (JSON)")->required();
        sub->add_option("--out", o.out, "output file (default: stdout)");
        sub->add_option("--seed", o.seed, "override the configured seed");
        sub->add_option("--workers", o.workers, "worker threads (default: CHAINSTAB_WORKERS or config)")
            ->check(CLI::PositiveNumber);
    };

    auto* sim = app.add_subcommand("simulate", "run one closed-loop simulation and write a trajectory CSV");
    add_common(sim, true);
    auto* cert = app.add_subcommand("certify", "run the selected certification checks and write a report");
    add_common(cert, true);
    auto* suite = app.add_subcommand("suite", "run the Monte-Carlo stability suite and write a report");
    add_common(suite, true);
    auto* fig = app.add_subcommand("reproduce-figure", "write the trajectory CSV for figure 1, 2 or 3");
    fig->add_option("index", o.figure, "figure index")->required()->check(CLI::Range(1, 3));
    add_common(fig, false);
    auto* list = app.add_subcommand("list-scenarios", "list the registered systems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*cert) return cmd_certify(o);
        if (*suite) return cmd_suite(o);
        if (*fig) return cmd_figure(o);
        if (*list) {
            std::cout << dump_report(scenario_listing());
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
