#pragma once

// Command implementations shared by the CLI and the tests. Output is
// deterministic: no timings, no wall-clock or OS entropy.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "chainstab/config.hpp"
#include "chainstab/hybrid.hpp"

namespace chainstab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitCheckFailed = 3 };

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// Header: t,x_1..x_n,u_1..u_m,is_sampling_instant,cell_index. One row per
/// dense grid point; a run that ended early gets a trailing comment line.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
std::string csv_header(std::size_t n, std::size_t m);

/// Throws ConfigError when the base period would need more than `limit` instants.
void check_period_budget(double period, double t_end, double limit = 1e8);

/// Runs one closed-loop simulation from the configuration.
Trajectory simulate_from_config(const ScenarioConfig& cfg);

struct CommandOutcome {
    nlohmann::json report;
    int exit_code = kExitOk;
};

CommandOutcome run_certify(const ScenarioConfig& cfg);
CommandOutcome run_suite(const ScenarioConfig& cfg);

/// Configuration reproducing figure 1, 2 or 3.
ScenarioConfig figure_config(int index);
/// Summary of a figure run (entry time into Theta, final state, ...).
nlohmann::json figure_summary(int index, const Trajectory& traj);

nlohmann::json scenario_listing();

/// Pretty JSON text with a trailing newline.
std::string dump_report(const nlohmann::json& j);

}  // namespace chainstab
