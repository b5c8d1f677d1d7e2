#include <catch_amalgamated.hpp>

#include <sstream>

#include "chainstab/commands.hpp"
#include "chainstab/errors.hpp"

using namespace chainstab;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<double> fields(const std::string& line) {
    std::vector<double> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(std::stod(f));
    return out;
}

std::string csv_of(const Trajectory& t) {
    std::ostringstream s;
    write_trajectory_csv(t, s);
    return s.str();
}

ScenarioConfig config(const std::string& name) {
    return load_config(std::string(CHAINSTAB_SOURCE_DIR) + "/configs/" + name);
}

}  // namespace

TEST_CASE("CSV header is fixed", "[commands]") {
    CHECK(csv_header(2, 1) == "t,x_1,x_2,u_1,is_sampling_instant,cell_index");
    CHECK(csv_header(1, 1) == "t,x_1,u_1,is_sampling_instant,cell_index");
    const auto text = csv_of(simulate_from_config(config("scalar_x0_5.json")));
    CHECK(lines_of(text).front() == "t,x_1,u_1,is_sampling_instant,cell_index");
}

TEST_CASE("shortest round-trip numbers", "[commands]") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(20.0) == "20");
    CHECK(format_number(-1.5e-300) == "-1.5e-300");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("figure 1 CSV", "[commands]") {
    const auto traj = simulate_from_config(figure_config(1));
    const auto rows = lines_of(csv_of(traj));
    std::size_t instants = 0;
    bool in_theta = false;
    double prev_t = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        REQUIRE(f.size() == 6);
        CHECK(f[0] > prev_t);
        prev_t = f[0];
        if (f[4] == 1.0) ++instants;
        if (f[5] == 1.0) in_theta = true;
        if (!in_theta) {
            // x2 falls with slope -1 under the held control -1
            CHECK_THAT(f[2], WithinAbs(2.0 - f[0], 1e-10));
            CHECK(f[3] == -1.0);
            CHECK(f[5] == 4.0);
        }
    }
    CHECK(instants == traj.instants.size() + (traj.ends_on_instant ? 1 : 0));
    CHECK(fields(rows.back())[0] == 20.0);
    CHECK(fields(rows[1]) == std::vector<double>{0, 10, 2, -1, 1, 4});
}

TEST_CASE("zero initial state gives zero columns", "[commands]") {
    auto cfg = figure_config(2);
    cfg.initial_state = {0, 0};
    cfg.t_end = 3.0;
    const auto rows = lines_of(csv_of(simulate_from_config(cfg)));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        CHECK(f[1] == 0.0);
        CHECK(f[2] == 0.0);
    }
}

TEST_CASE("early termination is flagged in a trailing comment", "[commands]") {
    auto cfg = figure_config(1);
    cfg.initial_state = {0, 30};
    cfg.t_end = 5.0;
    cfg.integrator.blowup_norm_threshold = 30.1;
    const auto traj = simulate_from_config(cfg);
    CHECK(traj.termination == Termination::finite_escape);
    const auto rows = lines_of(csv_of(traj));
    CHECK(rows.back().rfind("# terminated: finite_escape t=", 0) == 0);
    CHECK(rows.size() > 3);
}

TEST_CASE("simulation output is reproducible", "[commands]") {
    const auto cfg = config("jet_random_disturbance.json");
    CHECK(csv_of(simulate_from_config(cfg)) == csv_of(simulate_from_config(cfg)));
}

TEST_CASE("certified jet period needs an explicit h", "[commands]") {
    auto cfg = figure_config(1);
    cfg.h.reset();
    CHECK_THROWS_AS(simulate_from_config(cfg), ConfigError);
    CHECK_NOTHROW(check_period_budget(0.001, 20.0));
}

TEST_CASE("certify reports", "[commands]") {
    SECTION("sampling bound side by side") {
        auto cfg = figure_config(1);
        cfg.certify.sampling_bound = true;
        const auto out = run_certify(cfg);
        CHECK(out.exit_code == kExitOk);
        const auto& sb = out.report["sampling_bound"];
        CHECK(sb["h_simulated"].get<double>() == 0.001);
        CHECK(sb["h_tilde"].get<double>() < 1e-14);
        CHECK(sb.contains("gamma"));
        CHECK(sb.contains("M"));
    }
    SECTION("wrong delta fails with a witness") {
        const auto out = run_certify(config("jet_wrong_delta.json"));
        CHECK(out.exit_code == kExitCheckFailed);
        const auto& d = out.report["decrease"][0];
        CHECK_FALSE(d["pass"].get<bool>());
        CHECK(d["witness_x"].size() == 2);
    }
    SECTION("decrease and reachability pass") {
        const auto a = run_certify(config("jet_certify.json"));
        CHECK(a.exit_code == kExitOk);
        CHECK(a.report["decrease"][0]["worst"].get<double>() <= -7.0);
        CHECK(dump_report(a.report) == dump_report(run_certify(config("jet_certify.json")).report));
    }
}

TEST_CASE("suite commands", "[commands]") {
    const auto ok = run_suite(config("scalar_suite.json"));
    CHECK(ok.exit_code == kExitOk);
    CHECK(ok.report["verdicts"]["envelope"]["pass"].get<bool>());
    const auto fault = run_suite(config("jet_fault_injected.json"));
    CHECK(fault.exit_code == kExitCheckFailed);
    CHECK_FALSE(fault.report["verdicts"]["attractivity"]["pass"].get<bool>());
}

TEST_CASE("scenario listing", "[commands]") {
    const auto j = scenario_listing();
    REQUIRE(j["scenarios"].size() == 2);
    CHECK(j["scenarios"][0]["label"] == "jet_engine_perturbed");
    CHECK(j["scenarios"][1]["label"] == "scalar_positive_drift");
    CHECK(dump_report(j).back() == '\n');
}
