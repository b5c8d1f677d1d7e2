#include "chainstab/commands.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "chainstab/certify.hpp"
#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"
#include "chainstab/random.hpp"
#include "chainstab/stability.hpp"

namespace chainstab {

using json = nlohmann::json;

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_header(std::size_t n, std::size_t m) {
    std::string h = "t";
    for (std::size_t i = 1; i <= n; ++i) h += ",x_" + std::to_string(i);
    for (std::size_t i = 1; i <= m; ++i) h += ",u_" + std::to_string(i);
    return h + ",is_sampling_instant,cell_index";
}

namespace {

void append_number(std::string& line, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    line.append(buf, res.ptr);
}

void write_row(std::string& line, double t, ConstSpan x, const Vec& u, bool instant, std::size_t cell) {
    line.clear();
    append_number(line, t);
    for (double v : x) {
        line.push_back(',');
        append_number(line, v);
    }
    for (double v : u) {
        line.push_back(',');
        append_number(line, v);
    }
    line += instant ? ",1," : ",0,";
    line += std::to_string(cell);
    line.push_back('\n');
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << csv_header(traj.state_dim, traj.control_dim) << '\n';
    std::string line;
    const std::size_t S = traj.segments.size();
    for (std::size_t s = 0; s < S; ++s) {
        const auto& seg = traj.segments[s];
        const bool last = s + 1 == S;
        const std::size_t rows = last ? seg.size() : seg.size() - 1;
        for (std::size_t k = 0; k < rows; ++k) {
            bool instant = k == 0;
            if (last && k + 1 == seg.size() && k > 0)
                instant = traj.termination == Termination::reached_t_end && traj.ends_on_instant;
            write_row(line, seg.time(k), seg.state(k), traj.controls[s], instant, traj.cells[s]);
            out << line;
        }
    }
    if (traj.termination != Termination::reached_t_end)
        out << "# terminated: " << to_string(traj.termination) << " t=" << format_number(traj.termination_time) << '\n';
}

void check_period_budget(double period, double t_end, double limit) {
    if (t_end / period > limit)
        throw ConfigError("sampling period " + format_number(period) + " needs more than " + format_number(limit) +
                          " instants to reach t_end = " + format_number(t_end) + "; set \"h\" in the config");
}

Trajectory simulate_from_config(const ScenarioConfig& cfg) {
    auto built = build_scenario(cfg);
    if (cfg.initial_state.size() != built.system->state_dim())
        throw ConfigError("config.initial_state: expected " + std::to_string(built.system->state_dim()) + " entries");
    check_period_budget(built.feedback->period(), cfg.t_end);
    return simulate_closed_loop(*built.system, *built.feedback, cfg.initial_state, built.disturbance, built.schedule,
                                cfg.t_end, cfg.integrator);
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

CommandOutcome run_certify(const ScenarioConfig& cfg) {
    auto built = build_scenario(cfg);
    const auto& sys = *built.system;
    json report{{"system", sys.label()}, {"seed", cfg.seed}};
    bool pass = true;

    if (built.jet) report["constants"] = built.jet->constants_json();
    if (built.scalar)
        report["constants"] = {{"drift", built.scalar->drift_label},
                               {"L", json_util::number(built.scalar->L)},
                               {"h_tilde", json_util::number(built.scalar->h_tilde)}};

    if (cfg.certify.sampling_bound) {
        json sb;
        if (built.jet) {
            const auto& jet = *built.jet;
            sb = {{"L", json_util::number(jet.L)},
                  {"gamma", json_util::number(jet.gamma)},
                  {"M", json_util::number(jet.M)},
                  {"h_bound", json_util::number(jet.h_bound)},
                  {"h_tilde", json_util::number(jet.h_tilde)},
                  {"h_certified", json_util::number(jet.feedback().certified_period())},
                  {"h_simulated", json_util::number(built.feedback->period())}};
        } else {
            const auto& sc = *built.scalar;
            sb = {{"L", json_util::number(sc.L)},
                  {"h_tilde", json_util::number(sc.h_tilde)},
                  {"h_certified", json_util::number(sc.feedback().certified_period())},
                  {"h_simulated", json_util::number(built.feedback->period())}};
        }
        sb["pass"] = true;
        report["sampling_bound"] = sb;
    }

    json dec = json::array();
    for (const auto& d : cfg.certify.decrease) {
        const auto region = Region::from_json(d.region, built.registry);
        const auto V = built.registry.find(d.function);
        if (!V) throw ConfigError("config.certify.decrease: unknown function '" + d.function + "'");
        DecreaseGrid grid;
        grid.truncation = d.truncation;
        grid.nodes_per_axis = d.nodes;
        grid.disturbance_nodes_per_axis = d.disturbance_nodes;
        DecreaseResult res;
        try {
            res = certify_decrease(sys, region, *V, d.v, d.level, d.delta, grid);
        } catch (const EmptyGrid&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("config.certify.decrease: ") + e.what());
        }
        auto j = res.to_json();
        j["label"] = d.label;
        j["function"] = d.function;
        j["v"] = json_util::vec(d.v);
        dec.push_back(j);
        pass = pass && res.pass;
    }
    if (!dec.empty()) report["decrease"] = dec;

    json pq = json::array();
    for (std::size_t i = 0; i < cfg.certify.property_q.size(); ++i) {
        const auto& q = cfg.certify.property_q[i];
        if (!built.jet) throw ConfigError("config.certify.property_q: certificates exist for the jet engine only");
        ReachabilityCertificate cert;
        if (q.certificate == "omega4_to_omega2")
            cert = built.jet->omega4_to_omega2();
        else if (q.certificate == "omega3_to_omega2")
            cert = built.jet->omega3_to_omega2();
        else if (q.certificate == "omega2_to_target")
            cert = built.jet->omega2_to_target();
        else
            throw ConfigError("config.certify.property_q[" + std::to_string(i) + "].certificate: unknown '" + q.certificate + "'");
        PropertyQOptions opt;
        opt.trials = q.trials;
        opt.seed = stream_seed(cfg.seed, 1000 + i);
        opt.sample_box = q.sample_box;
        opt.max_initial_norm = q.max_initial_norm;
        opt.disturbance_mesh = q.disturbance_mesh;
        opt.integrator = cfg.integrator;
        opt.workers = cfg.workers;
        const auto res = check_property_Q(sys, cert, opt);
        pq.push_back({{"certificate", cert.to_json()}, {"seed", opt.seed}, {"result", res.to_json()}});
        pass = pass && res.pass();
    }
    if (!pq.empty()) report["property_q"] = pq;

    if (cfg.certify.inequalities.enabled) {
        if (!built.jet) throw ConfigError("config.certify.inequalities: available for the jet engine only");
        const auto& jet = *built.jet;
        InequalityGrid grid;
        grid.nodes_per_axis = cfg.certify.inequalities.nodes;
        grid.disturbance_nodes_per_axis = cfg.certify.inequalities.disturbance_nodes;
        const double L = jet.L * cfg.certify.inequalities.L_scale;
        const auto rep = check_inner_inequalities(sys, jet.inner, *jet.V, jet.theta, L, jet.gamma, jet.M,
                                       [](double s) { return s; }, grid);
        auto j = rep.to_json();
        j["L_scale"] = json_util::number(cfg.certify.inequalities.L_scale);
        report["inequalities"] = j;
        pass = pass && rep.pass();
    }

    report["pass"] = pass;
    return {report, pass ? kExitOk : kExitCheckFailed};
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

CommandOutcome run_suite(const ScenarioConfig& cfg) {
    auto built = build_scenario(cfg);
    SuiteOptions opt;
    opt.radii = cfg.suite.radii;
    opt.epsilons = cfg.suite.epsilons;
    opt.deltas = cfg.suite.deltas;
    opt.trials = cfg.suite.trials;
    opt.lyapunov_trials = cfg.suite.lyapunov_trials;
    opt.t_end = cfg.suite.t_end;
    opt.seed = cfg.seed;
    opt.workers = cfg.workers;
    opt.disturbance_mesh = cfg.suite.disturbance_mesh;
    opt.schedule_max = cfg.suite.schedule_max;
    opt.schedule_mesh = cfg.suite.schedule_mesh;
    opt.integrator = cfg.integrator;
    if (cfg.suite.envelope == "exp_decay_positive") {
        opt.envelope_label = "exp(-t) |x0| for x0 in (0, 2)";
        opt.envelope = [](ConstSpan x0, double t) {
            return (x0[0] > 0.0 && x0[0] < 2.0) ? std::exp(-t) * x0[0] : std::numeric_limits<double>::infinity();
        };
    }
    check_period_budget(built.feedback->period(), opt.t_end);
    StabilityReport rep;
    try {
        rep = run_stability_suite(*built.system, *built.feedback, opt);
    } catch (const Error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw;
    }
    auto j = rep.to_json();
    j["period"] = json_util::number(built.feedback->period());
    return {j, rep.pass() ? kExitOk : kExitCheckFailed};
}

// ---------------------------------------------------------------------------
// figures and listing
// ---------------------------------------------------------------------------

ScenarioConfig figure_config(int index) {
    ScenarioConfig c;
    c.system = kJetEngineLabel;
    c.epsilon = 0.001;
    c.h = 0.001;
    c.initial_state = {10.0, 2.0};
    c.t_end = 20.0;
    AxisSpec zero, one, sine;
    zero.kind = "constant";
    zero.value = 0.0;
    one.kind = "constant";
    one.value = 1.0;
    sine.kind = "sinusoidal";
    switch (index) {
        case 1:
            c.disturbance = {zero, one};
            break;
        case 2:
            c.disturbance = {one, sine};
            break;
        case 3:
            c.disturbance = {one, one};
            c.schedule.kind = "abs_sin";
            break;
        default:
            throw ConfigError("figure index must be 1, 2 or 3");
    }
    return c;
}

json figure_summary(int index, const Trajectory& traj) {
    double entry = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < traj.cells.size(); ++i)
        if (traj.cells[i] == 1) {
            entry = traj.instants[i];
            break;
        }
    std::size_t points = 0;
    for (const auto& s : traj.segments) points += s.size();
    return json{{"figure", index},
                {"instants", traj.instants.size()},
                {"points", points},
                {"theta_entry_time", json_util::number(entry)},
                {"final_time", json_util::number(traj.final_time())},
                {"final_state", json_util::vec(Vec(traj.final_state().begin(), traj.final_state().end()))},
                {"termination", to_string(traj.termination)}};
}

json scenario_listing() {
    json drifts = json::array();
    for (const auto& d : drift_names()) drifts.push_back(d);
    return json{
        {"scenarios",
         json::array({json{{"label", kJetEngineLabel},
                           {"state_dim", 2},
                           {"control_dim", 1},
                           {"disturbance_dim", 2},
                           {"parameters", json::array({"epsilon", "h"})},
                           {"figures", json::array({1, 2, 3})}},
                      json{{"label", kScalarLabel},
                           {"state_dim", 1},
                           {"control_dim", 1},
                           {"disturbance_dim", 0},
                           {"parameters", json::array({"drift", "h"})},
                           {"drifts", drifts}}})}};
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

}  // namespace chainstab
