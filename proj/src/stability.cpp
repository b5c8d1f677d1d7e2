#include "chainstab/stability.hpp"

#include <algorithm>
#include <cmath>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"
#include "chainstab/parallel.hpp"
#include "chainstab/random.hpp"

namespace chainstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec point_on_sphere(std::size_t n, double radius, Rng& rng, std::size_t k) {
    Vec x(n);
    if (radius == 0.0) return x;
    if (n == 1) {
        x[0] = (k % 2 == 0) ? radius : -radius;
        return x;
    }
    double len = 0.0;
    while (len == 0.0) {
        for (auto& c : x) c = rng.normal();
        len = norm(x);
    }
    for (auto& c : x) c *= radius / len;
    return x;
}

// Last exit time from the closed eps-ball, +inf if outside at the final point.
double settling_time(const Trajectory& traj, double eps) {
    for (std::size_t s = traj.segments.size(); s-- > 0;) {
        const auto& seg = traj.segments[s];
        for (std::size_t i = seg.size(); i-- > 0;) {
            if (norm(seg.state(i)) <= eps) continue;
            if (s + 1 == traj.segments.size() && i + 1 == seg.size()) return kInf;
            double lo = seg.time(i);
            double hi = i + 1 < seg.size() ? seg.time(i + 1) : traj.segments[s + 1].time(1);
            while (hi - lo > 1e-9 * std::max(1.0, hi)) {
                const double mid = 0.5 * (lo + hi);
                (norm(traj.state_at(mid)) > eps ? lo : hi) = mid;
            }
            return hi;
        }
    }
    return 0.0;
}

std::string describe_trial(const SuiteTrial& t) {
    std::string s = t.group + " " + std::to_string(t.level) + " x0 = (";
    for (std::size_t i = 0; i < t.x0.size(); ++i) s += (i ? ", " : "") + std::to_string(t.x0[i]);
    return s + ") seed " + std::to_string(t.seed);
}

}  // namespace

nlohmann::json IngredientVerdict::to_json() const {
    nlohmann::json j{{"pass", pass}};
    if (!witness.empty()) j["witness"] = witness;
    if (worst_trial >= 0) j["worst_trial"] = worst_trial;
    return j;
}

nlohmann::json StabilityReport::to_json() const {
    using json_util::number;
    using json_util::vec;
    nlohmann::json trials_j = nlohmann::json::array();
    for (const auto& t : trials) {
        trials_j.push_back({{"group", t.group},
                            {"level", number(t.level)},
                            {"x0", vec(t.x0)},
                            {"seed", t.seed},
                            {"sup_norm", number(t.sup_norm)},
                            {"final_norm", number(t.final_norm)},
                            {"settling", vec(t.settling)},
                            {"termination", to_string(t.termination)},
                            {"termination_time", number(t.termination_time)}});
    }
    nlohmann::json settling_j = nlohmann::json::array();
    for (const auto& row : settling) settling_j.push_back(vec(row));
    nlohmann::json j{{"system", system_label},
                     {"trial_count", trial_count},
                     {"options",
                      {{"radii", vec(options.radii)},
                       {"epsilons", vec(options.epsilons)},
                       {"deltas", vec(options.deltas)},
                       {"trials_per_radius", options.trials},
                       {"trials_per_delta", options.lyapunov_trials},
                       {"t_end", number(options.t_end)},
                       {"seed", options.seed},
                       {"disturbance_mesh", number(options.disturbance_mesh)},
                       {"schedule_max", number(options.schedule_max)},
                       {"schedule_mesh", number(options.schedule_mesh)}}},
                     {"lagrange_table", {{"radii", vec(radii_sorted)}, {"sup_norm", vec(lagrange_table)}}},
                     {"lyapunov_table", {{"deltas", vec(options.deltas)}, {"sup_norm", vec(lyapunov_table)}}},
                     {"settling", {{"epsilons", vec(epsilons_sorted)}, {"radii", vec(radii_sorted)}, {"table", settling_j}}},
                     {"verdicts",
                      {{"lagrange", lagrange.to_json()},
                       {"lyapunov", lyapunov.to_json()},
                       {"attractivity", attractivity.to_json()}}},
                     {"pass", pass()},
                     {"trials", trials_j}};
    if (envelope_checked) {
        j["verdicts"]["envelope"] = envelope.to_json();
        j["verdicts"]["envelope"]["label"] = options.envelope_label;
    }
    return j;
}

StabilityReport run_stability_suite(const ControlSystem& sys, const PiecewiseFeedback& fb, const SuiteOptions& opt) {
    opt.integrator.validate();
    if (opt.trials == 0) throw InvalidArgument("suite needs at least one trial per radius");
    if (opt.radii.empty() || opt.epsilons.empty()) throw InvalidArgument("suite needs radii and epsilon levels");
    if (!(opt.t_end > 0.0)) throw InvalidArgument("t_end must be positive");
    for (double r : opt.radii)
        if (!(r >= 0.0)) throw InvalidArgument("radii must be >= 0");
    for (double e : opt.epsilons)
        if (!(e > 0.0)) throw InvalidArgument("epsilon levels must be positive");

    StabilityReport rep;
    rep.system_label = sys.label();
    rep.options = opt;
    rep.radii_sorted = opt.radii;
    std::sort(rep.radii_sorted.begin(), rep.radii_sorted.end());
    rep.epsilons_sorted = opt.epsilons;
    std::sort(rep.epsilons_sorted.begin(), rep.epsilons_sorted.end(), std::greater<>());

    struct Plan {
        std::string group;
        double level;
        std::size_t index;  // position within its level
    };
    std::vector<Plan> plan;
    for (double r : rep.radii_sorted)
        for (std::size_t k = 0; k < opt.trials; ++k) plan.push_back({"radius", r, k});
    for (double d : opt.deltas)
        for (std::size_t k = 0; k < opt.lyapunov_trials; ++k) plan.push_back({"delta", d, k});

    rep.trials.resize(plan.size());
    parallel_for(plan.size(), opt.workers, [&](std::size_t i) {
        const auto& p = plan[i];
        SuiteTrial& t = rep.trials[i];
        t.group = p.group;
        t.level = p.level;
        t.seed = stream_seed(opt.seed, i);
        Rng rng(t.seed);
        t.x0 = point_on_sphere(sys.state_dim(), p.level, rng, p.index);
        const auto dist = sys.disturbance_dim() == 0
                              ? DisturbanceSignal::none()
                              : DisturbanceSignal::random_piecewise(sys.disturbance_box(), opt.disturbance_mesh,
                                                                    stream_seed(t.seed, 1));
        const auto sched = opt.schedule_max > 0.0
                               ? SchedulePerturbation::random_tabulated(opt.schedule_mesh, opt.schedule_max, opt.t_end,
                                                                        stream_seed(t.seed, 2))
                               : SchedulePerturbation::zero();
        const auto traj = simulate_closed_loop(sys, fb, t.x0, dist, sched, opt.t_end, opt.integrator);
        t.termination = traj.termination;
        t.termination_time = traj.termination_time;
        t.sup_norm = traj.max_norm();
        t.final_norm = norm(traj.final_state());
        for (double eps : rep.epsilons_sorted)
            t.settling.push_back(traj.termination == Termination::reached_t_end ? settling_time(traj, eps) : kInf);
        if (opt.envelope) {
            for (const auto& seg : traj.segments)
                for (std::size_t k = 0; k < seg.size(); ++k) {
                    const double bound = opt.envelope(t.x0, seg.time(k));
                    if (std::isfinite(bound))
                        t.worst_envelope_excess = std::max(t.worst_envelope_excess, norm(seg.state(k)) - bound);
                }
        }
    });
    rep.trial_count = rep.trials.size();

    // Lagrange: running max of sup |x| over radii
    rep.lagrange_table.assign(rep.radii_sorted.size(), 0.0);
    double worst_sup = -1.0;
    for (std::size_t i = 0; i < rep.trials.size(); ++i) {
        const auto& t = rep.trials[i];
        if (t.group != "radius") continue;
        const auto k = static_cast<std::size_t>(
            std::lower_bound(rep.radii_sorted.begin(), rep.radii_sorted.end(), t.level) - rep.radii_sorted.begin());
        rep.lagrange_table[k] = std::max(rep.lagrange_table[k], t.sup_norm);
        if (t.termination != Termination::reached_t_end && rep.lagrange.pass) {
            rep.lagrange.pass = false;
            rep.lagrange.worst_trial = static_cast<std::ptrdiff_t>(i);
            rep.lagrange.witness = to_string(t.termination) + " at t = " + std::to_string(t.termination_time) + ": " +
                                   describe_trial(t);
        }
        if (rep.lagrange.pass && t.sup_norm > worst_sup) {
            worst_sup = t.sup_norm;
            rep.lagrange.worst_trial = static_cast<std::ptrdiff_t>(i);
        }
    }
    for (std::size_t k = 1; k < rep.lagrange_table.size(); ++k)
        rep.lagrange_table[k] = std::max(rep.lagrange_table[k], rep.lagrange_table[k - 1]);
    for (double v : rep.lagrange_table)
        if (!std::isfinite(v) && rep.lagrange.pass) {
            rep.lagrange.pass = false;
            rep.lagrange.witness = "non-finite sup norm";
        }

    // Lyapunov: every epsilon level admits a delta level whose trials stay inside it
    rep.lyapunov_table.assign(opt.deltas.size(), 0.0);
    for (const auto& t : rep.trials) {
        if (t.group != "delta") continue;
        const auto k = static_cast<std::size_t>(std::find(opt.deltas.begin(), opt.deltas.end(), t.level) - opt.deltas.begin());
        const double s = t.termination == Termination::reached_t_end ? t.sup_norm : kInf;
        rep.lyapunov_table[k] = std::max(rep.lyapunov_table[k], s);
    }
    if (!opt.deltas.empty()) {
        for (double eps : rep.epsilons_sorted) {
            const bool ok = std::any_of(rep.lyapunov_table.begin(), rep.lyapunov_table.end(),
                                        [&](double s) { return s <= eps; });
            if (!ok && rep.lyapunov.pass) {
                rep.lyapunov.pass = false;
                rep.lyapunov.witness = "no delta level keeps trajectories within " + std::to_string(eps);
            }
        }
    }

    // Attractivity: settling into each epsilon ball before t_end
    rep.settling.assign(rep.epsilons_sorted.size(), std::vector<double>(rep.radii_sorted.size(), 0.0));
    for (std::size_t i = 0; i < rep.trials.size(); ++i) {
        const auto& t = rep.trials[i];
        if (t.group != "radius") continue;
        const auto k = static_cast<std::size_t>(
            std::lower_bound(rep.radii_sorted.begin(), rep.radii_sorted.end(), t.level) - rep.radii_sorted.begin());
        for (std::size_t e = 0; e < rep.epsilons_sorted.size(); ++e) {
            rep.settling[e][k] = std::max(rep.settling[e][k], t.settling[e]);
            if (!std::isfinite(t.settling[e]) && rep.attractivity.pass) {
                rep.attractivity.pass = false;
                rep.attractivity.worst_trial = static_cast<std::ptrdiff_t>(i);
                rep.attractivity.witness = "not within " + std::to_string(rep.epsilons_sorted[e]) + " at t_end, |x| = " +
                                           std::to_string(t.final_norm) + ": " + describe_trial(t);
            }
        }
    }
    for (std::size_t e = 0; e < rep.settling.size(); ++e)
        for (std::size_t k = 0; k < rep.settling[e].size(); ++k) {
            if (k > 0) rep.settling[e][k] = std::max(rep.settling[e][k], rep.settling[e][k - 1]);
            if (e > 0) rep.settling[e][k] = std::max(rep.settling[e][k], rep.settling[e - 1][k]);
        }

    if (opt.envelope) {
        rep.envelope_checked = true;
        double worst = -kInf;
        for (std::size_t i = 0; i < rep.trials.size(); ++i) {
            const auto& t = rep.trials[i];
            if (t.worst_envelope_excess > worst) {
                worst = t.worst_envelope_excess;
                rep.envelope.worst_trial = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (worst > opt.envelope_tol) {
            rep.envelope.pass = false;
            rep.envelope.witness = "envelope exceeded by " + std::to_string(worst) + ": " +
                                   describe_trial(rep.trials[static_cast<std::size_t>(rep.envelope.worst_trial)]);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Set descent
// ---------------------------------------------------------------------------

nlohmann::json DescentReport::to_json() const {
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& [t, c] : transitions) tr.push_back({{"time", json_util::number(t)}, {"cell", c}});
    nlohmann::json viol = nlohmann::json::array();
    for (const auto& v : violations)
        viol.push_back({{"instant", v.instant}, {"kind", v.kind}, {"time", json_util::number(v.time)}, {"detail", v.detail}});
    return nlohmann::json{{"checked_instants", checked_instants},
                          {"transitions", tr},
                          {"theta_entry_time", json_util::number(theta_entry_time)},
                          {"theta_entry_bound", json_util::number(theta_entry_bound)},
                          {"worst_window_ratio", json_util::number(worst_window_ratio)},
                          {"violations", viol},
                          {"pass", pass()}};
}

DescentReport check_set_descent(const Trajectory& traj, const DescentBounds& bounds, double time_tol,
                                const Region* theta) {
    DescentReport rep;
    const std::size_t N = traj.cells.size();
    if (N == 0) return rep;

    std::vector<double> seg_max(traj.segments.size(), 0.0);
    for (std::size_t s = 0; s < traj.segments.size(); ++s)
        for (std::size_t k = 0; k < traj.segments[s].size(); ++k)
            seg_max[s] = std::max(seg_max[s], norm(traj.segments[s].state(k)));

    // next instant with a strictly smaller cell index
    std::vector<std::size_t> next_smaller(N, N);
    std::vector<std::size_t> stack;
    for (std::size_t i = N; i-- > 0;) {
        while (!stack.empty() && traj.cells[stack.back()] >= traj.cells[i]) stack.pop_back();
        next_smaller[i] = stack.empty() ? N : stack.back();
        stack.push_back(i);
    }

    for (std::size_t i = 0; i < N; ++i) {
        if (i == 0 || traj.cells[i] != traj.cells[i - 1]) rep.transitions.emplace_back(traj.instants[i], traj.cells[i]);
        if (traj.cells[i] == 1 && std::isnan(rep.theta_entry_time)) rep.theta_entry_time = traj.instants[i];
    }
    const double end_time = traj.final_time();
    const double s0 = norm(traj.state_at_instant(0));
    {
        double s = s0;
        for (std::size_t k = 0; k < bounds.chain_length; ++k) s = bounds.a(s);
        const double n = static_cast<double>(bounds.chain_length);
        rep.theta_entry_bound = n * (bounds.c + bounds.b(s) + bounds.r);
        if (std::isnan(rep.theta_entry_bound)) rep.theta_entry_bound = kInf;
    }
    if (!std::isnan(rep.theta_entry_time) && rep.theta_entry_time > rep.theta_entry_bound + time_tol)
        rep.violations.push_back({0, "late_theta_entry", rep.theta_entry_time,
                                  "bound " + std::to_string(rep.theta_entry_bound)});
    if (std::isnan(rep.theta_entry_time) && end_time > rep.theta_entry_bound + time_tol)
        rep.violations.push_back({0, "late_theta_entry", end_time, "never entered Theta"});

    for (std::size_t i = 0; i < N; ++i) {
        if (traj.cells[i] <= 1) continue;
        ++rep.checked_instants;
        const double t_i = traj.instants[i];
        const double s = norm(traj.state_at_instant(i));
        const double window = bounds.c + bounds.b(s) + bounds.r;
        const double a_bound = bounds.a(s);
        const std::size_t j = next_smaller[i];
        const double t_j = j < N ? traj.instants[j] : end_time;
        if (j == N) {
            if (end_time > t_i + window + time_tol)
                rep.violations.push_back({i, "no_descent", t_i, "no smaller cell before the end of the run"});
        } else {
            const double delay = t_j - t_i;
            if (window > 0.0) rep.worst_window_ratio = std::max(rep.worst_window_ratio, delay / window);
            if (delay > window + time_tol)
                rep.violations.push_back({i, "late_descent", t_i,
                                          "delay " + std::to_string(delay) + " > window " + std::to_string(window)});
        }
        const std::size_t last_seg = std::min(j, traj.segments.size());
        double sup = 0.0;
        for (std::size_t k = i; k < last_seg; ++k) sup = std::max(sup, seg_max[k]);
        if (j < traj.segments.size()) sup = std::max(sup, norm(traj.state_at_instant(j)));
        if (sup > a_bound * (1.0 + 1e-12))
            rep.violations.push_back({i, "bound_a", t_i,
                                      "sup |x| = " + std::to_string(sup) + " > a = " + std::to_string(a_bound)});
    }

    if (theta && !std::isnan(rep.theta_entry_time)) {
        const auto first = static_cast<std::size_t>(
            std::find(traj.cells.begin(), traj.cells.end(), std::size_t{1}) - traj.cells.begin());
        bool reported = false;
        for (std::size_t s = first; s < traj.segments.size() && !reported; ++s) {
            const auto& seg = traj.segments[s];
            for (std::size_t k = 0; k < seg.size(); ++k)
                if (!theta->contains(seg.state(k))) {
                    rep.violations.push_back({s, "left_theta", seg.time(k), "dense point outside Theta after entry"});
                    reported = true;
                    break;
                }
        }
    }
    return rep;
}

}  // namespace chainstab
