#include "chainstab/hybrid.hpp"

#include <algorithm>
#include <cmath>

#include "chainstab/errors.hpp"

namespace chainstab {

namespace {

// instants within this distance of t_end are taken to be t_end
double end_slack(double t_end) { return 1e-12 * std::max(1.0, std::abs(t_end)); }

}  // namespace

std::vector<double> realized_instants(double h, const SchedulePerturbation& schedule, double t_end) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("sampling period must be positive and finite");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be finite and >= 0");
    std::vector<double> out{0.0};
    double t = 0.0;
    for (;;) {
        const double next = t + h * std::exp(-schedule.value(t));
        if (next > t_end + end_slack(t_end)) break;
        if (!(next > t)) throw InvalidArgument("sampling gap underflows at t = " + std::to_string(t));
        t = std::abs(next - t_end) <= end_slack(t_end) ? t_end : next;
        out.push_back(t);
    }
    return out;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::reached_t_end: return "reached_t_end";
        case Termination::finite_escape: return "finite_escape";
        case Termination::step_limit: return "step_limit";
    }
    return "unknown";
}

Vec Trajectory::state_at(double t) const {
    if (segments.empty()) throw InvalidArgument("empty trajectory");
    auto it = std::upper_bound(instants.begin(), instants.end(), t);
    std::size_t k = it == instants.begin() ? 0 : static_cast<std::size_t>(it - instants.begin()) - 1;
    k = std::min(k, segments.size() - 1);
    return segments[k].state_at(t);
}

double Trajectory::max_norm() const {
    double m = 0.0;
    for (const auto& s : segments)
        for (std::size_t k = 0; k < s.size(); ++k) m = std::max(m, norm(s.state(k)));
    return m;
}

Trajectory simulate_closed_loop(const ControlSystem& sys, const PiecewiseFeedback& feedback, ConstSpan x0,
                                const DisturbanceSignal& disturbance, const SchedulePerturbation& schedule,
                                double t_end, const IntegratorConfig& cfg) {
    cfg.validate();
    if (x0.size() != sys.state_dim()) throw DimensionMismatch("initial state has the wrong dimension");
    if (!all_finite(x0)) throw InvalidArgument("initial state must be finite");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be positive and finite");
    if (disturbance.dim() != sys.disturbance_dim())
        throw DimensionMismatch("disturbance signal dimension differs from the system's");

    Trajectory traj;
    traj.state_dim = sys.state_dim();
    traj.control_dim = sys.control_dim();

    Vec x(x0.begin(), x0.end());
    double t = 0.0;
    const double slack = end_slack(t_end);
    while (t < t_end) {
        auto value = feedback.evaluate(x);
        const double gap = feedback.period() * std::exp(-schedule.value(t));
        double next = t + gap;
        bool lands_on_instant = true;
        if (next >= t_end - slack) {
            lands_on_instant = std::abs(next - t_end) <= slack;
            next = t_end;
        }
        traj.instants.push_back(t);
        traj.controls.push_back(value.u);
        traj.cells.push_back(value.cell);
        try {
            traj.segments.push_back(integrate_held(sys, disturbance, x, value.u, t, next, cfg));
        } catch (const FiniteEscape& e) {
            traj.segments.push_back(e.partial());
            traj.termination = Termination::finite_escape;
            traj.ends_on_instant = false;
            traj.termination_time = e.time();
            return traj;
        } catch (const StepLimitExceeded& e) {
            traj.segments.push_back(e.partial());
            traj.termination = Termination::step_limit;
            traj.ends_on_instant = false;
            traj.termination_time = e.time();
            return traj;
        }
        const auto xf = traj.segments.back().final_state();
        x.assign(xf.begin(), xf.end());
        t = next;
        traj.ends_on_instant = lands_on_instant;
    }
    traj.termination_time = t;
    return traj;
}

}  // namespace chainstab
