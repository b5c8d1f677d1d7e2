#pragma once

// Sample-and-hold closed loop: the feedback is evaluated at the instants
//   tau_0 = 0,  tau_{i+1} = tau_i + h exp(-d~(tau_i))
// and held until the next instant.

#include <cstddef>
#include <string>
#include <vector>

#include "chainstab/dynamics.hpp"
#include "chainstab/integrate.hpp"
#include "chainstab/setchain.hpp"

namespace chainstab {

/// Sampling instants in [0, t_end] generated by period h and schedule d~.
std::vector<double> realized_instants(double h, const SchedulePerturbation& schedule, double t_end);

enum class Termination { reached_t_end, finite_escape, step_limit };

std::string to_string(Termination t);

struct Trajectory {
    std::size_t state_dim = 0;
    std::size_t control_dim = 0;
    /// One segment per held interval; segment k starts at instants[k].
    std::vector<DenseSegment> segments;
    std::vector<double> instants;
    std::vector<Vec> controls;
    std::vector<std::size_t> cells;

    Termination termination = Termination::reached_t_end;
    double termination_time = 0.0;
    /// True when the final time coincides with a sampling instant.
    bool ends_on_instant = false;

    std::size_t last_cell() const { return cells.empty() ? 0 : cells.back(); }
    ConstSpan final_state() const { return segments.back().final_state(); }
    double final_time() const { return segments.back().end_time(); }
    /// x(tau_k)
    ConstSpan state_at_instant(std::size_t k) const { return segments[k].state(0); }
    /// Piecewise-linear interpolation across segments.
    Vec state_at(double t) const;
    /// Largest |x(t)| over all stored grid points.
    double max_norm() const;
};

/// Simulates x' = f(d(t), x, k(x(tau_i))) from x(0) = x0 to t_end.
/// A finite escape or step-limit failure ends the run early and is reported
/// through `termination`; the partial solution is kept.
/// Throws NotCovered if a sampled state lies outside every chain region.
Trajectory simulate_closed_loop(const ControlSystem& sys, const PiecewiseFeedback& feedback, ConstSpan x0,
                                const DisturbanceSignal& disturbance, const SchedulePerturbation& schedule,
                                double t_end, const IntegratorConfig& cfg = {});

}  // namespace chainstab
