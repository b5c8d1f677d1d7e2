#pragma once

// Monte-Carlo assessment of the closed loop (Lagrange stability, Lyapunov
// stability, uniform attractivity) and the chain set-descent property.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainstab/hybrid.hpp"
#include "chainstab/scenarios.hpp"

namespace chainstab {

/// Bound |x(t)| <= envelope(x0, t); return +inf where the envelope does not apply.
using TrajectoryEnvelope = std::function<double(ConstSpan x0, double t)>;

struct SuiteOptions {
    std::vector<double> radii{1.0, 5.0, 15.0};
    std::vector<double> epsilons{0.1, 0.01};
    std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    std::size_t trials = 100;           ///< per radius
    std::size_t lyapunov_trials = 20;   ///< per delta level
    double t_end = 20.0;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    double disturbance_mesh = 0.5;
    /// Random sampling-schedule perturbation in [0, schedule_max] on a mesh; 0 disables it.
    double schedule_max = 1.0;
    double schedule_mesh = 0.5;
    double envelope_tol = 1e-9;
    TrajectoryEnvelope envelope;
    std::string envelope_label;
    IntegratorConfig integrator;
};

struct SuiteTrial {
    std::string group;  ///< "radius" or "delta"
    double level = 0.0;
    Vec x0;
    std::uint64_t seed = 0;
    double sup_norm = 0.0;
    double final_norm = 0.0;
    std::vector<double> settling;  ///< per epsilon; +inf if not settled
    Termination termination = Termination::reached_t_end;
    double termination_time = 0.0;
    double worst_envelope_excess = -std::numeric_limits<double>::infinity();
};

struct IngredientVerdict {
    bool pass = true;
    std::string witness;
    std::ptrdiff_t worst_trial = -1;

    nlohmann::json to_json() const;
};

struct StabilityReport {
    std::string system_label;
    std::size_t trial_count = 0;
    SuiteOptions options;
    std::vector<SuiteTrial> trials;
    /// sup|x| over trials started at radius <= radii[k] (running max).
    std::vector<double> lagrange_table;
    /// lyapunov_table[k] = sup|x| over trials started at radius deltas[k]
    std::vector<double> lyapunov_table;
    /// settling[e][k] over epsilons sorted descending and radii ascending.
    std::vector<std::vector<double>> settling;
    std::vector<double> epsilons_sorted;
    std::vector<double> radii_sorted;
    IngredientVerdict lagrange, lyapunov, attractivity, envelope;
    bool envelope_checked = false;

    bool pass() const { return lagrange.pass && lyapunov.pass && attractivity.pass && envelope.pass; }
    nlohmann::json to_json() const;
};

/// Runs the suite. Finite escape counts as a Lagrange failure with witness.
StabilityReport run_stability_suite(const ControlSystem& sys, const PiecewiseFeedback& fb, const SuiteOptions& opt);

// ---------------------------------------------------------------------------
// Set descent
// ---------------------------------------------------------------------------

struct DescentViolation {
    std::size_t instant = 0;
    std::string kind;  ///< no_descent, late_descent, bound_a, late_theta_entry, left_theta
    double time = 0.0;
    std::string detail;
};

struct DescentReport {
    std::size_t checked_instants = 0;
    /// (time, cell) at every change of cell index.
    std::vector<std::pair<double, std::size_t>> transitions;
    double theta_entry_time = std::numeric_limits<double>::quiet_NaN();
    double theta_entry_bound = std::numeric_limits<double>::infinity();
    /// max over instants of (descent delay) / (allowed window)
    double worst_window_ratio = 0.0;
    std::vector<DescentViolation> violations;
    bool pass() const { return violations.empty(); }

    nlohmann::json to_json() const;
};

/// For each instant tau_i in a cell k > 1: a later instant with a smaller cell
/// within c + b(|x(tau_i)|) + r, and |x(t)| <= a(|x(tau_i)|) in between. Also
/// checks the Theta-entry time against N (c + b(a^N(|x0|)) + r) and, when
/// `theta` is given, that dense points after entry stay in Theta.
DescentReport check_set_descent(const Trajectory& traj, const DescentBounds& bounds, double time_tol = 1e-6,
                                const Region* theta = nullptr);

}  // namespace chainstab
