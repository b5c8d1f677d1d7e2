#pragma once

// Built-in systems: the perturbed jet-engine model with its four-cell
// feedback, and the scalar system x' = a(x) + u with its countable chain.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chainstab/certify.hpp"
#include "chainstab/dynamics.hpp"
#include "chainstab/lyapunov.hpp"
#include "chainstab/region.hpp"
#include "chainstab/setchain.hpp"

namespace chainstab {

inline constexpr const char* kJetEngineLabel = "jet_engine_perturbed";
inline constexpr const char* kScalarLabel = "scalar_positive_drift";

struct FigureScenario {
    int index = 0;
    std::string description;
    DisturbanceSignal disturbance = DisturbanceSignal::none();
    SchedulePerturbation schedule;
    Vec x0;
    double t_end = 20.0;
    double h = 0.001;
};

/// Upper bounds used by the set-descent check: c, b, a combined over the
/// chain's reachability certificates, dwell r and chain length N.
struct DescentBounds {
    double c = 0.0;
    MonotoneEnvelope b;
    MonotoneEnvelope a;
    double r = 1.0;
    std::size_t chain_length = 1;
};

class JetEngineScenario {
public:
    double epsilon = 0.0;
    double R = 0.0;
    double L = 0.0;
    double gamma = 0.0;
    double M = 0.0;
    double r = 1.0;
    /// Right-hand side of the sampling-period bound, and the h~ used (just below it).
    double h_bound = 0.0;
    double h_tilde = 0.0;

    std::shared_ptr<const ControlSystem> system;
    LyapunovPtr V;
    Region theta = Region::everything();
    std::vector<Region> omegas;  ///< Omega_1..Omega_4
    std::vector<Vec> controls;   ///< v_2..v_4
    InnerFeedback inner;

    /// Feedback with the certified period min(h~, r).
    const PiecewiseFeedback& feedback() const { return *feedback_; }
    /// Same law sampled with base period h (the figures use h = epsilon).
    PiecewiseFeedback simulation_feedback(double h) const { return feedback_->with_period(h); }

    /// Figure scenarios 1, 2, 3. Throws InvalidArgument for other indices.
    FigureScenario figure(int index) const;

    /// Reachability of Omega_2 from Omega_4 (v = -1) and from Omega_3 (v = +1) with
    /// c = 0, b(s) = s, a(s) = 2s exp(4 + 4s) and the closed-form hitting times.
    ReachabilityCertificate omega4_to_omega2() const;
    ReachabilityCertificate omega3_to_omega2() const;

    /// Inputs for the explicit bounds of reachability of A = {|x2| <= 1, |x1| <= 4}
    /// from Omega_2 with v = 0: V = x1^2, R = 16, delta = 7, p = 4, a1(s) = s, a2(s) = 2s.
    ReachBoundsInput omega2_bounds_input() const;
    /// Certificate assembled from those bounds.
    ReachabilityCertificate omega2_to_target() const;
    Region omega2_target() const;

    /// Pointwise max of the three certificates' (c, b, a) with r = 1, N = 4.
    DescentBounds descent_bounds() const;

    nlohmann::json constants_json() const;

private:
    friend JetEngineScenario build_jet_engine(double epsilon);
    std::optional<PiecewiseFeedback> feedback_;
};

/// Throws NonpositiveEpsilon.
JetEngineScenario build_jet_engine(double epsilon = 0.001);

class ScalarScenario {
public:
    std::string drift_label;
    ScalarFn drift;
    double L = 0.0;
    double h_tilde = 0.0;
    double r = 1.0;
    std::shared_ptr<const ControlSystem> system;
    Region theta = Region::everything();
    InnerFeedback inner;

    const PiecewiseFeedback& feedback() const { return *feedback_; }

    /// v_j = -1 - max of a over [j-1, j] (grid step 1e-4 plus endpoints), j >= 2.
    double chain_control(std::size_t j) const;
    /// Omega_j = (j-1, j], j >= 2.
    static Region chain_region(std::size_t j);

private:
    friend ScalarScenario build_scalar(const std::string& label, ScalarFn drift);
    std::optional<PiecewiseFeedback> feedback_;
};

/// Builds the scalar scenario for drift a. Throws NotPositiveDrift when
/// a(0) != 0 or a(x) <= 0 at a sampled x in +-(0, 100].
ScalarScenario build_scalar(const std::string& label, ScalarFn drift);

/// Named drifts available from configuration files: "x_squared", "x_fourth", "abs_x".
ScalarFn drift_by_name(const std::string& name);
std::vector<std::string> drift_names();

/// Labels of the built-in systems.
std::vector<std::string> scenario_labels();

}  // namespace chainstab
