#pragma once

// Grid certification of Lyapunov decrease, the explicit (c, b, a) bounds
// built from it, Monte-Carlo checks of robust reachability under constant
// control, the maximum-sampling-period bound and the (z, x) inequality checks
// for the inner feedback, plus an empirical attractor-reach estimator.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainstab/dynamics.hpp"
#include "chainstab/integrate.hpp"
#include "chainstab/lyapunov.hpp"
#include "chainstab/region.hpp"
#include "chainstab/setchain.hpp"

namespace chainstab {

using ScalarFn = std::function<double(double)>;

/// Nondecreasing function on [0, inf). Either a closed form (assumed
/// nondecreasing) or a table made nondecreasing by a running max, linearly
/// interpolated and +inf past the last radius.
class MonotoneEnvelope {
public:
    MonotoneEnvelope() = default;
    static MonotoneEnvelope analytic(std::string label, ScalarFn fn);
    static MonotoneEnvelope tabulated(std::string label, std::vector<double> radii, std::vector<double> values);
    /// Pointwise max of several envelopes.
    static MonotoneEnvelope pointwise_max(std::string label, std::vector<MonotoneEnvelope> parts);

    double operator()(double s) const;
    const std::string& label() const { return label_; }
    bool is_tabulated() const { return !radii_.empty(); }
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& values() const { return values_; }

    nlohmann::json to_json() const;

private:
    std::string label_;
    ScalarFn fn_;
    std::vector<double> radii_;
    std::vector<double> values_;
};

/// The data of robust reachability of `target` from `source` under u = v.
struct ReachabilityCertificate {
    std::string label;
    Region source = Region::everything();
    Region target = Region::everything();
    Vec v;
    double r = 1.0;
    double c = 0.0;
    MonotoneEnvelope b;
    MonotoneEnvelope a;
    /// Per-state bound on the hitting time, if known (e.g. from V).
    std::function<double(ConstSpan)> t_bound;
    /// Closed-form hitting time, if known; check_property_Q compares against it.
    std::function<double(ConstSpan)> exact_hitting_time;
    std::string note;

    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Decrease of V on a grid
// ---------------------------------------------------------------------------

struct DecreaseGrid {
    /// State sampling box; defaults to the bounding box of the region.
    std::optional<Box> truncation;
    std::vector<std::size_t> nodes_per_axis;
    std::size_t disturbance_nodes_per_axis = 9;
    double margin_tol = 1e-9;
};

struct DecreaseResult {
    bool pass = false;
    double delta = 0.0;
    double level = 0.0;
    /// max of grad V . f over the evaluated nodes
    double worst = 0.0;
    Vec witness_x;
    Vec witness_d;
    Box truncation;
    std::vector<std::size_t> nodes_per_axis;
    std::size_t disturbance_nodes_per_axis = 0;
    Vec spacing;
    std::size_t state_nodes = 0;      ///< grid nodes in the truncation box
    std::size_t evaluated_nodes = 0;  ///< of which in region with V >= level

    nlohmann::json to_json() const;
};

/// Evaluates sup_d grad V(x) f(d, x, v) on grid nodes x in omega with V(x) >= level.
/// Pass iff the max is <= -delta + margin_tol. Throws EmptyGrid, InvalidArgument.
DecreaseResult certify_decrease(const ControlSystem& sys, const Region& omega, const LyapunovData& V, ConstSpan v,
                                double level, double delta, const DecreaseGrid& grid);

// ---------------------------------------------------------------------------
// Explicit bounds from a decrease certificate
// ---------------------------------------------------------------------------

struct ReachBoundsInput {
    LyapunovPtr V;
    std::size_t state_dim = 0;
    double level = 0.0;  ///< R
    double delta = 0.0;
    double p = 0.0;
    ScalarFn a1;
    ScalarFn a2;
    double r = 1.0;
    std::vector<double> radii;
    /// Directions are the normalized boundary nodes of a cube grid with this many nodes per axis.
    std::size_t direction_nodes_per_axis = 41;
};

struct ReachBounds {
    double c = 0.0;
    MonotoneEnvelope b;
    MonotoneEnvelope a;
    std::size_t directions = 0;
    /// T-bound(x0) = max(0, V(x0) - R) / delta
    std::function<double(ConstSpan)> t_bound;
};

/// Entries of a are +inf where the inverse leaves the double range.
ReachBounds reach_bounds(const ReachBoundsInput& in);

/// Solves a1(y) = target for y >= 0 by bracketing and bisection. Returns +inf
/// when a1 stays below the target on every representable argument; throws
/// InversionFailure on NaN.
double invert_increasing(const ScalarFn& a1, double target);

/// Unit vectors through the boundary nodes of [-1, 1]^n with `nodes_per_axis` nodes per axis.
std::vector<Vec> cube_directions(std::size_t dim, std::size_t nodes_per_axis);

// ---------------------------------------------------------------------------
// Monte-Carlo check of robust reachability
// ---------------------------------------------------------------------------

struct PropertyQOptions {
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    /// Initial states are drawn uniformly from this box and kept if in the source
    /// (and within max_initial_norm).
    Box sample_box;
    double max_initial_norm = std::numeric_limits<double>::infinity();
    double disturbance_mesh = 0.1;
    double time_tol = 1e-6;
    double hit_resolution = 1e-9;
    std::size_t workers = 1;
    IntegratorConfig integrator;
};

struct PropertyQViolation {
    std::size_t trial = 0;
    std::string kind;  ///< bound_a, not_in_target, left_source, late_hit, no_hit, hit_mismatch, finite_escape
    double time = 0.0;
    std::string detail;
};

struct PropertyQTrial {
    Vec x0;
    std::uint64_t disturbance_seed = 0;
    double horizon = 0.0;
    double t_hit = std::numeric_limits<double>::quiet_NaN();
    double t_allowed = 0.0;  ///< c + b(|x0|)
    double t_exact = std::numeric_limits<double>::quiet_NaN();
    double sup_norm = 0.0;
    double a_bound = 0.0;
};

struct PropertyQResult {
    std::vector<PropertyQTrial> trials;
    std::vector<PropertyQViolation> violations;
    double worst_t_hit = 0.0;
    double worst_sup_norm = 0.0;
    double worst_hit_error = 0.0;  ///< max |t_hit - t_exact| where known
    bool pass() const { return violations.empty(); }

    nlohmann::json to_json() const;
};

using PropertyQObserver = std::function<void(std::size_t trial, const DenseSegment& seg)>;

PropertyQResult check_property_Q(const ControlSystem& sys, const ReachabilityCertificate& cert,
                                 const PropertyQOptions& opt, const PropertyQObserver& observer = {});

// ---------------------------------------------------------------------------
// Sampling-period bound and inequality checks for the inner feedback
// ---------------------------------------------------------------------------

/// (1/(2L)) log(1 + (L/gamma)/(1+M)^2) for L > 0, (1/(2 gamma))/(1+M)^2 for L = 0.
/// Throws NonpositiveGamma, InvalidArgument (negative L or M).
double max_sampling_period(double L, double gamma, double M);

struct InequalityGrid {
    std::size_t nodes_per_axis = 21;
    std::size_t disturbance_nodes_per_axis = 3;
    /// Extra x near each z node at distance |z|/M times these fractions.
    std::vector<double> stencil_fractions{0.5, 1.0};
    /// Stencil directions: normalized boundary nodes of a cube grid (3 gives 8 in the plane).
    std::size_t stencil_direction_nodes = 3;
    double margin_tol = 1e-9;
};

struct InequalityVerdict {
    bool pass = true;
    double worst = -std::numeric_limits<double>::infinity();  ///< lhs - rhs
    Vec witness_z;
    Vec witness_x;
    Vec witness_d;
    std::size_t checked = 0;

    nlohmann::json to_json() const;
};

struct InequalityReport {
    InequalityVerdict one_sided;  ///< (z-x)' f(d, z, k(x)) <= L|z-x|^2 + gamma|x|^2
    InequalityVerdict decrease;   ///< grad V(z) f(d, z, k(x)) <= -rho(V(z)) when M|z-x| <= |z|
    double L = 0.0, gamma = 0.0, M = 0.0;
    std::size_t theta_nodes = 0;
    Box sampling_box;
    bool pass() const { return one_sided.pass && decrease.pass; }

    nlohmann::json to_json() const;
};

InequalityReport check_inner_inequalities(const ControlSystem& sys, const InnerFeedback& inner, const LyapunovData& V,
                               const Region& theta, double L, double gamma, double M, const ScalarFn& rho,
                               const InequalityGrid& grid);

// ---------------------------------------------------------------------------
// Attractor reach for disturbance-free systems under constant control
// ---------------------------------------------------------------------------

struct AttractorReachOptions {
    std::vector<double> epsilons{0.1};
    std::vector<double> radii{1.0};
    std::size_t trials = 16;
    double horizon = 20.0;
    std::uint64_t seed = 1;
    IntegratorConfig integrator;
};

struct AttractorReachResult {
    /// Points of the limit-set estimate.
    std::vector<Vec> attractor;
    /// reach[e][k] = T(epsilons[e], radii[k]), nondecreasing in k.
    std::vector<std::vector<double>> reach;
    std::vector<double> epsilons;
    std::vector<double> radii;
    bool pass = true;
    std::string witness;

    nlohmann::json to_json() const;
};

/// Throws NonConvergence, InvalidArgument (system with a live disturbance).
AttractorReachResult estimate_attractor_reach(const ControlSystem& sys, ConstSpan v,
                                              const DisturbanceSignal& frozen, const AttractorReachOptions& opt);

}  // namespace chainstab
