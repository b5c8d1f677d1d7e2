#pragma once

// Disturbed control systems  x' = f(d, x, u),  d in D,  u in U,
// together with the disturbance and sampling-schedule signals that drive them.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "chainstab/vec.hpp"

namespace chainstab {

/// Axis-aligned box; bounds may be infinite. A zero-dimensional box is the
/// disturbance set of a system without a disturbance channel.
struct Box {
    Vec lo;
    Vec hi;

    static Box unbounded(std::size_t dim);
    static Box symmetric(std::size_t dim, double half_width);

    std::size_t dim() const { return lo.size(); }
    bool contains(ConstSpan p) const;
    bool bounded() const;
    void clamp(MutSpan p) const;
    /// Radius of the smallest origin-centred ball containing the box.
    double max_norm() const;
};

/// Control constraint set U, described per axis as an interval
/// (all of R, a box, or a half-line when one bound is infinite).
class ControlSet {
public:
    static ControlSet all(std::size_t dim);
    static ControlSet nonpositive(std::size_t dim);
    static ControlSet nonnegative(std::size_t dim);
    static ControlSet box(Vec lo, Vec hi);

    std::size_t dim() const { return bounds_.dim(); }
    bool contains(ConstSpan u) const { return bounds_.contains(u); }
    const Box& bounds() const { return bounds_; }
    std::string describe() const;

private:
    explicit ControlSet(Box b) : bounds_(std::move(b)) {}
    Box bounds_;
};

using RhsFn = std::function<void(ConstSpan d, ConstSpan x, ConstSpan u, MutSpan dx)>;

/// A vector field f : D x R^n x U -> R^n with its dimension and constraint
/// descriptors. Immutable after construction.
class ControlSystem {
public:
    ControlSystem(std::string label, std::size_t state_dim, std::size_t control_dim,
                  Box disturbance_box, ControlSet control_set, RhsFn rhs,
                  bool origin_equilibrium);

    const std::string& label() const { return label_; }
    std::size_t state_dim() const { return n_; }
    std::size_t control_dim() const { return m_; }
    std::size_t disturbance_dim() const { return disturbances_.dim(); }
    const Box& disturbance_box() const { return disturbances_; }
    const ControlSet& control_set() const { return controls_; }
    bool origin_equilibrium() const { return origin_equilibrium_; }

    /// Checked evaluation of f(d, x, u).
    /// Throws DimensionMismatch, DisturbanceOutOfBox or ControlOutOfSet.
    Vec eval_rhs(ConstSpan d, ConstSpan x, ConstSpan u) const;

    /// Unchecked evaluation, used in inner loops once inputs are validated.
    void rhs(ConstSpan d, ConstSpan x, ConstSpan u, MutSpan dx) const { rhs_(d, x, u, dx); }

private:
    std::string label_;
    std::size_t n_;
    std::size_t m_;
    Box disturbances_;
    ControlSet controls_;
    RhsFn rhs_;
    bool origin_equilibrium_;
};

// ---------------------------------------------------------------------------
// Disturbance signals
// ---------------------------------------------------------------------------

namespace axis {
struct Constant {
    double value = 0.0;
};
/// offset + amplitude * sin(frequency * t)
struct Sinusoidal {
    double amplitude = 1.0;
    double frequency = 1.0;
    double offset = 0.0;
};
/// Uniform value in [low, high], redrawn on every mesh interval [k dt, (k+1) dt).
struct RandomPiecewise {
    double mesh = 0.1;
    double low = -1.0;
    double high = 1.0;
    std::uint64_t seed = 0;
};
/// Zero-order hold through (times[i], values[i]); values[0] before times[0].
struct Tabulated {
    std::vector<double> times;
    std::vector<double> values;
};
}  // namespace axis

using AxisSignal = std::variant<axis::Constant, axis::Sinusoidal, axis::RandomPiecewise, axis::Tabulated>;

/// A disturbance realization d : [0, inf) -> D built from one scalar signal
/// per axis. Right-continuous at mesh points; pure and deterministic.
class DisturbanceSignal {
public:
    DisturbanceSignal(Box disturbance_box, std::vector<AxisSignal> axes, bool clamp_to_box = true);

    static DisturbanceSignal none();
    static DisturbanceSignal constant(const Box& box, ConstSpan value);
    /// All axes constant at `base` except `axis`, which is sinusoidal.
    static DisturbanceSignal sinusoidal(const Box& box, ConstSpan base, std::size_t axis,
                                        double amplitude, double frequency, double offset);
    /// Independent uniform values per axis in `range` (clamped into the box), held on a mesh.
    static DisturbanceSignal random_piecewise(const Box& box, double mesh, std::uint64_t seed);

    std::size_t dim() const { return axes_.size(); }
    const Box& box() const { return box_; }
    const std::vector<AxisSignal>& axes() const { return axes_; }
    bool clamps() const { return clamp_; }

    Vec sample(double t) const;
    void sample_into(double t, MutSpan out) const;
    /// Left limit d(t-); equals sample(t) away from discontinuities.
    void sample_left_into(double t, MutSpan out) const;

    /// Discontinuity points of the signal strictly inside (t0, t1), sorted.
    std::vector<double> breakpoints(double t0, double t1) const;

    /// True when some configured axis can emit values outside the box
    /// (those values are clamped when clamping is enabled).
    bool may_leave_box() const;

private:
    Box box_;
    std::vector<AxisSignal> axes_;
    bool clamp_;
};

// ---------------------------------------------------------------------------
// Sampling-schedule perturbation d~(t) >= 0
// ---------------------------------------------------------------------------

namespace schedule {
struct Zero {};
struct AbsSin {};
struct Constant {
    double value = 0.0;
};
struct Tabulated {
    std::vector<double> times;
    std::vector<double> values;
};
}  // namespace schedule

class SchedulePerturbation {
public:
    using Kind = std::variant<schedule::Zero, schedule::AbsSin, schedule::Constant, schedule::Tabulated>;

    SchedulePerturbation() : kind_(schedule::Zero{}) {}
    explicit SchedulePerturbation(Kind kind);

    static SchedulePerturbation zero() { return SchedulePerturbation{}; }
    static SchedulePerturbation abs_sin() { return SchedulePerturbation{schedule::AbsSin{}}; }
    static SchedulePerturbation constant(double c) { return SchedulePerturbation{schedule::Constant{c}}; }
    /// Random nonnegative values in [0, max_value] held on a mesh up to `horizon`.
    static SchedulePerturbation random_tabulated(double mesh, double max_value, double horizon,
                                                 std::uint64_t seed);

    const Kind& kind() const { return kind_; }
    double value(double t) const;

private:
    Kind kind_;
};

// ---------------------------------------------------------------------------
// Hypothesis estimators (report-only)
// ---------------------------------------------------------------------------

/// Largest |f(d, 0, 0)| over a grid of d in D with `nodes_per_axis` nodes.
double origin_equilibrium_residual(const ControlSystem& sys, std::size_t nodes_per_axis);

struct LipschitzEstimate {
    double max_quotient = -std::numeric_limits<double>::infinity();
    std::size_t pairs = 0;
};

/// Largest observed (x-y)'(f(d,x,u)-f(d,y,u)) / |x-y|^2 over random pairs in
/// `state_box`, random d in D and u in `control_box`.
LipschitzEstimate estimate_one_sided_lipschitz(const ControlSystem& sys, const Box& state_box,
                                               const Box& control_box, std::size_t samples,
                                               std::uint64_t seed);

/// Envelope a_est(s) = scale * s * exp(rate * s) fitted so that
/// |f(d,x,u)| <= a_est(|x| + |u|) on all sampled points.
struct GrowthEnvelope {
    double scale = 0.0;
    double rate = 0.0;
    std::size_t samples = 0;
    double operator()(double s) const;
};

GrowthEnvelope fit_growth_envelope(const ControlSystem& sys, const Box& state_box,
                                   const Box& control_box, std::size_t samples, std::uint64_t seed);

}  // namespace chainstab
