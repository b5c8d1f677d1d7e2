#pragma once

// Held-control integration of x' = f(d(t), x, u) on [t0, t1] with an
// embedded Dormand-Prince 5(4) pair.

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "chainstab/dynamics.hpp"
#include "chainstab/errors.hpp"
#include "chainstab/vec.hpp"

namespace chainstab {

class Region;

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double initial_step = 0.0;  ///< 0 selects a step automatically
    double max_step = std::numeric_limits<double>::infinity();
    double blowup_norm_threshold = 1e8;
    std::size_t max_steps = 10'000'000;
    /// Insert interpolated points until piecewise-linear interpolation of the
    /// stored grid is within 10 * (rel_tol |x| + abs_tol) of the dense output.
    bool refine_dense_grid = true;

    void validate() const;
};

/// Sampled solution on one held-control interval.
/// Times are strictly increasing, start at t0 and end at t1.
class DenseSegment {
public:
    DenseSegment() = default;
    DenseSegment(std::size_t state_dim, Vec control) : n_(state_dim), u_(std::move(control)) {}

    std::size_t state_dim() const { return n_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    const Vec& control() const { return u_; }

    double start_time() const { return times_.front(); }
    double end_time() const { return times_.back(); }
    double time(std::size_t k) const { return times_[k]; }
    const std::vector<double>& times() const { return times_; }
    ConstSpan state(std::size_t k) const { return {data_.data() + k * n_, n_}; }
    ConstSpan final_state() const { return state(size() - 1); }

    /// Piecewise-linear interpolation of the stored grid.
    Vec state_at(double t) const;

    void append(double t, ConstSpan x);

private:
    std::size_t n_ = 0;
    Vec u_;
    std::vector<double> times_;
    std::vector<double> data_;
};

/// |x| crossed the blow-up threshold; carries the solution up to that point.
class FiniteEscape : public Error {
public:
    FiniteEscape(double t, DenseSegment partial);
    double time() const { return time_; }
    const DenseSegment& partial() const { return partial_; }

private:
    double time_;
    DenseSegment partial_;
};

class StepLimitExceeded : public Error {
public:
    StepLimitExceeded(double t, const std::string& why, DenseSegment partial);
    double time() const { return time_; }
    const DenseSegment& partial() const { return partial_; }

private:
    double time_;
    DenseSegment partial_;
};

/// Integrates with u held constant from x(t0) = x0 up to exactly t1.
/// Discontinuities of the disturbance signal are step boundaries.
/// Throws FiniteEscape, StepLimitExceeded, ControlOutOfSet, DimensionMismatch.
DenseSegment integrate_held(const ControlSystem& sys, const DisturbanceSignal& disturbance, ConstSpan x0,
                            ConstSpan u, double t0, double t1, const IntegratorConfig& cfg = {});

/// Earliest time at which the segment is inside `region`, refined by
/// bisection on the linearly interpolated grid to `resolution`.
std::optional<double> first_hitting_time(const DenseSegment& seg, const Region& region,
                                         double resolution = 1e-9);

}  // namespace chainstab
