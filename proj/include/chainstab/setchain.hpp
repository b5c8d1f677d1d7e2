#pragma once

// Set chains Omega_1 = Theta, Omega_2, ... with the disjoint cells
//   C_1 = Omega_1,  C_i = Omega_i \ B_{i-1},  B_i = B_{i-1} u Omega_i
// and the piecewise feedback that holds v_i on C_i and the inner law on C_1.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "chainstab/dynamics.hpp"
#include "chainstab/region.hpp"

namespace chainstab {

struct Decomposition {
    std::vector<Region> cells;   ///< C_1..C_N
    std::vector<Region> unions;  ///< B_1..B_N
};

/// Builds C_i and B_i from an ordered list of regions. Throws EmptyChain.
Decomposition decompose(const std::vector<Region>& omegas);

/// Lazily generated chain entry (index >= 2).
struct ChainGenerator {
    std::function<Region(std::size_t)> region;
    std::function<Vec(std::size_t)> control;
    /// Optional: smallest index whose region contains x, if the generator can
    /// compute it directly. Result is verified against membership.
    std::function<std::optional<std::size_t>(ConstSpan)> locate;
    std::size_t max_index = 100'000'000;
};

class SetChain {
public:
    enum class Mode { finite_covers_all, locally_finite };

    /// Finite chain: `controls[i]` belongs to omegas[i + 1].
    static std::shared_ptr<const SetChain> finite(std::vector<Region> omegas, std::vector<Vec> controls);
    /// Countable chain with Omega_1 = head and Omega_j, v_j produced on demand.
    static std::shared_ptr<const SetChain> generated(Region head, ChainGenerator gen);

    Mode mode() const { return mode_; }
    /// Number of regions (finite mode) or highest index materialized so far.
    std::size_t size() const;

    /// 1-based accessors.
    Region omega(std::size_t i) const;
    Vec control(std::size_t i) const;
    /// C_i and B_i as region descriptors.
    Region cell(std::size_t i) const;
    Region union_upto(std::size_t i) const;

    /// Smallest i with x in C_i (equivalently the first Omega_i containing x).
    /// Throws NotCovered when no region contains x.
    std::size_t classify(ConstSpan x) const;

    /// Copy of a finite chain with control v_i replaced.
    std::shared_ptr<const SetChain> with_control(std::size_t i, Vec v) const;

private:
    SetChain() = default;

    struct Link {
        Region region;
        Vec control;
    };
    const Link& link(std::size_t i) const;

    Mode mode_ = Mode::finite_covers_all;
    Region head_ = Region::everything();
    std::vector<Link> links_;  // finite mode: index i-1
    ChainGenerator gen_;
    mutable std::mutex mutex_;
    mutable std::map<std::size_t, Link> cache_;  // generated mode
    mutable std::size_t extent_ = 1;
};

using InnerFeedback = std::function<void(ConstSpan x, MutSpan u)>;

/// k(x) = inner(x) on C_1, v_i on C_i (i > 1); period h = min(h~, r) unless overridden.
class PiecewiseFeedback {
public:
    struct Value {
        Vec u;
        std::size_t cell;
    };

    PiecewiseFeedback(InnerFeedback inner, std::shared_ptr<const SetChain> chain, ControlSet controls,
                      double h_tilde, double dwell);

    Value evaluate(ConstSpan x) const;

    const SetChain& chain() const { return *chain_; }
    std::shared_ptr<const SetChain> chain_ptr() const { return chain_; }
    const ControlSet& control_set() const { return controls_; }
    double h_tilde() const { return h_tilde_; }
    double dwell() const { return dwell_; }
    /// min(h~, r)
    double certified_period() const;
    /// Base sampling period used in simulation.
    double period() const { return period_; }
    bool period_overridden() const { return period_ != certified_period(); }

    PiecewiseFeedback with_period(double h) const;
    PiecewiseFeedback with_chain(std::shared_ptr<const SetChain> chain) const;

private:
    InnerFeedback inner_;
    std::shared_ptr<const SetChain> chain_;
    ControlSet controls_;
    double h_tilde_;
    double dwell_;
    double period_;
};

/// Checks Omega_1 == Theta and v_i in U, then builds the feedback.
/// Throws ChainHeadMismatch, ControlOutOfSet, EmptyChain.
PiecewiseFeedback synthesize(InnerFeedback inner, const Region& theta, double h_tilde,
                             std::vector<Region> omegas, std::vector<Vec> controls, double dwell,
                             const ControlSet& controls_set);

/// Same for a generated chain; checks the generator's controls lazily on use.
PiecewiseFeedback synthesize(InnerFeedback inner, const Region& theta, double h_tilde, ChainGenerator gen,
                             double dwell, const ControlSet& controls_set);

}  // namespace chainstab
