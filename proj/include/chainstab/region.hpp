#pragma once

// Predicate-defined subsets of R^n: half-spaces, boxes, sublevel sets and
// coordinate bands, closed under intersection, union and complement.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainstab/dynamics.hpp"
#include "chainstab/lyapunov.hpp"
#include "chainstab/vec.hpp"

namespace chainstab {

class Region {
public:
    struct Node;

    /// All of R^n.
    static Region everything();
    static Region nothing();
    /// {x : a.x <= b}, or a.x < b when strict.
    static Region half_space(Vec a, double b, bool strict = false);
    static Region box(Box b);
    /// {x : V(x) <= level}, or V(x) < level when strict.
    static Region sublevel(LyapunovPtr v, double level, bool strict = false);
    /// {x : |x_axis| <= half_width}.
    static Region band(std::size_t axis, double half_width);

    static Region intersection(std::vector<Region> parts);
    static Region union_of(std::vector<Region> parts);
    static Region complement(const Region& r);
    /// a \ b
    static Region difference(const Region& a, const Region& b);

    bool contains(ConstSpan x) const;

    /// Sampling domain for grid certification; regions without one are unbounded.
    const std::optional<Box>& bounds() const { return bounds_; }
    Region with_bounds(Box b) const;
    const std::string& label() const { return label_; }
    Region with_label(std::string label) const;

    /// Canonical descriptor; structurally equal regions serialize identically.
    nlohmann::json to_json() const;
    static Region from_json(const nlohmann::json& j, const LyapunovRegistry& registry);
    std::string describe() const { return to_json().dump(); }

    bool same_descriptor(const Region& other) const { return describe() == other.describe(); }
    /// Same predicate tree, ignoring sampling bounds and labels at every level.
    bool same_predicate(const Region& other) const;

private:
    explicit Region(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
    std::optional<Box> bounds_;
    std::string label_;
};

Region operator&(const Region& a, const Region& b);
Region operator|(const Region& a, const Region& b);
Region operator~(const Region& a);

}  // namespace chainstab
