#include "chainstab/region.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"

namespace chainstab {

namespace {

struct Everything {};
struct Nothing {};
struct HalfSpace {
    Vec a;
    double b;
    bool strict;
};
struct BoxSet {
    Box box;
};
struct Sublevel {
    LyapunovPtr v;
    double level;
    bool strict;
};
struct Band {
    std::size_t axis;
    double half_width;
};
struct Intersection {
    std::vector<Region> parts;
};
struct Union {
    std::vector<Region> parts;
};
struct Complement {
    std::vector<Region> inner;  // exactly one element; vector avoids an incomplete member type
};

}  // namespace

struct Region::Node {
    std::variant<Everything, Nothing, HalfSpace, BoxSet, Sublevel, Band, Intersection, Union, Complement> kind;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Region Region::everything() { return Region(std::make_shared<Node>(Node{Everything{}})); }
Region Region::nothing() { return Region(std::make_shared<Node>(Node{Nothing{}})); }

Region Region::half_space(Vec a, double b, bool strict) {
    if (a.empty()) throw InvalidArgument("half_space normal must be nonempty");
    return Region(std::make_shared<Node>(Node{HalfSpace{std::move(a), b, strict}}));
}

Region Region::box(Box b) {
    if (b.lo.size() != b.hi.size()) throw DimensionMismatch("box bounds differ in length");
    Region r(std::make_shared<Node>(Node{BoxSet{b}}));
    if (b.bounded()) r.bounds_ = b;
    return r;
}

Region Region::sublevel(LyapunovPtr v, double level, bool strict) {
    if (!v) throw InvalidArgument("sublevel set needs a function");
    return Region(std::make_shared<Node>(Node{Sublevel{std::move(v), level, strict}}));
}

Region Region::band(std::size_t axis, double half_width) {
    if (!(half_width >= 0.0)) throw InvalidArgument("band half width must be >= 0");
    return Region(std::make_shared<Node>(Node{Band{axis, half_width}}));
}

Region Region::intersection(std::vector<Region> parts) {
    if (parts.empty()) return everything();
    std::optional<Box> bounds;
    for (const auto& p : parts)
        if (p.bounds_ && !bounds) bounds = p.bounds_;
    Region r(std::make_shared<Node>(Node{Intersection{std::move(parts)}}));
    r.bounds_ = bounds;
    return r;
}

Region Region::union_of(std::vector<Region> parts) {
    if (parts.empty()) return nothing();
    // bounded only if every part is, and then by the hull of the parts
    std::optional<Box> hull;
    bool all_bounded = true;
    for (const auto& p : parts) {
        if (!p.bounds_) {
            all_bounded = false;
            break;
        }
        if (!hull) {
            hull = p.bounds_;
        } else {
            for (std::size_t i = 0; i < hull->dim(); ++i) {
                hull->lo[i] = std::min(hull->lo[i], p.bounds_->lo[i]);
                hull->hi[i] = std::max(hull->hi[i], p.bounds_->hi[i]);
            }
        }
    }
    Region r(std::make_shared<Node>(Node{Union{std::move(parts)}}));
    if (all_bounded) r.bounds_ = hull;
    return r;
}

Region Region::complement(const Region& r) {
    return Region(std::make_shared<Node>(Node{Complement{{r}}}));
}

Region Region::difference(const Region& a, const Region& b) {
    return intersection({a, complement(b)});
}

Region operator&(const Region& a, const Region& b) { return Region::intersection({a, b}); }
Region operator|(const Region& a, const Region& b) { return Region::union_of({a, b}); }
Region operator~(const Region& a) { return Region::complement(a); }

Region Region::with_bounds(Box b) const {
    Region r = *this;
    r.bounds_ = std::move(b);
    return r;
}

Region Region::with_label(std::string label) const {
    Region r = *this;
    r.label_ = std::move(label);
    return r;
}

bool Region::contains(ConstSpan x) const {
    return std::visit(
        overloaded{
            [](const Everything&) { return true; },
            [](const Nothing&) { return false; },
            [&](const HalfSpace& h) {
                if (h.a.size() != x.size()) throw DimensionMismatch("half_space normal vs state dimension");
                const double s = dot(h.a, x);
                return h.strict ? s < h.b : s <= h.b;
            },
            [&](const BoxSet& b) {
                if (b.box.dim() != x.size()) throw DimensionMismatch("box vs state dimension");
                return b.box.contains(x);
            },
            [&](const Sublevel& s) {
                const double v = s.v->value(x);
                return s.strict ? v < s.level : v <= s.level;
            },
            [&](const Band& b) {
                if (b.axis >= x.size()) throw DimensionMismatch("band axis vs state dimension");
                return std::abs(x[b.axis]) <= b.half_width;
            },
            [&](const Intersection& i) {
                return std::all_of(i.parts.begin(), i.parts.end(), [&](const Region& p) { return p.contains(x); });
            },
            [&](const Union& u) {
                return std::any_of(u.parts.begin(), u.parts.end(), [&](const Region& p) { return p.contains(x); });
            },
            [&](const Complement& c) { return !c.inner.front().contains(x); },
        },
        node_->kind);
}

nlohmann::json Region::to_json() const {
    using json = nlohmann::json;
    auto parts_json = [](const std::vector<Region>& parts) {
        json a = json::array();
        for (const auto& p : parts) a.push_back(p.to_json());
        return a;
    };
    json j = std::visit(
        overloaded{
            [](const Everything&) { return json{{"type", "everything"}}; },
            [](const Nothing&) { return json{{"type", "nothing"}}; },
            [](const HalfSpace& h) {
                return json{{"type", "half_space"}, {"a", json_util::vec(h.a)}, {"b", json_util::number(h.b)},
                            {"strict", h.strict}};
            },
            [](const BoxSet& b) {
                return json{{"type", "box"}, {"lo", json_util::vec(b.box.lo)}, {"hi", json_util::vec(b.box.hi)}};
            },
            [](const Sublevel& s) {
                return json{{"type", "sublevel"}, {"function", s.v->label}, {"level", json_util::number(s.level)},
                            {"strict", s.strict}};
            },
            [](const Band& b) {
                return json{{"type", "band"}, {"axis", b.axis}, {"half_width", json_util::number(b.half_width)}};
            },
            [&](const Intersection& i) { return json{{"type", "intersection"}, {"parts", parts_json(i.parts)}}; },
            [&](const Union& u) { return json{{"type", "union"}, {"parts", parts_json(u.parts)}}; },
            [](const Complement& c) { return json{{"type", "complement"}, {"of", c.inner.front().to_json()}}; },
        },
        node_->kind);
    if (bounds_) j["bounds"] = json_util::box(*bounds_);
    if (!label_.empty()) j["label"] = label_;
    return j;
}

namespace {

void strip_annotations(nlohmann::json& j) {
    j.erase("bounds");
    j.erase("label");
    if (j.contains("parts"))
        for (auto& p : j["parts"]) strip_annotations(p);
    if (j.contains("of")) strip_annotations(j["of"]);
}

}  // namespace

bool Region::same_predicate(const Region& other) const {
    auto a = to_json(), b = other.to_json();
    strip_annotations(a);
    strip_annotations(b);
    return a == b;
}

Region Region::from_json(const nlohmann::json& j, const LyapunovRegistry& registry) {
    using json_util::require;
    using json_util::require_keys;
    const std::string where = "region";
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const auto& type_j = require(j, "type", where);
    if (!type_j.is_string()) throw ConfigError(where + ".type: expected a string");
    const auto type = type_j.get<std::string>();
    const std::string w = where + "(" + type + ")";

    auto parts_from = [&](const char* key) {
        const auto& arr = require(j, key, w);
        if (!arr.is_array()) throw ConfigError(w + "." + key + ": expected an array");
        std::vector<Region> parts;
        for (const auto& p : arr) parts.push_back(from_json(p, registry));
        return parts;
    };
    auto strict_of = [&]() {
        if (!j.contains("strict")) return false;
        if (!j.at("strict").is_boolean()) throw ConfigError(w + ".strict: expected a boolean");
        return j.at("strict").get<bool>();
    };

    Region r = everything();
    if (type == "everything") {
        require_keys(j, {"type", "bounds", "label"}, w);
    } else if (type == "nothing") {
        require_keys(j, {"type", "bounds", "label"}, w);
        r = nothing();
    } else if (type == "half_space") {
        require_keys(j, {"type", "a", "b", "strict", "bounds", "label"}, w);
        r = half_space(json_util::to_vec(require(j, "a", w), w + ".a"), json_util::to_number(require(j, "b", w), w + ".b"),
                       strict_of());
    } else if (type == "box") {
        require_keys(j, {"type", "lo", "hi", "bounds", "label"}, w);
        r = box(Box{json_util::to_vec(require(j, "lo", w), w + ".lo"), json_util::to_vec(require(j, "hi", w), w + ".hi")});
    } else if (type == "sublevel") {
        require_keys(j, {"type", "function", "level", "strict", "bounds", "label"}, w);
        const auto name = require(j, "function", w).get<std::string>();
        auto v = registry.find(name);
        if (!v) throw ConfigError(w + ".function: unknown function '" + name + "'");
        r = sublevel(v, json_util::to_number(require(j, "level", w), w + ".level"), strict_of());
    } else if (type == "band") {
        require_keys(j, {"type", "axis", "half_width", "bounds", "label"}, w);
        const auto& ax = require(j, "axis", w);
        if (!ax.is_number_unsigned()) throw ConfigError(w + ".axis: expected a nonnegative integer");
        r = band(ax.get<std::size_t>(), json_util::to_number(require(j, "half_width", w), w + ".half_width"));
    } else if (type == "intersection") {
        require_keys(j, {"type", "parts", "bounds", "label"}, w);
        r = intersection(parts_from("parts"));
    } else if (type == "union") {
        require_keys(j, {"type", "parts", "bounds", "label"}, w);
        r = union_of(parts_from("parts"));
    } else if (type == "complement") {
        require_keys(j, {"type", "of", "bounds", "label"}, w);
        r = complement(from_json(require(j, "of", w), registry));
    } else {
        throw ConfigError(where + ".type: unknown region type '" + type + "'");
    }
    if (j.contains("bounds"))
        r.bounds_ = json_util::to_box(j.at("bounds"), w + ".bounds");
    else
        r.bounds_.reset();
    if (j.contains("label")) r.label_ = j.at("label").get<std::string>();
    return r;
}

}  // namespace chainstab
