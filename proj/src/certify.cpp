#include "chainstab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"
#include "chainstab/parallel.hpp"
#include "chainstab/random.hpp"

namespace chainstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double grid_coord(double lo, double hi, std::size_t k, std::size_t nodes) {
    if (nodes == 1) return 0.5 * (lo + hi);
    if (k + 1 == nodes) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nodes - 1);
}

// All nodes of a tensor grid over `box`, row-major with the last axis fastest.
std::vector<Vec> tensor_grid(const Box& box, const std::vector<std::size_t>& nodes) {
    const std::size_t n = box.dim();
    std::vector<Vec> out;
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    std::size_t total = 1;
    for (auto k : nodes) total *= k;
    out.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = grid_coord(box.lo[i], box.hi[i], idx[i], nodes[i]);
        out.push_back(std::move(p));
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < nodes[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

std::vector<Vec> disturbance_grid(const ControlSystem& sys, std::size_t nodes_per_axis) {
    const Box& D = sys.disturbance_box();
    if (D.dim() == 0) return {Vec{}};
    if (!D.bounded()) throw InvalidArgument("grid certification needs a bounded disturbance set");
    if (nodes_per_axis == 0) throw EmptyGrid("disturbance grid has no nodes");
    return tensor_grid(D, std::vector<std::size_t>(D.dim(), nodes_per_axis));
}

nlohmann::json vec_list(const std::vector<std::size_t>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (auto k : v) a.push_back(k);
    return a;
}

}  // namespace

std::vector<Vec> cube_directions(std::size_t dim, std::size_t nodes_per_axis) {
    if (dim == 0) return {};
    if (nodes_per_axis < 2) throw InvalidArgument("direction grid needs at least 2 nodes per axis");
    Box cube = Box::symmetric(dim, 1.0);
    std::vector<Vec> out;
    for (auto& p : tensor_grid(cube, std::vector<std::size_t>(dim, nodes_per_axis))) {
        bool on_boundary = false;
        for (double c : p) on_boundary = on_boundary || std::abs(c) == 1.0;
        if (!on_boundary) continue;
        const double len = norm(p);
        for (double& c : p) c /= len;
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// MonotoneEnvelope
// ---------------------------------------------------------------------------

MonotoneEnvelope MonotoneEnvelope::analytic(std::string label, ScalarFn fn) {
    if (!fn) throw InvalidArgument("envelope needs a callable");
    MonotoneEnvelope e;
    e.label_ = std::move(label);
    e.fn_ = std::move(fn);
    return e;
}

MonotoneEnvelope MonotoneEnvelope::tabulated(std::string label, std::vector<double> radii, std::vector<double> values) {
    if (radii.empty() || radii.size() != values.size()) throw InvalidArgument("envelope table needs matching radii and values");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw InvalidArgument("envelope radii must be strictly increasing");
    if (radii.front() < 0.0) throw InvalidArgument("envelope radii must be >= 0");
    for (std::size_t i = 1; i < values.size(); ++i) values[i] = std::max(values[i], values[i - 1]);
    MonotoneEnvelope e;
    e.label_ = std::move(label);
    e.radii_ = std::move(radii);
    e.values_ = std::move(values);
    return e;
}

MonotoneEnvelope MonotoneEnvelope::pointwise_max(std::string label, std::vector<MonotoneEnvelope> parts) {
    if (parts.empty()) throw InvalidArgument("pointwise max of no envelopes");
    return analytic(std::move(label), [parts = std::move(parts)](double s) {
        double m = -kInf;
        for (const auto& p : parts) m = std::max(m, p(s));
        return m;
    });
}

double MonotoneEnvelope::operator()(double s) const {
    if (fn_) return fn_(s);
    if (radii_.empty()) throw InvalidArgument("envelope is empty");
    if (s <= radii_.front()) return values_.front();
    if (s > radii_.back()) return kInf;
    auto it = std::lower_bound(radii_.begin(), radii_.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - radii_.begin());
    if (radii_[k] == s) return values_[k];
    const double lo = values_[k - 1], hi = values_[k];
    if (std::isinf(hi)) return kInf;
    const double w = (s - radii_[k - 1]) / (radii_[k] - radii_[k - 1]);
    return lo + w * (hi - lo);
}

nlohmann::json MonotoneEnvelope::to_json() const {
    nlohmann::json j{{"label", label_}};
    if (is_tabulated()) {
        j["kind"] = "tabulated";
        j["radii"] = json_util::vec(radii_);
        j["values"] = json_util::vec(values_);
    } else {
        j["kind"] = "analytic";
    }
    return j;
}

nlohmann::json ReachabilityCertificate::to_json() const {
    nlohmann::json j{{"label", label},
                     {"source", source.to_json()},
                     {"target", target.to_json()},
                     {"v", json_util::vec(v)},
                     {"r", json_util::number(r)},
                     {"c", json_util::number(c)},
                     {"b", b.to_json()},
                     {"a", a.to_json()}};
    if (!note.empty()) j["note"] = note;
    return j;
}

// ---------------------------------------------------------------------------
// Decrease
// ---------------------------------------------------------------------------

nlohmann::json DecreaseResult::to_json() const {
    return nlohmann::json{{"pass", pass},
                          {"delta", json_util::number(delta)},
                          {"level", json_util::number(level)},
                          {"worst", json_util::number(worst)},
                          {"worst_margin", json_util::number(worst + delta)},
                          {"witness_x", json_util::vec(witness_x)},
                          {"witness_d", json_util::vec(witness_d)},
                          {"truncation", json_util::box(truncation)},
                          {"nodes_per_axis", vec_list(nodes_per_axis)},
                          {"disturbance_nodes_per_axis", disturbance_nodes_per_axis},
                          {"spacing", json_util::vec(spacing)},
                          {"state_nodes", state_nodes},
                          {"evaluated_nodes", evaluated_nodes}};
}

DecreaseResult certify_decrease(const ControlSystem& sys, const Region& omega, const LyapunovData& V, ConstSpan v,
                                double level, double delta, const DecreaseGrid& grid) {
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (v.size() != sys.control_dim()) throw DimensionMismatch("constant control has the wrong dimension");
    if (!sys.control_set().contains(v)) throw ControlOutOfSet("constant control outside U");
    Box box;
    if (grid.truncation)
        box = *grid.truncation;
    else if (omega.bounds())
        box = *omega.bounds();
    else
        throw InvalidArgument("region is unbounded and no truncation box was given");
    const std::size_t n = sys.state_dim();
    if (box.dim() != n) throw DimensionMismatch("truncation box vs state dimension");
    if (!box.bounded()) throw InvalidArgument("truncation box must be bounded");
    if (grid.nodes_per_axis.size() != n) throw DimensionMismatch("nodes_per_axis vs state dimension");
    for (auto k : grid.nodes_per_axis)
        if (k == 0) throw EmptyGrid("state grid has an axis with no nodes");

    DecreaseResult res;
    res.delta = delta;
    res.level = level;
    res.truncation = box;
    res.nodes_per_axis = grid.nodes_per_axis;
    res.disturbance_nodes_per_axis = grid.disturbance_nodes_per_axis;
    for (std::size_t i = 0; i < n; ++i)
        res.spacing.push_back(grid.nodes_per_axis[i] > 1
                                  ? (box.hi[i] - box.lo[i]) / static_cast<double>(grid.nodes_per_axis[i] - 1)
                                  : 0.0);

    const auto ds = disturbance_grid(sys, grid.disturbance_nodes_per_axis);
    const auto xs = tensor_grid(box, grid.nodes_per_axis);
    res.state_nodes = xs.size();
    res.worst = -kInf;
    Vec g(n), dx(n);
    for (const auto& x : xs) {
        if (!omega.contains(x) || V.value(x) < level) continue;
        ++res.evaluated_nodes;
        V.gradient(x, g);
        for (const auto& d : ds) {
            sys.rhs(d, x, v, dx);
            const double s = dot(g, dx);
            if (s > res.worst) {
                res.worst = s;
                res.witness_x = x;
                res.witness_d = d;
            }
        }
    }
    if (res.evaluated_nodes == 0) throw EmptyGrid("no grid node lies in the region with V >= level");
    res.pass = res.worst <= -delta + grid.margin_tol;
    return res;
}

// ---------------------------------------------------------------------------
// Explicit bounds
// ---------------------------------------------------------------------------

double invert_increasing(const ScalarFn& a1, double target) {
    if (std::isnan(target)) throw InversionFailure("target is NaN");
    if (target <= a1(0.0)) return 0.0;
    if (std::isinf(target)) return kInf;
    double hi = 1.0;
    while (a1(hi) < target) {
        if (hi > std::numeric_limits<double>::max() / 2.0) {
            // a1 is below the target on every representable argument
            if (a1(std::numeric_limits<double>::max()) < target) return kInf;
            hi = std::numeric_limits<double>::max();
            break;
        }
        hi *= 2.0;
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        const double val = a1(mid);
        if (std::isnan(val)) throw InversionFailure("a1 returned NaN");
        (val < target ? lo : hi) = mid;
    }
    return hi;
}

ReachBounds reach_bounds(const ReachBoundsInput& in) {
    if (!in.V) throw InvalidArgument("bounds need a function V");
    if (!(in.delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(in.p > 0.0)) throw InvalidArgument("p must be positive");
    if (!(in.r > 0.0)) throw InvalidArgument("r must be positive");
    if (!in.a1 || !in.a2) throw InvalidArgument("a1 and a2 must be callable");
    if (in.radii.empty()) throw EmptyGrid("radius grid is empty");

    std::vector<double> radii = in.radii;
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    if (radii.front() < 0.0) throw InvalidArgument("radii must be >= 0");
    if (radii.front() > 0.0) radii.insert(radii.begin(), 0.0);

    const auto& V = *in.V;
    const double level = in.level;
    const Vec origin(in.state_dim, 0.0);
    const double excess0 = std::max(0.0, V.value(origin) - level);
    const auto dirs = cube_directions(in.state_dim, in.direction_nodes_per_axis);

    ReachBounds out;
    out.c = excess0 / in.delta;
    out.directions = dirs.size();

    std::vector<double> b_vals, a_vals;
    double running = excess0;
    Vec x(in.state_dim);
    for (double s : radii) {
        for (const auto& dir : dirs) {
            for (std::size_t i = 0; i < in.state_dim; ++i) x[i] = s * dir[i];
            running = std::max(running, std::max(0.0, V.value(x) - level));
        }
        const double b = (running - excess0) / in.delta;
        b_vals.push_back(b);
        const double target = std::exp(in.p * (out.c + in.r) + in.p * b) * in.a2(s);
        a_vals.push_back(invert_increasing(in.a1, target));
    }
    out.b = MonotoneEnvelope::tabulated("b", radii, std::move(b_vals));
    out.a = MonotoneEnvelope::tabulated("a", radii, std::move(a_vals));
    auto Vp = in.V;
    const double delta = in.delta;
    out.t_bound = [Vp, level, delta](ConstSpan x0) { return std::max(0.0, Vp->value(x0) - level) / delta; };
    return out;
}

// ---------------------------------------------------------------------------
// Property (Q)
// ---------------------------------------------------------------------------

nlohmann::json PropertyQResult::to_json() const {
    nlohmann::json viol = nlohmann::json::array();
    for (const auto& v : violations)
        viol.push_back({{"trial", v.trial}, {"kind", v.kind}, {"time", json_util::number(v.time)}, {"detail", v.detail}});
    return nlohmann::json{{"trials", trials.size()},
                          {"violations", viol},
                          {"worst_t_hit", json_util::number(worst_t_hit)},
                          {"worst_sup_norm", json_util::number(worst_sup_norm)},
                          {"worst_hit_error", json_util::number(worst_hit_error)},
                          {"pass", pass()}};
}

PropertyQResult check_property_Q(const ControlSystem& sys, const ReachabilityCertificate& cert,
                                 const PropertyQOptions& opt, const PropertyQObserver& observer) {
    opt.integrator.validate();
    if (opt.trials == 0) throw InvalidArgument("property (Q) check needs at least one trial");
    if (cert.v.size() != sys.control_dim()) throw DimensionMismatch("certificate control has the wrong dimension");
    if (opt.sample_box.dim() != sys.state_dim() || !opt.sample_box.bounded())
        throw InvalidArgument("sample box must be bounded and match the state dimension");

    struct Outcome {
        PropertyQTrial trial;
        std::vector<PropertyQViolation> violations;
        std::optional<DenseSegment> seg;
    };
    std::vector<Outcome> outcomes(opt.trials);

    parallel_for(opt.trials, opt.workers, [&](std::size_t k) {
        Outcome& out = outcomes[k];
        auto& tr = out.trial;
        auto flag = [&](std::string kind, double t, std::string detail) {
            out.violations.push_back(PropertyQViolation{k, std::move(kind), t, std::move(detail)});
        };

        Rng rng(stream_seed(opt.seed, 2 * k));
        Vec x0(sys.state_dim());
        bool found = false;
        for (int attempt = 0; attempt < 1'000'000 && !found; ++attempt) {
            for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = rng.uniform(opt.sample_box.lo[i], opt.sample_box.hi[i]);
            found = cert.source.contains(x0) && norm(x0) <= opt.max_initial_norm;
        }
        if (!found) throw InvalidArgument("could not sample an initial state in the source region");
        tr.x0 = x0;
        tr.disturbance_seed = stream_seed(opt.seed, 2 * k + 1);
        const auto dist = sys.disturbance_dim() == 0
                              ? DisturbanceSignal::none()
                              : DisturbanceSignal::random_piecewise(sys.disturbance_box(), opt.disturbance_mesh,
                                                                    tr.disturbance_seed);

        const double s0 = norm(x0);
        tr.t_allowed = cert.c + cert.b(s0);
        tr.a_bound = cert.a(s0);
        const double tb = cert.t_bound ? cert.t_bound(x0) : tr.t_allowed;
        double reach = std::max(tb, tr.t_allowed);
        if (!std::isfinite(reach)) reach = std::isfinite(tb) ? tb : kInf;
        if (!std::isfinite(reach)) {
            flag("no_hit", 0.0, "no finite time bound for this initial state");
            return;
        }
        tr.horizon = reach + cert.r;
        if (cert.exact_hitting_time) tr.t_exact = cert.exact_hitting_time(x0);

        DenseSegment seg;
        try {
            seg = integrate_held(sys, dist, x0, cert.v, 0.0, tr.horizon, opt.integrator);
        } catch (const FiniteEscape& e) {
            flag("finite_escape", e.time(), e.what());
            return;
        } catch (const StepLimitExceeded& e) {
            flag("step_limit", e.time(), e.what());
            return;
        }

        const auto hit = first_hitting_time(seg, cert.target, opt.hit_resolution);
        if (!hit) {
            flag("no_hit", tr.horizon, "target not reached within the horizon");
        } else {
            tr.t_hit = *hit;
            const double t_hit = *hit;
            const double t_stay = std::min(t_hit + cert.r, seg.end_time());
            if (t_hit > tr.t_allowed + opt.time_tol)
                flag("late_hit", t_hit, "T = " + std::to_string(t_hit) + " > c + b(|x0|) = " + std::to_string(tr.t_allowed));
            if (!std::isnan(tr.t_exact) && std::abs(t_hit - tr.t_exact) > opt.time_tol)
                flag("hit_mismatch", t_hit, "expected " + std::to_string(tr.t_exact));

            auto check_target = [&](double t, ConstSpan x) {
                if (!cert.target.contains(x)) flag("not_in_target", t, "left the target before T + r");
            };
            check_target(t_hit, seg.state_at(t_hit));
            check_target(t_stay, seg.state_at(t_stay));
            for (std::size_t i = 0; i < seg.size(); ++i) {
                const double t = seg.time(i);
                const auto x = seg.state(i);
                if (t <= t_stay) tr.sup_norm = std::max(tr.sup_norm, norm(x));
                if (t < t_hit && !cert.source.contains(x)) flag("left_source", t, "left the source before T");
                if (t > t_hit && t <= t_stay) check_target(t, x);
            }
            tr.sup_norm = std::max(tr.sup_norm, norm(seg.state_at(t_stay)));
            if (tr.sup_norm > tr.a_bound * (1.0 + 1e-12))
                flag("bound_a", t_stay, "sup |x| = " + std::to_string(tr.sup_norm) + " > a(|x0|) = " + std::to_string(tr.a_bound));
        }
        if (observer) out.seg = std::move(seg);
    });

    PropertyQResult res;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        auto& o = outcomes[k];
        if (observer && o.seg) observer(k, *o.seg);
        const auto& tr = o.trial;
        if (!std::isnan(tr.t_hit)) res.worst_t_hit = std::max(res.worst_t_hit, tr.t_hit);
        res.worst_sup_norm = std::max(res.worst_sup_norm, tr.sup_norm);
        if (!std::isnan(tr.t_hit) && !std::isnan(tr.t_exact))
            res.worst_hit_error = std::max(res.worst_hit_error, std::abs(tr.t_hit - tr.t_exact));
        res.trials.push_back(tr);
        for (auto& v : o.violations) res.violations.push_back(std::move(v));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sampling bound and inequality checks
// ---------------------------------------------------------------------------

double max_sampling_period(double L, double gamma, double M) {
    if (!(gamma > 0.0)) throw NonpositiveGamma("gamma must be > 0, got " + std::to_string(gamma));
    if (!(L >= 0.0)) throw InvalidArgument("L must be >= 0");
    if (!(M >= 0.0)) throw InvalidArgument("M must be >= 0");
    const double q = 1.0 / ((1.0 + M) * (1.0 + M));
    if (L == 0.0) return q / (2.0 * gamma);
    return std::log1p((L / gamma) * q) / (2.0 * L);
}

nlohmann::json InequalityVerdict::to_json() const {
    return nlohmann::json{{"pass", pass},
                          {"worst", json_util::number(worst)},
                          {"witness_z", json_util::vec(witness_z)},
                          {"witness_x", json_util::vec(witness_x)},
                          {"witness_d", json_util::vec(witness_d)},
                          {"checked", checked}};
}

nlohmann::json InequalityReport::to_json() const {
    return nlohmann::json{{"one_sided", one_sided.to_json()},
                          {"decrease", decrease.to_json()},
                          {"L", json_util::number(L)},
                          {"gamma", json_util::number(gamma)},
                          {"M", json_util::number(M)},
                          {"theta_nodes", theta_nodes},
                          {"sampling_box", json_util::box(sampling_box)},
                          {"pass", pass()}};
}

InequalityReport check_inner_inequalities(const ControlSystem& sys, const InnerFeedback& inner, const LyapunovData& V,
                               const Region& theta, double L, double gamma, double M, const ScalarFn& rho,
                               const InequalityGrid& grid) {
    if (!theta.bounds()) throw InvalidArgument("Theta needs a bounding box for grid checks");
    if (!inner || !rho) throw InvalidArgument("inner feedback and rho must be callable");
    if (grid.nodes_per_axis == 0) throw EmptyGrid("inequality grid has no nodes");
    const std::size_t n = sys.state_dim(), m = sys.control_dim();
    const Box& box = *theta.bounds();
    if (box.dim() != n) throw DimensionMismatch("Theta bounds vs state dimension");

    InequalityReport rep;
    rep.L = L;
    rep.gamma = gamma;
    rep.M = M;
    rep.sampling_box = box;

    std::vector<Vec> nodes;
    for (auto& p : tensor_grid(box, std::vector<std::size_t>(n, grid.nodes_per_axis)))
        if (theta.contains(p)) nodes.push_back(std::move(p));
    // the origin is the point where both inequalities are tight
    const Vec origin(n, 0.0);
    if (theta.contains(origin) && std::none_of(nodes.begin(), nodes.end(), [&](const Vec& p) { return norm(p) == 0.0; }))
        nodes.push_back(origin);
    if (nodes.empty()) throw EmptyGrid("no grid node lies in Theta");
    rep.theta_nodes = nodes.size();

    const auto ds = disturbance_grid(sys, grid.disturbance_nodes_per_axis);
    std::vector<Vec> controls(nodes.size(), Vec(m));
    for (std::size_t j = 0; j < nodes.size(); ++j) inner(nodes[j], controls[j]);

    auto record = [](InequalityVerdict& v, double excess, const Vec& z, const Vec& x, const Vec& d) {
        ++v.checked;
        if (excess > v.worst) {
            v.worst = excess;
            v.witness_z = z;
            v.witness_x = x;
            v.witness_d = d;
        }
    };

    Vec f(n), diff(n), g(n), u(m);
    for (const auto& z : nodes) {
        const double vz = V.value(z);
        const double rz = rho(vz);
        V.gradient(z, g);
        const double nz = norm(z);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const auto& x = nodes[j];
            for (std::size_t i = 0; i < n; ++i) diff[i] = z[i] - x[i];
            const double dist2 = dot(diff, diff);
            const double x2 = dot(x, x);
            const bool close = M * std::sqrt(dist2) <= nz;
            for (const auto& d : ds) {
                sys.rhs(d, z, controls[j], f);
                record(rep.one_sided, dot(diff, f) - L * dist2 - gamma * x2, z, x, d);
                if (close) record(rep.decrease, dot(g, f) + rz, z, x, d);
            }
        }
        // pairs with x close to z are too rare on the grid; probe them directly
        if (nz == 0.0 || M == 0.0) continue;
        for (const auto& dir : cube_directions(n, grid.stencil_direction_nodes)) {
            for (double frac : grid.stencil_fractions) {
                Vec x(n);
                for (std::size_t i = 0; i < n; ++i) x[i] = z[i] + frac * nz / M * dir[i];
                if (!theta.contains(x) || M * distance(z, x) > nz) continue;
                inner(x, u);
                for (std::size_t i = 0; i < n; ++i) diff[i] = z[i] - x[i];
                const double dist2 = dot(diff, diff);
                const double x2 = dot(x, x);
                for (const auto& d : ds) {
                    sys.rhs(d, z, u, f);
                    record(rep.one_sided, dot(diff, f) - L * dist2 - gamma * x2, z, x, d);
                    record(rep.decrease, dot(g, f) + rz, z, x, d);
                }
            }
        }
    }
    rep.one_sided.pass = rep.one_sided.worst <= grid.margin_tol;
    rep.decrease.pass = rep.decrease.worst <= grid.margin_tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Attractor reach
// ---------------------------------------------------------------------------

nlohmann::json AttractorReachResult::to_json() const {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : reach) table.push_back(json_util::vec(row));
    return nlohmann::json{{"attractor_points", attractor.size()},
                          {"epsilons", json_util::vec(epsilons)},
                          {"radii", json_util::vec(radii)},
                          {"reach", table},
                          {"pass", pass},
                          {"witness", witness}};
}

namespace {

double distance_to_set(ConstSpan x, const std::vector<Vec>& set) {
    double best = kInf;
    for (const auto& p : set) best = std::min(best, distance(x, p));
    return best;
}

std::vector<Vec> window_points(const std::vector<DenseSegment>& segs, double t0, double t1, std::size_t cap) {
    std::vector<Vec> pts;
    for (const auto& s : segs)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.time(i) >= t0 && s.time(i) <= t1) pts.emplace_back(s.state(i).begin(), s.state(i).end());
    if (pts.size() <= cap) return pts;
    std::vector<Vec> thin;
    const double stride = static_cast<double>(pts.size()) / static_cast<double>(cap);
    for (std::size_t k = 0; k < cap; ++k) thin.push_back(pts[static_cast<std::size_t>(k * stride)]);
    return thin;
}

}  // namespace

AttractorReachResult estimate_attractor_reach(const ControlSystem& sys, ConstSpan v, const DisturbanceSignal& frozen,
                                              const AttractorReachOptions& opt) {
    opt.integrator.validate();
    if (frozen.dim() != sys.disturbance_dim()) throw DimensionMismatch("disturbance signal vs system dimension");
    for (const auto& ax : frozen.axes())
        if (!std::holds_alternative<axis::Constant>(ax))
            throw InvalidArgument("attractor reach needs a disturbance-free system or a frozen (constant) disturbance");
    if (opt.trials == 0 || opt.radii.empty() || opt.epsilons.empty()) throw InvalidArgument("empty trial plan");
    if (!(opt.horizon > 0.0)) throw InvalidArgument("horizon must be positive");

    const std::size_t n = sys.state_dim();
    std::vector<double> radii = opt.radii;
    std::sort(radii.begin(), radii.end());

    std::vector<DenseSegment> segs;
    std::vector<std::size_t> radius_of;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        for (std::size_t t = 0; t < opt.trials; ++t) {
            Rng rng(stream_seed(opt.seed, k * opt.trials + t));
            Vec x0(n);
            if (n == 1) {
                x0[0] = (t % 2 == 0) ? radii[k] : -radii[k];
            } else {
                for (auto& c : x0) c = rng.normal();
                const double len = norm(x0);
                for (auto& c : x0) c *= radii[k] / len;
            }
            segs.push_back(integrate_held(sys, frozen, x0, v, 0.0, opt.horizon, opt.integrator));
            radius_of.push_back(k);
        }
    }

    const double eps_min = *std::min_element(opt.epsilons.begin(), opt.epsilons.end());
    const double H = opt.horizon;
    auto late = window_points(segs, 0.9 * H, H, 256);
    auto earlier = window_points(segs, 0.8 * H, 0.9 * H, 256);
    double hausdorff = 0.0;
    for (const auto& p : late) hausdorff = std::max(hausdorff, distance_to_set(p, earlier));
    for (const auto& p : earlier) hausdorff = std::max(hausdorff, distance_to_set(p, late));
    if (!(hausdorff <= 0.5 * eps_min))
        throw NonConvergence("limit-set estimate moved by " + std::to_string(hausdorff) + " over the last 20% of the horizon");

    AttractorReachResult res;
    res.attractor = late;
    res.epsilons = opt.epsilons;
    res.radii = radii;
    for (double eps : opt.epsilons) {
        std::vector<double> row(radii.size(), 0.0);
        for (std::size_t s = 0; s < segs.size(); ++s) {
            const auto& seg = segs[s];
            auto outside = [&](double t) { return distance_to_set(seg.state_at(t), late) > eps; };
            std::optional<std::size_t> last;
            for (std::size_t i = seg.size(); i-- > 0;)
                if (distance_to_set(seg.state(i), late) > eps) {
                    last = i;
                    break;
                }
            double T = 0.0;
            if (last) {
                if (*last + 1 >= seg.size() || seg.time(*last) >= 0.8 * H) {
                    res.pass = false;
                    res.witness = "trial " + std::to_string(s) + " still outside the " + std::to_string(eps) +
                                  "-neighborhood at t = " + std::to_string(seg.time(*last));
                    T = H;
                } else {
                    double lo = seg.time(*last), hi = seg.time(*last + 1);
                    while (hi - lo > 1e-9) {
                        const double mid = 0.5 * (lo + hi);
                        (outside(mid) ? lo : hi) = mid;
                    }
                    T = hi;
                }
            }
            row[radius_of[s]] = std::max(row[radius_of[s]], T);
        }
        for (std::size_t k = 1; k < row.size(); ++k) row[k] = std::max(row[k], row[k - 1]);
        res.reach.push_back(std::move(row));
    }
    return res;
}

}  // namespace chainstab
