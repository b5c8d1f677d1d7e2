#include "chainstab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chainstab/errors.hpp"
#include "chainstab/random.hpp"

namespace chainstab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Index k with k*mesh <= t < (k+1)*mesh, robust to rounding in t / mesh.
std::int64_t mesh_index(double t, double mesh) {
    auto k = static_cast<std::int64_t>(std::floor(t / mesh));
    if (static_cast<double>(k + 1) * mesh <= t) ++k;
    if (static_cast<double>(k) * mesh > t) --k;
    return k;
}

// Index k with k*mesh < t <= (k+1)*mesh.
std::int64_t mesh_index_left(double t, double mesh) {
    auto k = static_cast<std::int64_t>(std::ceil(t / mesh)) - 1;
    if (static_cast<double>(k + 1) * mesh < t) ++k;
    if (static_cast<double>(k) * mesh >= t) --k;
    return k;
}

double tabulated_value(const std::vector<double>& times, const std::vector<double>& values, double t,
                       bool left_limit) {
    // last i with times[i] <= t (or < t for the left limit)
    auto it = left_limit ? std::lower_bound(times.begin(), times.end(), t)
                         : std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return values.front();
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

void validate_table(const std::vector<double>& times, const std::vector<double>& values,
                    const char* what) {
    if (times.empty() || times.size() != values.size())
        throw InvalidArgument(std::string(what) + ": times and values must be nonempty and equal length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw InvalidArgument(std::string(what) + ": times must be strictly increasing");
}

double random_value(const axis::RandomPiecewise& s, std::int64_t k) {
    const auto bits = mix64(s.seed ^ mix64(static_cast<std::uint64_t>(k)));
    return s.low + (s.high - s.low) * unit_from_bits(bits);
}

double axis_value(const AxisSignal& sig, double t, bool left_limit) {
    return std::visit(
        overloaded{
            [](const axis::Constant& c) { return c.value; },
            [t](const axis::Sinusoidal& s) { return s.offset + s.amplitude * std::sin(s.frequency * t); },
            [t, left_limit](const axis::RandomPiecewise& s) {
                const auto k = left_limit && t > 0.0 ? mesh_index_left(t, s.mesh) : mesh_index(t, s.mesh);
                return random_value(s, k);
            },
            [t, left_limit](const axis::Tabulated& s) { return tabulated_value(s.times, s.values, t, left_limit); },
        },
        sig);
}

}  // namespace

// ---------------------------------------------------------------------------

Box Box::unbounded(std::size_t dim) { return Box{Vec(dim, -kInf), Vec(dim, kInf)}; }

Box Box::symmetric(std::size_t dim, double half_width) {
    return Box{Vec(dim, -half_width), Vec(dim, half_width)};
}

bool Box::contains(ConstSpan p) const {
    if (p.size() != lo.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
    return true;
}

bool Box::bounded() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
    return true;
}

void Box::clamp(MutSpan p) const {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
}

double Box::max_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const double m = std::max(std::abs(lo[i]), std::abs(hi[i]));
        s += m * m;
    }
    return std::sqrt(s);
}

ControlSet ControlSet::all(std::size_t dim) { return ControlSet(Box::unbounded(dim)); }

ControlSet ControlSet::nonpositive(std::size_t dim) { return ControlSet(Box{Vec(dim, -kInf), Vec(dim, 0.0)}); }

ControlSet ControlSet::nonnegative(std::size_t dim) { return ControlSet(Box{Vec(dim, 0.0), Vec(dim, kInf)}); }

ControlSet ControlSet::box(Vec lo, Vec hi) {
    if (lo.size() != hi.size()) throw DimensionMismatch("control box bounds differ in length");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw InvalidArgument("control box has lo > hi on axis " + std::to_string(i));
    return ControlSet(Box{std::move(lo), std::move(hi)});
}

std::string ControlSet::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (i) os << " x ";
        os << (std::isinf(bounds_.lo[i]) ? "(-inf" : "[" + std::to_string(bounds_.lo[i])) << ", "
           << (std::isinf(bounds_.hi[i]) ? "inf)" : std::to_string(bounds_.hi[i]) + "]");
    }
    return os.str();
}

// ---------------------------------------------------------------------------

ControlSystem::ControlSystem(std::string label, std::size_t state_dim, std::size_t control_dim,
                             Box disturbance_box, ControlSet control_set, RhsFn rhs, bool origin_equilibrium)
    : label_(std::move(label)),
      n_(state_dim),
      m_(control_dim),
      disturbances_(std::move(disturbance_box)),
      controls_(std::move(control_set)),
      rhs_(std::move(rhs)),
      origin_equilibrium_(origin_equilibrium) {
    if (n_ == 0 || m_ == 0) throw InvalidArgument("state and control dimensions must be positive");
    if (controls_.dim() != m_) throw DimensionMismatch("control set dimension differs from control_dim");
    if (disturbances_.hi.size() != disturbances_.lo.size())
        throw DimensionMismatch("disturbance box bounds differ in length");
    if (!rhs_) throw InvalidArgument("rhs must be callable");
}

Vec ControlSystem::eval_rhs(ConstSpan d, ConstSpan x, ConstSpan u) const {
    if (d.size() != disturbance_dim() || x.size() != n_ || u.size() != m_)
        throw DimensionMismatch("eval_rhs expects d[" + std::to_string(disturbance_dim()) + "], x[" +
                                std::to_string(n_) + "], u[" + std::to_string(m_) + "]");
    if (!disturbances_.contains(d)) throw DisturbanceOutOfBox("d outside D for system " + label_);
    if (!controls_.contains(u)) throw ControlOutOfSet("u outside U = " + controls_.describe());
    Vec dx(n_, 0.0);
    rhs_(d, x, u, dx);
    return dx;
}

// ---------------------------------------------------------------------------

DisturbanceSignal::DisturbanceSignal(Box disturbance_box, std::vector<AxisSignal> axes, bool clamp_to_box)
    : box_(std::move(disturbance_box)), axes_(std::move(axes)), clamp_(clamp_to_box) {
    if (axes_.size() != box_.dim())
        throw DimensionMismatch("disturbance signal has " + std::to_string(axes_.size()) +
                                " axes but D has dimension " + std::to_string(box_.dim()));
    for (const auto& a : axes_) {
        if (const auto* r = std::get_if<axis::RandomPiecewise>(&a)) {
            if (!(r->mesh > 0.0)) throw InvalidArgument("random disturbance mesh must be positive");
            if (r->low > r->high) throw InvalidArgument("random disturbance range has low > high");
        } else if (const auto* tab = std::get_if<axis::Tabulated>(&a)) {
            validate_table(tab->times, tab->values, "tabulated disturbance");
        }
    }
}

DisturbanceSignal DisturbanceSignal::none() { return DisturbanceSignal(Box{}, {}); }

DisturbanceSignal DisturbanceSignal::constant(const Box& box, ConstSpan value) {
    std::vector<AxisSignal> axes;
    for (double v : value) axes.emplace_back(axis::Constant{v});
    return DisturbanceSignal(box, std::move(axes));
}

DisturbanceSignal DisturbanceSignal::sinusoidal(const Box& box, ConstSpan base, std::size_t axis_index,
                                                double amplitude, double frequency, double offset) {
    if (axis_index >= base.size()) throw DimensionMismatch("sinusoidal axis out of range");
    std::vector<AxisSignal> axes;
    for (double v : base) axes.emplace_back(axis::Constant{v});
    axes[axis_index] = axis::Sinusoidal{amplitude, frequency, offset};
    return DisturbanceSignal(box, std::move(axes));
}

DisturbanceSignal DisturbanceSignal::random_piecewise(const Box& box, double mesh, std::uint64_t seed) {
    if (!box.bounded()) throw InvalidArgument("random disturbances need a bounded D");
    std::vector<AxisSignal> axes;
    for (std::size_t i = 0; i < box.dim(); ++i)
        axes.emplace_back(axis::RandomPiecewise{mesh, box.lo[i], box.hi[i], stream_seed(seed, i)});
    return DisturbanceSignal(box, std::move(axes));
}

Vec DisturbanceSignal::sample(double t) const {
    Vec out(axes_.size());
    sample_into(t, out);
    return out;
}

void DisturbanceSignal::sample_into(double t, MutSpan out) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) out[i] = axis_value(axes_[i], t, false);
    if (clamp_) box_.clamp(out);
}

void DisturbanceSignal::sample_left_into(double t, MutSpan out) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) out[i] = axis_value(axes_[i], t, true);
    if (clamp_) box_.clamp(out);
}

std::vector<double> DisturbanceSignal::breakpoints(double t0, double t1) const {
    std::vector<double> pts;
    for (const auto& a : axes_) {
        if (const auto* r = std::get_if<axis::RandomPiecewise>(&a)) {
            for (auto k = mesh_index(t0, r->mesh) + 1;; ++k) {
                const double t = static_cast<double>(k) * r->mesh;
                if (t >= t1) break;
                if (t > t0) pts.push_back(t);
            }
        } else if (const auto* tab = std::get_if<axis::Tabulated>(&a)) {
            for (double t : tab->times)
                if (t > t0 && t < t1) pts.push_back(t);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

bool DisturbanceSignal::may_leave_box() const {
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const double lo = box_.lo[i];
        const double hi = box_.hi[i];
        const bool leaves = std::visit(
            overloaded{
                [&](const axis::Constant& c) { return c.value < lo || c.value > hi; },
                [&](const axis::Sinusoidal& s) {
                    const double a = std::abs(s.amplitude);
                    return s.offset - a < lo || s.offset + a > hi;
                },
                [&](const axis::RandomPiecewise& r) { return r.low < lo || r.high > hi; },
                [&](const axis::Tabulated& tab) {
                    return std::any_of(tab.values.begin(), tab.values.end(),
                                       [&](double v) { return v < lo || v > hi; });
                },
            },
            axes_[i]);
        if (leaves) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------

SchedulePerturbation::SchedulePerturbation(Kind kind) : kind_(std::move(kind)) {
    if (const auto* c = std::get_if<schedule::Constant>(&kind_)) {
        if (!(c->value >= 0.0)) throw InvalidArgument("schedule perturbation constant must be >= 0");
    } else if (const auto* tab = std::get_if<schedule::Tabulated>(&kind_)) {
        validate_table(tab->times, tab->values, "tabulated schedule perturbation");
        for (double v : tab->values)
            if (!(v >= 0.0)) throw InvalidArgument("schedule perturbation values must be >= 0");
    }
}

SchedulePerturbation SchedulePerturbation::random_tabulated(double mesh, double max_value, double horizon,
                                                            std::uint64_t seed) {
    if (!(mesh > 0.0) || !(max_value >= 0.0)) throw InvalidArgument("random schedule needs mesh > 0, max >= 0");
    schedule::Tabulated tab;
    Rng rng(seed);
    for (std::int64_t k = 0; static_cast<double>(k) * mesh <= horizon; ++k) {
        tab.times.push_back(static_cast<double>(k) * mesh);
        tab.values.push_back(rng.uniform(0.0, max_value));
    }
    return SchedulePerturbation{std::move(tab)};
}

double SchedulePerturbation::value(double t) const {
    return std::visit(overloaded{
                          [](const schedule::Zero&) { return 0.0; },
                          [t](const schedule::AbsSin&) { return std::abs(std::sin(t)); },
                          [](const schedule::Constant& c) { return c.value; },
                          [t](const schedule::Tabulated& tab) { return tabulated_value(tab.times, tab.values, t, false); },
                      },
                      kind_);
}

// ---------------------------------------------------------------------------

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

void fill_uniform(Rng& rng, const Box& box, MutSpan out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(box.lo[i], box.hi[i]);
}

// Odometer over a tensor grid with `nodes` points per axis.
bool next_index(std::vector<std::size_t>& idx, std::size_t nodes) {
    for (auto& i : idx) {
        if (++i < nodes) return true;
        i = 0;
    }
    return false;
}

}  // namespace

double origin_equilibrium_residual(const ControlSystem& sys, std::size_t nodes_per_axis) {
    const auto& D = sys.disturbance_box();
    const std::size_t l = D.dim();
    if (l > 0 && !D.bounded()) throw InvalidArgument("equilibrium check needs a bounded D");
    const std::size_t nodes = std::max<std::size_t>(nodes_per_axis, 2);
    Vec x(sys.state_dim(), 0.0), u(sys.control_dim(), 0.0), dx(sys.state_dim()), d(l);
    std::vector<std::size_t> idx(l, 0);
    double worst = 0.0;
    do {
        for (std::size_t i = 0; i < l; ++i)
            d[i] = D.lo[i] + (D.hi[i] - D.lo[i]) * static_cast<double>(idx[i]) / static_cast<double>(nodes - 1);
        sys.rhs(d, x, u, dx);
        worst = std::max(worst, norm(dx));
    } while (l > 0 && next_index(idx, nodes));
    return worst;
}

LipschitzEstimate estimate_one_sided_lipschitz(const ControlSystem& sys, const Box& state_box,
                                               const Box& control_box, std::size_t samples,
                                               std::uint64_t seed) {
    if (!state_box.bounded() || !control_box.bounded())
        throw InvalidArgument("Lipschitz estimation needs bounded sampling boxes");
    const std::size_t n = sys.state_dim();
    Rng rng(seed);
    Vec x(n), y(n), u(sys.control_dim()), d(sys.disturbance_dim()), fx(n), fy(n);
    LipschitzEstimate est;
    for (std::size_t s = 0; s < samples; ++s) {
        fill_uniform(rng, state_box, x);
        fill_uniform(rng, state_box, y);
        fill_uniform(rng, control_box, u);
        fill_uniform(rng, sys.disturbance_box(), d);
        const double dist2 = std::pow(distance(x, y), 2);
        if (dist2 == 0.0) continue;
        sys.rhs(d, x, u, fx);
        sys.rhs(d, y, u, fy);
        double ip = 0.0;
        for (std::size_t i = 0; i < n; ++i) ip += (x[i] - y[i]) * (fx[i] - fy[i]);
        est.max_quotient = std::max(est.max_quotient, ip / dist2);
        ++est.pairs;
    }
    return est;
}

double GrowthEnvelope::operator()(double s) const { return scale * s * std::exp(rate * s); }

GrowthEnvelope fit_growth_envelope(const ControlSystem& sys, const Box& state_box, const Box& control_box,
                                   std::size_t samples, std::uint64_t seed) {
    if (!state_box.bounded() || !control_box.bounded())
        throw InvalidArgument("growth envelope fit needs bounded sampling boxes");
    const std::size_t n = sys.state_dim();
    Rng rng(seed);
    Vec x(n), u(sys.control_dim()), d(sys.disturbance_dim()), fx(n);
    std::vector<std::pair<double, double>> pts;  // (|x| + |u|, |f|)
    pts.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        fill_uniform(rng, state_box, x);
        fill_uniform(rng, control_box, u);
        fill_uniform(rng, sys.disturbance_box(), d);
        sys.rhs(d, x, u, fx);
        pts.emplace_back(norm(x) + norm(u), norm(fx));
    }
    const double s_max = state_box.max_norm() + control_box.max_norm();
    GrowthEnvelope best{std::numeric_limits<double>::infinity(), 0.0, samples};
    for (double rate : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        double scale = 0.0;
        for (auto [s, f] : pts)
            if (s > 0.0) scale = std::max(scale, f / (s * std::exp(rate * s)));
        if (scale * std::exp(rate * s_max) < best.scale * std::exp(best.rate * s_max))
            best = GrowthEnvelope{scale, rate, samples};
    }
    return best;
}

}  // namespace chainstab
