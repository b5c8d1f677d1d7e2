#include "chainstab/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"

namespace chainstab {

namespace {

std::shared_ptr<const ControlSystem> make_jet_engine_system() {
    return std::make_shared<const ControlSystem>(
        kJetEngineLabel, 2, 1, Box::symmetric(2, 1.0), ControlSet::all(1),
        [](ConstSpan d, ConstSpan x, ConstSpan u, MutSpan dx) {
            const double x1 = x[0];
            dx[0] = d[0] * x1 + 1.5 * d[1] * x1 * x1 - 0.5 * x1 * x1 * x1 + x[1];
            dx[1] = u[0];
        },
        true);
}

MonotoneEnvelope identity_envelope() {
    return MonotoneEnvelope::analytic("s", [](double s) { return s; });
}

MonotoneEnvelope example_growth_envelope() {
    return MonotoneEnvelope::analytic("2 s exp(4 + 4 s)", [](double s) { return 2.0 * s * std::exp(4.0 + 4.0 * s); });
}

}  // namespace

JetEngineScenario build_jet_engine(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw NonpositiveEpsilon("epsilon must be positive, got " + std::to_string(epsilon));
    JetEngineScenario s;
    s.epsilon = epsilon;
    s.R = 457.0 / 2.0 + epsilon;
    s.L = 3.5 + std::sqrt(2.0 * s.R);
    const double w = 5.0 * s.R - 332.0;
    s.gamma = 9.0 * s.R / 4.0 + (s.R * s.R + 1.0) / 2.0 + 0.5 * w * w;
    s.M = std::sqrt((80.0 / 3.0) * (421.0 * 421.0 + 225.0 * s.R * s.R));
    s.r = 1.0;
    s.h_bound = max_sampling_period(s.L, s.gamma, s.M);
    s.h_tilde = 0.99 * s.h_bound;

    s.system = make_jet_engine_system();
    s.V = LyapunovRegistry::builtin().find("jet_engine_quadratic");
    s.theta = Region::sublevel(s.V, s.R, true)
                  .with_bounds(Box{{-std::sqrt(2.0 * s.R), -std::sqrt(52.0 * s.R)},
                                   {std::sqrt(2.0 * s.R), std::sqrt(52.0 * s.R)}})
                  .with_label("Theta");
    s.omegas = {s.theta, Region::band(1, 1.0).with_label("Omega_2"),
                Region::half_space({0.0, 1.0}, -1.0).with_label("Omega_3"),
                Region::half_space({0.0, -1.0}, -1.0).with_label("Omega_4")};
    s.controls = {{0.0}, {1.0}, {-1.0}};
    s.inner = [](ConstSpan x, MutSpan u) { u[0] = -421.0 * x[0] - 89.0 * x[1] + 2.5 * x[0] * x[0] * x[0]; };
    s.feedback_ = synthesize(s.inner, s.theta, s.h_tilde, s.omegas, s.controls, s.r, s.system->control_set());
    return s;
}

FigureScenario JetEngineScenario::figure(int index) const {
    FigureScenario f;
    f.index = index;
    f.x0 = {10.0, 2.0};
    f.t_end = 20.0;
    f.h = epsilon;
    const Box& D = system->disturbance_box();
    switch (index) {
        case 1:
            f.description = "d1 = 0, d2 = 1, schedule perturbation 0";
            f.disturbance = DisturbanceSignal::constant(D, Vec{0.0, 1.0});
            f.schedule = SchedulePerturbation::zero();
            break;
        case 2:
            f.description = "d1 = 1, d2 = sin t, schedule perturbation 0";
            f.disturbance = DisturbanceSignal::sinusoidal(D, Vec{1.0, 0.0}, 1, 1.0, 1.0, 0.0);
            f.schedule = SchedulePerturbation::zero();
            break;
        case 3:
            f.description = "d1 = 1, d2 = 1, schedule perturbation |sin t|";
            f.disturbance = DisturbanceSignal::constant(D, Vec{1.0, 1.0});
            f.schedule = SchedulePerturbation::abs_sin();
            break;
        default:
            throw InvalidArgument("figure index must be 1, 2 or 3, got " + std::to_string(index));
    }
    return f;
}

ReachabilityCertificate JetEngineScenario::omega4_to_omega2() const {
    ReachabilityCertificate c;
    c.label = "Omega_4 -> Omega_2";
    c.source = omegas[3];
    c.target = omegas[1];
    c.v = {-1.0};
    c.r = 1.0;
    c.c = 0.0;
    c.b = identity_envelope();
    c.a = example_growth_envelope();
    c.exact_hitting_time = [](ConstSpan x0) { return x0[1] - 1.0; };
    c.t_bound = c.exact_hitting_time;
    return c;
}

ReachabilityCertificate JetEngineScenario::omega3_to_omega2() const {
    ReachabilityCertificate c;
    c.label = "Omega_3 -> Omega_2";
    c.source = omegas[2];
    c.target = omegas[1];
    c.v = {1.0};
    c.r = 1.0;
    c.c = 0.0;
    c.b = identity_envelope();
    c.a = example_growth_envelope();
    // x2 rises with unit slope from x20 <= -1, so it reaches -1 at -1 - x20
    c.exact_hitting_time = [](ConstSpan x0) { return -1.0 - x0[1]; };
    c.t_bound = c.exact_hitting_time;
    c.note = "hitting time from Omega_3 is -1 - x20 under the held control +1";
    return c;
}

Region JetEngineScenario::omega2_target() const {
    const auto v = LyapunovRegistry::builtin().find("x1_squared");
    return Region::intersection({omegas[1], Region::sublevel(v, 16.0)})
        .with_bounds(Box{{-4.0, -1.0}, {4.0, 1.0}})
        .with_label("A");
}

ReachBoundsInput JetEngineScenario::omega2_bounds_input() const {
    ReachBoundsInput in;
    in.V = LyapunovRegistry::builtin().find("x1_squared");
    in.state_dim = 2;
    in.level = 16.0;
    in.delta = 7.0;
    in.p = 4.0;
    in.a1 = [](double s) { return s; };
    in.a2 = [](double s) { return 2.0 * s; };
    in.r = 1.0;
    for (int k = 0; k <= 800; ++k) in.radii.push_back(0.05 * k);
    in.direction_nodes_per_axis = 41;
    return in;
}

ReachabilityCertificate JetEngineScenario::omega2_to_target() const {
    const auto bounds = reach_bounds(omega2_bounds_input());
    ReachabilityCertificate c;
    c.label = "Omega_2 -> A";
    c.source = omegas[1];
    c.target = omega2_target();
    c.v = {0.0};
    c.r = 1.0;
    c.c = bounds.c;
    c.b = bounds.b;
    c.a = bounds.a;
    c.t_bound = bounds.t_bound;
    return c;
}

DescentBounds JetEngineScenario::descent_bounds() const {
    const auto c4 = omega4_to_omega2();
    const auto c3 = omega3_to_omega2();
    const auto c2 = omega2_to_target();
    DescentBounds d;
    d.c = std::max({c4.c, c3.c, c2.c});
    d.b = MonotoneEnvelope::pointwise_max("max b", {c4.b, c3.b, c2.b});
    d.a = MonotoneEnvelope::pointwise_max("max a", {c4.a, c3.a, c2.a});
    d.r = 1.0;
    d.chain_length = omegas.size();
    return d;
}

nlohmann::json JetEngineScenario::constants_json() const {
    using json_util::number;
    return nlohmann::json{{"epsilon", number(epsilon)}, {"R", number(R)},           {"L", number(L)},
                          {"gamma", number(gamma)},     {"M", number(M)},           {"r", number(r)},
                          {"h_bound", number(h_bound)}, {"h_tilde", number(h_tilde)}};
}

// ---------------------------------------------------------------------------
// Scalar system
// ---------------------------------------------------------------------------

namespace {

double grid_max(const ScalarFn& a, double lo, double hi, double step) {
    double m = std::max(a(lo), a(hi));
    const auto steps = static_cast<long long>(std::ceil((hi - lo) / step));
    for (long long k = 1; k < steps; ++k) m = std::max(m, a(lo + static_cast<double>(k) * step));
    return m;
}

}  // namespace

Region ScalarScenario::chain_region(std::size_t j) {
    if (j < 2) throw InvalidArgument("generated chain regions start at index 2");
    const double lo = static_cast<double>(j - 1), hi = static_cast<double>(j);
    return Region::intersection({Region::half_space({-1.0}, -lo, true), Region::half_space({1.0}, hi)})
        .with_bounds(Box{{lo}, {hi}})
        .with_label("Omega_" + std::to_string(j));
}

double ScalarScenario::chain_control(std::size_t j) const {
    if (j < 2) throw InvalidArgument("chain controls start at index 2");
    return -1.0 - grid_max(drift, static_cast<double>(j - 1), static_cast<double>(j), 1e-4);
}

ScalarScenario build_scalar(const std::string& label, ScalarFn drift) {
    if (!drift) throw InvalidArgument("drift must be callable");
    if (drift(0.0) != 0.0) throw NotPositiveDrift("a(0) must be 0, got " + std::to_string(drift(0.0)));
    for (int k = 1; k <= 10000; ++k) {
        const double x = 0.01 * k;
        if (!(drift(x) > 0.0) || !(drift(-x) > 0.0))
            throw NotPositiveDrift("a must be positive away from 0; fails near x = +-" + std::to_string(x));
    }

    ScalarScenario s;
    s.drift_label = label;
    s.drift = drift;
    double q = 0.0;
    for (int k = 1; k <= 20000; ++k) {
        const double x = 1e-4 * k;
        q = std::max(q, drift(x) / x);
    }
    s.L = std::max(1.0, std::ceil(q * (1.0 - 1e-12)));
    s.h_tilde = 1.0 / (s.L + 1.0);
    s.r = 1.0;
    s.system = std::make_shared<const ControlSystem>(
        kScalarLabel, 1, 1, Box{}, ControlSet::nonpositive(1),
        [drift](ConstSpan, ConstSpan x, ConstSpan u, MutSpan dx) { dx[0] = drift(x[0]) + u[0]; }, true);
    s.theta = Region::half_space({1.0}, 2.0, true).with_label("Theta");
    const double gain = s.L + 1.0;
    s.inner = [gain](ConstSpan x, MutSpan u) { u[0] = x[0] <= 0.0 ? 0.0 : -gain * x[0]; };

    ChainGenerator gen;
    gen.region = [](std::size_t j) { return ScalarScenario::chain_region(j); };
    gen.control = [drift](std::size_t j) {
        return Vec{-1.0 - grid_max(drift, static_cast<double>(j - 1), static_cast<double>(j), 1e-4)};
    };
    gen.locate = [](ConstSpan x) -> std::optional<std::size_t> {
        if (x[0] < 2.0 || !std::isfinite(x[0])) return std::nullopt;
        return static_cast<std::size_t>(std::max(2.0, std::ceil(x[0])));
    };
    s.feedback_ = synthesize(s.inner, s.theta, s.h_tilde, std::move(gen), s.r, s.system->control_set());
    return s;
}

ScalarFn drift_by_name(const std::string& name) {
    if (name == "x_squared") return [](double x) { return x * x; };
    if (name == "x_fourth") return [](double x) { return x * x * x * x; };
    if (name == "abs_x") return [](double x) { return std::abs(x); };
    throw ConfigError("unknown drift '" + name + "'");
}

std::vector<std::string> drift_names() { return {"x_squared", "x_fourth", "abs_x"}; }

std::vector<std::string> scenario_labels() { return {kJetEngineLabel, kScalarLabel}; }

}  // namespace chainstab
