#pragma once

// Scenario configuration documents (JSON). Unknown keys are errors; every
// field has a default so that serialize(parse(doc)) is a fixed point.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainstab/certify.hpp"
#include "chainstab/dynamics.hpp"
#include "chainstab/hybrid.hpp"
#include "chainstab/integrate.hpp"
#include "chainstab/scenarios.hpp"
#include "chainstab/stability.hpp"

namespace chainstab {

struct AxisSpec {
    std::string kind = "constant";  ///< constant, sinusoidal, random, tabulated
    double value = 0.0;
    double amplitude = 1.0, frequency = 1.0, offset = 0.0;
    double mesh = 0.1, low = -1.0, high = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> times, values;
};

struct ScheduleSpec {
    std::string kind = "zero";  ///< zero, abs_sin, constant, tabulated
    double value = 0.0;
    std::vector<double> times, values;
};

struct ControlOverride {
    std::size_t index = 0;
    Vec v;
};

struct ChainSpec {
    bool builtin = true;
    nlohmann::json regions = nlohmann::json::array();  ///< region descriptors, Omega_1 first
    std::vector<Vec> controls;                         ///< v_2..v_N
    std::vector<ControlOverride> overrides;
};

struct DecreaseSpec {
    std::string label;
    nlohmann::json region;
    std::string function;
    Vec v;
    double level = 0.0;
    double delta = 1.0;
    std::optional<Box> truncation;
    std::vector<std::size_t> nodes;
    std::size_t disturbance_nodes = 9;
};

struct PropertyQSpec {
    std::string certificate;  ///< omega4_to_omega2, omega3_to_omega2, omega2_to_target
    std::size_t trials = 200;
    Box sample_box;
    double max_initial_norm = std::numeric_limits<double>::infinity();
    double disturbance_mesh = 0.1;
};

struct InequalitySpec {
    bool enabled = false;
    std::size_t nodes = 21;
    std::size_t disturbance_nodes = 3;
    double L_scale = 1.0;
};

struct CertifySpec {
    std::vector<DecreaseSpec> decrease;
    std::vector<PropertyQSpec> property_q;
    InequalitySpec inequalities;
    bool sampling_bound = false;
};

struct SuiteSpec {
    std::vector<double> radii{1.0, 5.0, 15.0};
    std::vector<double> epsilons{0.1, 0.01};
    std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    std::size_t trials = 100;
    std::size_t lyapunov_trials = 20;
    double t_end = 20.0;
    double disturbance_mesh = 0.5;
    double schedule_max = 1.0;
    double schedule_mesh = 0.5;
    std::string envelope = "none";  ///< none, exp_decay_positive
};

struct ScenarioConfig {
    std::string system = kJetEngineLabel;
    double epsilon = 0.001;
    std::string drift = "x_squared";
    std::optional<double> h;  ///< base sampling period; default is the certified one
    ChainSpec chain;
    std::vector<AxisSpec> disturbance;  ///< empty: all axes 0
    bool clamp = true;
    ScheduleSpec schedule;
    Vec initial_state;
    double t_end = 20.0;
    IntegratorConfig integrator;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    CertifySpec certify;
    SuiteSpec suite;

    static ScenarioConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Parses a document; syntax errors are reported with line and column. Throws ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Objects built from a configuration.
struct BuiltScenario {
    std::shared_ptr<const ControlSystem> system;
    std::optional<JetEngineScenario> jet;
    std::optional<ScalarScenario> scalar;
    std::optional<PiecewiseFeedback> feedback;  ///< with the configured period
    DisturbanceSignal disturbance = DisturbanceSignal::none();
    SchedulePerturbation schedule;
    Region theta = Region::everything();
    LyapunovRegistry registry;
};

/// Throws ConfigError for inconsistent settings.
BuiltScenario build_scenario(const ScenarioConfig& cfg);

DisturbanceSignal build_disturbance(const ScenarioConfig& cfg, const Box& box);
SchedulePerturbation build_schedule(const ScheduleSpec& spec);

}  // namespace chainstab
