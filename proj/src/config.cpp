#include "chainstab/config.hpp"

#include <fstream>
#include <sstream>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"
#include "chainstab/random.hpp"

namespace chainstab {

namespace {

using json = nlohmann::json;
using json_util::number;
using json_util::require_keys;
using json_util::to_number;
using json_util::to_vec;
using json_util::vec;

double num_or(const json& j, const char* key, double def, const std::string& where) {
    return j.contains(key) ? to_number(j.at(key), where + "." + key) : def;
}

std::uint64_t uint_or(const json& j, const char* key, std::uint64_t def, const std::string& where) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where + "." + key + ": expected a nonnegative integer");
}

std::string str_or(const json& j, const char* key, const std::string& def, const std::string& where) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

bool bool_or(const json& j, const char* key, bool def, const std::string& where) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return j.at(key).get<bool>();
}

Vec vec_or(const json& j, const char* key, const Vec& def, const std::string& where) {
    return j.contains(key) ? to_vec(j.at(key), where + "." + key) : def;
}

const json& object_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_object()) throw ConfigError(where + "." + key + ": expected an object");
    return v;
}

const json& array_at(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    return v;
}

json size_list(const std::vector<std::size_t>& v) {
    json a = json::array();
    for (auto k : v) a.push_back(k);
    return a;
}

// --- pieces ---------------------------------------------------------------

AxisSpec axis_from(const json& j, const std::string& w) {
    if (!j.is_object()) throw ConfigError(w + ": expected an object");
    AxisSpec a;
    a.kind = str_or(j, "kind", "constant", w);
    if (a.kind == "constant") {
        require_keys(j, {"kind", "value"}, w);
        a.value = num_or(j, "value", 0.0, w);
    } else if (a.kind == "sinusoidal") {
        require_keys(j, {"kind", "amplitude", "frequency", "offset"}, w);
        a.amplitude = num_or(j, "amplitude", 1.0, w);
        a.frequency = num_or(j, "frequency", 1.0, w);
        a.offset = num_or(j, "offset", 0.0, w);
    } else if (a.kind == "random") {
        require_keys(j, {"kind", "mesh", "low", "high", "seed"}, w);
        a.mesh = num_or(j, "mesh", 0.1, w);
        a.low = num_or(j, "low", -1.0, w);
        a.high = num_or(j, "high", 1.0, w);
        a.seed = uint_or(j, "seed", 0, w);
        if (!(a.mesh > 0.0)) throw ConfigError(w + ".mesh: must be positive");
        if (!(a.low <= a.high)) throw ConfigError(w + ": low > high");
    } else if (a.kind == "tabulated") {
        require_keys(j, {"kind", "times", "values"}, w);
        a.times = vec_or(j, "times", {}, w);
        a.values = vec_or(j, "values", {}, w);
        if (a.times.empty() || a.times.size() != a.values.size())
            throw ConfigError(w + ": times and values must be nonempty and of equal length");
    } else {
        throw ConfigError(w + ".kind: unknown signal kind '" + a.kind + "'");
    }
    return a;
}

json axis_to(const AxisSpec& a) {
    if (a.kind == "constant") return json{{"kind", a.kind}, {"value", number(a.value)}};
    if (a.kind == "sinusoidal")
        return json{{"kind", a.kind},
                    {"amplitude", number(a.amplitude)},
                    {"frequency", number(a.frequency)},
                    {"offset", number(a.offset)}};
    if (a.kind == "random")
        return json{{"kind", a.kind}, {"mesh", number(a.mesh)}, {"low", number(a.low)}, {"high", number(a.high)}, {"seed", a.seed}};
    return json{{"kind", a.kind}, {"times", vec(a.times)}, {"values", vec(a.values)}};
}

ScheduleSpec schedule_from(const json& j, const std::string& w) {
    if (!j.is_object()) throw ConfigError(w + ": expected an object");
    ScheduleSpec s;
    s.kind = str_or(j, "kind", "zero", w);
    if (s.kind == "zero" || s.kind == "abs_sin") {
        require_keys(j, {"kind"}, w);
    } else if (s.kind == "constant") {
        require_keys(j, {"kind", "value"}, w);
        s.value = num_or(j, "value", 0.0, w);
        if (!(s.value >= 0.0)) throw ConfigError(w + ".value: must be >= 0");
    } else if (s.kind == "tabulated") {
        require_keys(j, {"kind", "times", "values"}, w);
        s.times = vec_or(j, "times", {}, w);
        s.values = vec_or(j, "values", {}, w);
        if (s.times.empty() || s.times.size() != s.values.size())
            throw ConfigError(w + ": times and values must be nonempty and of equal length");
    } else {
        throw ConfigError(w + ".kind: unknown schedule kind '" + s.kind + "'");
    }
    return s;
}

json schedule_to(const ScheduleSpec& s) {
    if (s.kind == "constant") return json{{"kind", s.kind}, {"value", number(s.value)}};
    if (s.kind == "tabulated") return json{{"kind", s.kind}, {"times", vec(s.times)}, {"values", vec(s.values)}};
    return json{{"kind", s.kind}};
}

IntegratorConfig integrator_from(const json& j, const std::string& w) {
    require_keys(j, {"rel_tol", "abs_tol", "initial_step", "max_step", "blowup_norm_threshold", "max_steps", "refine_dense_grid"}, w);
    IntegratorConfig c;
    c.rel_tol = num_or(j, "rel_tol", c.rel_tol, w);
    c.abs_tol = num_or(j, "abs_tol", c.abs_tol, w);
    c.initial_step = num_or(j, "initial_step", c.initial_step, w);
    c.max_step = num_or(j, "max_step", c.max_step, w);
    c.blowup_norm_threshold = num_or(j, "blowup_norm_threshold", c.blowup_norm_threshold, w);
    c.max_steps = uint_or(j, "max_steps", c.max_steps, w);
    c.refine_dense_grid = bool_or(j, "refine_dense_grid", c.refine_dense_grid, w);
    try {
        c.validate();
    } catch (const Error& e) {
        throw ConfigError(w + ": " + e.what());
    }
    return c;
}

json integrator_to(const IntegratorConfig& c) {
    return json{{"rel_tol", number(c.rel_tol)},
                {"abs_tol", number(c.abs_tol)},
                {"initial_step", number(c.initial_step)},
                {"max_step", number(c.max_step)},
                {"blowup_norm_threshold", number(c.blowup_norm_threshold)},
                {"max_steps", c.max_steps},
                {"refine_dense_grid", c.refine_dense_grid}};
}

ChainSpec chain_from(const json& j, const std::string& w) {
    require_keys(j, {"builtin", "regions", "controls", "control_overrides"}, w);
    ChainSpec c;
    c.builtin = bool_or(j, "builtin", true, w);
    if (j.contains("regions")) c.regions = array_at(j, "regions", w);
    if (j.contains("controls")) {
        const auto& arr = array_at(j, "controls", w);
        for (std::size_t i = 0; i < arr.size(); ++i) c.controls.push_back(to_vec(arr[i], w + ".controls[" + std::to_string(i) + "]"));
    }
    if (j.contains("control_overrides")) {
        const auto& arr = array_at(j, "control_overrides", w);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string wi = w + ".control_overrides[" + std::to_string(i) + "]";
            require_keys(arr[i], {"index", "v"}, wi);
            ControlOverride o;
            o.index = uint_or(arr[i], "index", 0, wi);
            o.v = to_vec(json_util::require(arr[i], "v", wi), wi + ".v");
            c.overrides.push_back(std::move(o));
        }
    }
    if (c.builtin && (!c.regions.empty() || !c.controls.empty()))
        throw ConfigError(w + ": explicit regions/controls need \"builtin\": false");
    if (!c.builtin && c.regions.empty()) throw ConfigError(w + ": explicit chain needs regions");
    return c;
}

json chain_to(const ChainSpec& c) {
    json controls = json::array();
    for (const auto& v : c.controls) controls.push_back(vec(v));
    json overrides = json::array();
    for (const auto& o : c.overrides) overrides.push_back({{"index", o.index}, {"v", vec(o.v)}});
    return json{{"builtin", c.builtin}, {"regions", c.regions}, {"controls", controls}, {"control_overrides", overrides}};
}

DecreaseSpec decrease_from(const json& j, const std::string& w) {
    require_keys(j, {"label", "region", "function", "v", "level", "delta", "truncation", "nodes", "disturbance_nodes"}, w);
    DecreaseSpec d;
    d.label = str_or(j, "label", "", w);
    d.region = json_util::require(j, "region", w);
    d.function = str_or(j, "function", "", w);
    if (d.function.empty()) throw ConfigError(w + ".function: required");
    d.v = to_vec(json_util::require(j, "v", w), w + ".v");
    d.level = to_number(json_util::require(j, "level", w), w + ".level");
    d.delta = to_number(json_util::require(j, "delta", w), w + ".delta");
    if (j.contains("truncation")) d.truncation = json_util::to_box(j.at("truncation"), w + ".truncation");
    if (j.contains("nodes")) {
        const auto& arr = array_at(j, "nodes", w);
        for (const auto& k : arr) {
            if (!k.is_number_unsigned()) throw ConfigError(w + ".nodes: expected nonnegative integers");
            d.nodes.push_back(k.get<std::size_t>());
        }
    }
    d.disturbance_nodes = uint_or(j, "disturbance_nodes", 9, w);
    return d;
}

json decrease_to(const DecreaseSpec& d) {
    json j{{"label", d.label},
           {"region", d.region},
           {"function", d.function},
           {"v", vec(d.v)},
           {"level", number(d.level)},
           {"delta", number(d.delta)},
           {"nodes", size_list(d.nodes)},
           {"disturbance_nodes", d.disturbance_nodes}};
    if (d.truncation) j["truncation"] = json_util::box(*d.truncation);
    return j;
}

PropertyQSpec property_q_from(const json& j, const std::string& w) {
    require_keys(j, {"certificate", "trials", "sample_box", "max_initial_norm", "disturbance_mesh"}, w);
    PropertyQSpec q;
    q.certificate = str_or(j, "certificate", "", w);
    q.trials = uint_or(j, "trials", 200, w);
    q.sample_box = json_util::to_box(json_util::require(j, "sample_box", w), w + ".sample_box");
    q.max_initial_norm = num_or(j, "max_initial_norm", q.max_initial_norm, w);
    q.disturbance_mesh = num_or(j, "disturbance_mesh", 0.1, w);
    return q;
}

json property_q_to(const PropertyQSpec& q) {
    return json{{"certificate", q.certificate},
                {"trials", q.trials},
                {"sample_box", json_util::box(q.sample_box)},
                {"max_initial_norm", number(q.max_initial_norm)},
                {"disturbance_mesh", number(q.disturbance_mesh)}};
}

CertifySpec certify_from(const json& j, const std::string& w) {
    require_keys(j, {"decrease", "property_q", "inequalities", "sampling_bound"}, w);
    CertifySpec c;
    if (j.contains("decrease")) {
        const auto& arr = array_at(j, "decrease", w);
        for (std::size_t i = 0; i < arr.size(); ++i) c.decrease.push_back(decrease_from(arr[i], w + ".decrease[" + std::to_string(i) + "]"));
    }
    if (j.contains("property_q")) {
        const auto& arr = array_at(j, "property_q", w);
        for (std::size_t i = 0; i < arr.size(); ++i)
            c.property_q.push_back(property_q_from(arr[i], w + ".property_q[" + std::to_string(i) + "]"));
    }
    if (j.contains("inequalities")) {
        const std::string wi = w + ".inequalities";
        const auto& q = object_at(j, "inequalities", w);
        require_keys(q, {"enabled", "nodes", "disturbance_nodes", "L_scale"}, wi);
        c.inequalities.enabled = bool_or(q, "enabled", true, wi);
        c.inequalities.nodes = uint_or(q, "nodes", 21, wi);
        c.inequalities.disturbance_nodes = uint_or(q, "disturbance_nodes", 3, wi);
        c.inequalities.L_scale = num_or(q, "L_scale", 1.0, wi);
    }
    c.sampling_bound = bool_or(j, "sampling_bound", false, w);
    return c;
}

json certify_to(const CertifySpec& c) {
    json dec = json::array();
    for (const auto& d : c.decrease) dec.push_back(decrease_to(d));
    json pq = json::array();
    for (const auto& q : c.property_q) pq.push_back(property_q_to(q));
    return json{{"decrease", dec},
                {"property_q", pq},
                {"inequalities",
                 {{"enabled", c.inequalities.enabled},
                  {"nodes", c.inequalities.nodes},
                  {"disturbance_nodes", c.inequalities.disturbance_nodes},
                  {"L_scale", number(c.inequalities.L_scale)}}},
                {"sampling_bound", c.sampling_bound}};
}

SuiteSpec suite_from(const json& j, const std::string& w) {
    require_keys(j, {"radii", "epsilons", "deltas", "trials", "lyapunov_trials", "t_end", "disturbance_mesh", "schedule_max",
                     "schedule_mesh", "envelope"},
                 w);
    SuiteSpec s;
    s.radii = vec_or(j, "radii", s.radii, w);
    s.epsilons = vec_or(j, "epsilons", s.epsilons, w);
    s.deltas = vec_or(j, "deltas", s.deltas, w);
    s.trials = uint_or(j, "trials", s.trials, w);
    s.lyapunov_trials = uint_or(j, "lyapunov_trials", s.lyapunov_trials, w);
    s.t_end = num_or(j, "t_end", s.t_end, w);
    s.disturbance_mesh = num_or(j, "disturbance_mesh", s.disturbance_mesh, w);
    s.schedule_max = num_or(j, "schedule_max", s.schedule_max, w);
    s.schedule_mesh = num_or(j, "schedule_mesh", s.schedule_mesh, w);
    s.envelope = str_or(j, "envelope", s.envelope, w);
    if (s.envelope != "none" && s.envelope != "exp_decay_positive")
        throw ConfigError(w + ".envelope: expected \"none\" or \"exp_decay_positive\"");
    return s;
}

json suite_to(const SuiteSpec& s) {
    return json{{"radii", vec(s.radii)},
                {"epsilons", vec(s.epsilons)},
                {"deltas", vec(s.deltas)},
                {"trials", s.trials},
                {"lyapunov_trials", s.lyapunov_trials},
                {"t_end", number(s.t_end)},
                {"disturbance_mesh", number(s.disturbance_mesh)},
                {"schedule_max", number(s.schedule_max)},
                {"schedule_mesh", number(s.schedule_mesh)},
                {"envelope", s.envelope}};
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    const std::string w = "config";
    require_keys(j, {"system", "epsilon", "drift", "h", "chain", "disturbance", "schedule", "initial_state", "t_end",
                     "integrator", "seed", "workers", "certify", "suite"},
                 w);
    ScenarioConfig c;
    c.system = str_or(j, "system", c.system, w);
    if (c.system != kJetEngineLabel && c.system != kScalarLabel)
        throw ConfigError(w + ".system: unknown system '" + c.system + "'");
    c.epsilon = num_or(j, "epsilon", c.epsilon, w);
    c.drift = str_or(j, "drift", c.drift, w);
    if (j.contains("h") && !j.at("h").is_null()) {
        c.h = to_number(j.at("h"), w + ".h");
        if (!(*c.h > 0.0)) throw ConfigError(w + ".h: must be positive");
    }
    if (j.contains("chain")) c.chain = chain_from(object_at(j, "chain", w), w + ".chain");
    if (j.contains("disturbance")) {
        const std::string wd = w + ".disturbance";
        const auto& d = object_at(j, "disturbance", w);
        require_keys(d, {"axes", "clamp"}, wd);
        if (d.contains("axes")) {
            const auto& arr = array_at(d, "axes", wd);
            for (std::size_t i = 0; i < arr.size(); ++i) c.disturbance.push_back(axis_from(arr[i], wd + ".axes[" + std::to_string(i) + "]"));
        }
        c.clamp = bool_or(d, "clamp", true, wd);
    }
    if (j.contains("schedule")) c.schedule = schedule_from(j.at("schedule"), w + ".schedule");
    if (j.contains("initial_state")) c.initial_state = to_vec(j.at("initial_state"), w + ".initial_state");
    c.t_end = num_or(j, "t_end", c.t_end, w);
    if (!(c.t_end > 0.0)) throw ConfigError(w + ".t_end: must be positive");
    if (j.contains("integrator")) c.integrator = integrator_from(object_at(j, "integrator", w), w + ".integrator");
    c.seed = uint_or(j, "seed", c.seed, w);
    c.workers = uint_or(j, "workers", c.workers, w);
    if (j.contains("certify")) c.certify = certify_from(object_at(j, "certify", w), w + ".certify");
    if (j.contains("suite")) c.suite = suite_from(object_at(j, "suite", w), w + ".suite");
    return c;
}

json ScenarioConfig::to_json() const {
    json axes = json::array();
    for (const auto& a : disturbance) axes.push_back(axis_to(a));
    json j{{"system", system},
           {"epsilon", number(epsilon)},
           {"drift", drift},
           {"chain", chain_to(chain)},
           {"disturbance", {{"axes", axes}, {"clamp", clamp}}},
           {"schedule", schedule_to(schedule)},
           {"initial_state", vec(initial_state)},
           {"t_end", number(t_end)},
           {"integrator", integrator_to(integrator)},
           {"seed", seed},
           {"workers", workers},
           {"certify", certify_to(certify)},
           {"suite", suite_to(suite)}};
    j["h"] = h ? json(number(*h)) : json(nullptr);
    return j;
}

ScenarioConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    return ScenarioConfig::from_json(j);
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

DisturbanceSignal build_disturbance(const ScenarioConfig& cfg, const Box& box) {
    if (cfg.disturbance.empty()) return DisturbanceSignal(box, std::vector<AxisSignal>(box.dim(), axis::Constant{0.0}), cfg.clamp);
    if (cfg.disturbance.size() != box.dim())
        throw ConfigError("config.disturbance.axes: system has " + std::to_string(box.dim()) + " disturbance axes, got " +
                          std::to_string(cfg.disturbance.size()));
    std::vector<AxisSignal> axes;
    for (const auto& a : cfg.disturbance) {
        if (a.kind == "constant")
            axes.emplace_back(axis::Constant{a.value});
        else if (a.kind == "sinusoidal")
            axes.emplace_back(axis::Sinusoidal{a.amplitude, a.frequency, a.offset});
        else if (a.kind == "random")
            axes.emplace_back(axis::RandomPiecewise{a.mesh, a.low, a.high, stream_seed(cfg.seed, a.seed)});
        else
            axes.emplace_back(axis::Tabulated{a.times, a.values});
    }
    try {
        return DisturbanceSignal(box, std::move(axes), cfg.clamp);
    } catch (const Error& e) {
        throw ConfigError(std::string("config.disturbance: ") + e.what());
    }
}

SchedulePerturbation build_schedule(const ScheduleSpec& spec) {
    try {
        if (spec.kind == "abs_sin") return SchedulePerturbation::abs_sin();
        if (spec.kind == "constant") return SchedulePerturbation::constant(spec.value);
        if (spec.kind == "tabulated") return SchedulePerturbation(schedule::Tabulated{spec.times, spec.values});
        return SchedulePerturbation::zero();
    } catch (const Error& e) {
        throw ConfigError(std::string("config.schedule: ") + e.what());
    }
}

BuiltScenario build_scenario(const ScenarioConfig& cfg) {
    BuiltScenario out;
    out.registry = LyapunovRegistry::builtin();
    try {
        if (cfg.system == kJetEngineLabel) {
            out.jet = build_jet_engine(cfg.epsilon);
            const auto& jet = *out.jet;
            out.system = jet.system;
            out.theta = jet.theta;
            PiecewiseFeedback fb = jet.feedback();
            if (!cfg.chain.builtin) {
                std::vector<Region> omegas;
                for (const auto& r : cfg.chain.regions) omegas.push_back(Region::from_json(r, out.registry));
                fb = synthesize(jet.inner, jet.theta, jet.h_tilde, omegas, cfg.chain.controls, jet.r,
                                jet.system->control_set());
            }
            for (const auto& o : cfg.chain.overrides) {
                if (!jet.system->control_set().contains(o.v))
                    throw ConfigError("config.chain.control_overrides: v_" + std::to_string(o.index) + " outside U");
                fb = fb.with_chain(fb.chain().with_control(o.index, o.v));
            }
            out.feedback = fb;
        } else {
            out.scalar = build_scalar(cfg.drift, drift_by_name(cfg.drift));
            out.system = out.scalar->system;
            out.theta = out.scalar->theta;
            if (!cfg.chain.builtin || !cfg.chain.overrides.empty())
                throw ConfigError("config.chain: the scalar system uses its generated chain only");
            out.feedback = out.scalar->feedback();
        }
        if (cfg.h) out.feedback = out.feedback->with_period(*cfg.h);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    out.disturbance = build_disturbance(cfg, out.system->disturbance_box());
    out.schedule = build_schedule(cfg.schedule);
    return out;
}

}  // namespace chainstab
