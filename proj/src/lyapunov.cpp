#include "chainstab/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "chainstab/errors.hpp"
#include "chainstab/random.hpp"

namespace chainstab {

double gradient_consistency(const LyapunovData& v, std::size_t dim, double radius, std::size_t probes,
                            std::uint64_t seed) {
    Rng rng(seed);
    Vec x(dim), g(dim), xp(dim), xm(dim);
    double worst = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
        for (auto& xi : x) xi = rng.uniform(-radius, radius);
        v.gradient(x, g);
        double diff2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
            xp = x;
            xm = x;
            xp[i] += step;
            xm[i] -= step;
            const double fd = (v.value(xp) - v.value(xm)) / (xp[i] - xm[i]);
            diff2 += (fd - g[i]) * (fd - g[i]);
        }
        const double allowed = std::max(1e-6, 1e-4 * norm(g));
        worst = std::max(worst, std::sqrt(diff2) / allowed);
    }
    return worst;
}

void LyapunovRegistry::add(LyapunovPtr v) {
    if (!v || v->label.empty()) throw InvalidArgument("registered functions need a label");
    entries_[v->label] = std::move(v);
}

LyapunovPtr LyapunovRegistry::find(const std::string& label) const {
    auto it = entries_.find(label);
    return it == entries_.end() ? nullptr : it->second;
}

const LyapunovRegistry& LyapunovRegistry::builtin() {
    static const LyapunovRegistry registry = [] {
        LyapunovRegistry r;
        // V(x) = x1^2/2 + (x2 + 5 x1)^2/2
        r.add(std::make_shared<LyapunovData>(LyapunovData{
            "jet_engine_quadratic",
            [](ConstSpan x) {
                const double w = x[1] + 5.0 * x[0];
                return 0.5 * x[0] * x[0] + 0.5 * w * w;
            },
            [](ConstSpan x, MutSpan g) {
                const double w = x[1] + 5.0 * x[0];
                g[0] = x[0] + 5.0 * w;
                g[1] = w;
            }}));
        r.add(std::make_shared<LyapunovData>(LyapunovData{
            "x1_squared", [](ConstSpan x) { return x[0] * x[0]; },
            [](ConstSpan x, MutSpan g) {
                std::fill(g.begin(), g.end(), 0.0);
                g[0] = 2.0 * x[0];
            }}));
        r.add(std::make_shared<LyapunovData>(LyapunovData{
            "x1", [](ConstSpan x) { return x[0]; },
            [](ConstSpan, MutSpan g) {
                std::fill(g.begin(), g.end(), 0.0);
                g[0] = 1.0;
            }}));
        r.add(std::make_shared<LyapunovData>(LyapunovData{
            "half_norm_squared",
            [](ConstSpan x) {
                const double n = norm(x);
                return 0.5 * n * n;
            },
            [](ConstSpan x, MutSpan g) { std::copy(x.begin(), x.end(), g.begin()); }}));
        return r;
    }();
    return registry;
}

}  // namespace chainstab
