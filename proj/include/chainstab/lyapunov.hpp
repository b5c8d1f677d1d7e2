#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "chainstab/vec.hpp"

namespace chainstab {

/// A scalar function V with its gradient.
struct LyapunovData {
    std::string label;
    std::function<double(ConstSpan)> value;
    std::function<void(ConstSpan, MutSpan)> gradient;

    double operator()(ConstSpan x) const { return value(x); }
    Vec grad(ConstSpan x) const {
        Vec g(x.size());
        gradient(x, g);
        return g;
    }
};

using LyapunovPtr = std::shared_ptr<const LyapunovData>;

/// Worst mismatch between the analytic gradient and central differences,
/// measured as |g - g_fd| / max(1e-6, 1e-4 |g|) over random probes in
/// [-radius, radius]^n. Values <= 1 mean the gradient is consistent.
double gradient_consistency(const LyapunovData& v, std::size_t dim, double radius, std::size_t probes,
                            std::uint64_t seed);

/// Named functions that region descriptors can refer to when serialized.
class LyapunovRegistry {
public:
    void add(LyapunovPtr v);
    LyapunovPtr find(const std::string& label) const;
    const std::map<std::string, LyapunovPtr>& entries() const { return entries_; }

    /// Registry with every function the built-in scenarios use.
    static const LyapunovRegistry& builtin();

private:
    std::map<std::string, LyapunovPtr> entries_;
};

}  // namespace chainstab
