#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace chainstab {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

inline double norm(ConstSpan x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double dot(ConstSpan a, ConstSpan b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double distance(ConstSpan a, ConstSpan b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline bool all_finite(ConstSpan x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace chainstab
