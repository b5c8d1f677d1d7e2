#include "chainstab/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainstab/errors.hpp"

namespace chainstab::json_util {

json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

double to_number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ConfigError(where + ": expected a number");
}

json vec(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

Vec to_vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vec v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(to_number(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

json box(const Box& b) { return json{{"lo", vec(b.lo)}, {"hi", vec(b.hi)}}; }

Box to_box(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object with lo/hi");
    require_keys(j, {"lo", "hi"}, where);
    Box b{to_vec(require(j, "lo", where), where + ".lo"), to_vec(require(j, "hi", where), where + ".hi")};
    if (b.lo.size() != b.hi.size()) throw ConfigError(where + ": lo and hi differ in length");
    for (std::size_t i = 0; i < b.lo.size(); ++i)
        if (b.lo[i] > b.hi[i]) throw ConfigError(where + ": lo > hi on axis " + std::to_string(i));
    return b;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
    return j.at(key);
}

}  // namespace chainstab::json_util
