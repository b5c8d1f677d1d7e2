#pragma once

// JSON helpers shared by region descriptors, configs and reports.
// Infinite values are written as the strings "inf" / "-inf".

#include <string>

#include "json.hpp"

#include "chainstab/dynamics.hpp"
#include "chainstab/vec.hpp"

namespace chainstab::json_util {

using json = nlohmann::json;

json number(double v);
double to_number(const json& j, const std::string& where);
json vec(const Vec& v);
Vec to_vec(const json& j, const std::string& where);
json box(const Box& b);
Box to_box(const json& j, const std::string& where);

/// Throws ConfigError naming `where` if `j` has a key outside `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);
const json& require(const json& j, const char* key, const std::string& where);

}  // namespace chainstab::json_util
