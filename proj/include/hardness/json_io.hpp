#pragma once

// JSON forms of tables, families and variance reports.
//
// family/v1: {"schema": "family/v1", "dimension": n, "support": [point indices],
//             "members": [{"f": [+-1 ...], "D": [p ...]}]}
// "support" may be omitted for the full cube; f and D are support-indexed.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardness/family.hpp"
#include "hardness/variance.hpp"

namespace hardness {

using json = nlohmann::json;

/// Rejects keys outside `allowed` and non-object documents.
inline void require_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!j.is_object())
    throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed)
      ok = ok || key == a;
    if (!ok)
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const json& j, std::string_view key, std::string_view where) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + std::string(key) + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, std::string_view key, T fallback, std::string_view where) {
  if (!j.contains(std::string(key)))
    return fallback;
  return get_as<T>(j, key, where);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline json family_to_json(const LabeledFamily& a) {
  json j;
  j["schema"] = "family/v1";
  j["dimension"] = a.dimension();
  json support = json::array();
  for (const Point& p : a.support())
    support.push_back(p.bits);
  j["support"] = std::move(support);
  json members = json::array();
  for (const Member& m : a.members()) {
    json f = json::array();
    for (auto v : m.f)
      f.push_back(static_cast<int>(v));
    members.push_back({{"f", std::move(f)}, {"D", m.D}});
  }
  j["members"] = std::move(members);
  return j;
}

inline LabeledFamily family_from_json(const json& j) {
  require_keys(j, {"schema", "dimension", "support", "members"}, "family manifest");
  if (get_as<std::string>(j, "schema", "family manifest") != "family/v1")
    throw ConfigError("family manifest: schema must be 'family/v1'");
  const int n = get_as<int>(j, "dimension", "family manifest");
  check_dimension(n);
  std::vector<Point> support;
  if (j.contains("support")) {
    for (auto idx : get_as<std::vector<std::int64_t>>(j, "support", "family manifest")) {
      if (idx < 0 || static_cast<std::uint64_t>(idx) >= cube_size(n))
        throw DimensionError("family manifest: support index out of range");
      support.push_back(Point{n, static_cast<std::uint32_t>(idx)});
    }
  } else {
    support = LabeledFamily::cube(n);
  }
  if (!j.contains("members") || !j["members"].is_array())
    throw ConfigError("family manifest: 'members' must be an array");
  std::vector<Member> members;
  for (const json& m : j["members"]) {
    require_keys(m, {"f", "D"}, "family manifest member");
    Member out;
    for (int v : get_as<std::vector<int>>(m, "f", "family manifest member")) {
      if (v != 1 && v != -1)
        throw ParamError("family manifest: f values must be +1 or -1");
      out.f.push_back(static_cast<std::int8_t>(v));
    }
    out.D = get_as<std::vector<double>>(m, "D", "family manifest member");
    if (out.f.size() != support.size() || out.D.size() != support.size())
      throw DimensionError("family manifest: member tables must match the support length");
    members.push_back(std::move(out));
  }
  return LabeledFamily(n, std::move(support), std::move(members));
}

inline json variance_report_to_json(const VarianceReport& r) {
  json j;
  j["exact"] = r.exact ? json(*r.exact) : json(nullptr);
  j["upper_spectral"] = r.upper_spectral;
  j["lower_member"] = r.lower_member;
  j["argmax_phi"] = r.argmax_phi ? json(*r.argmax_phi) : json(nullptr);
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

} // namespace hardness
