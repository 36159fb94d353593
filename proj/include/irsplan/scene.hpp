// SPDX-License-Identifier: Apache-2.0
//
// irsplan: environment-aware IRS deployment planning for joint sensing and communication coverage
// Copyright (C) 2026 The irsplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

/*
Scenario geometry.

A scene is a set of axis-aligned rectangular slabs (walls, floors, furniture) in a 3-D world, a
base station with a uniform linear array, K candidate IRS sites (each a uniform linear array of
M elements along its element axis), and two axis-aligned regions holding the sensing points
(SPs) and communication points (CPs).

Scenario documents are JSON:

  {
    "frequency_hz": 3.5e9,
    "bs":  {"position": [x,y,z], "axis": [ax,ay,az], "antennas": 4, "spacing_wavelengths": 0.5},
    "irs": {"elements": 8, "spacing_wavelengths": 0.5},
    "sites": [{"center": [...], "normal": [...], "axis": [...]}, ...],
    "obstacles": [{"min": [...], "max": [...], "reflect": 0.6 | [x-,x+,y-,y+,z-,z+]}, ...],
    "sensing_region": {"min": [...], "max": [...]},
    "comm_region":    {"min": [...], "max": [...]},
    "points": {"mode": "grid" | "random" | "explicit", "P": 10, "Q": 10, "seed": 1,
               "sensing": [[...], ...], "comm": [[...], ...]}   // lists only for "explicit"
  }

"irs" and the "antennas"/"spacing_wavelengths" members are optional (defaults 8 elements,
4 antennas, half-wavelength spacing).
*/

#include "irsplan/common.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <random>
#include <sstream>

namespace irsplan {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  // Strict interior; boundary points are outside.
  bool interior_contains(const Vec3& p, double tol = 1e-12) const {
    return (p.array() > min.array() + tol).all() && (p.array() < max.array() - tol).all();
  }
  bool operator==(const Box&) const = default;
};

// Face numbering: 2*axis + side, side 0 is the min face (outward normal -e_axis) and side 1 the
// max face (+e_axis).
struct Obstacle {
  Box box;
  std::array<double, 6> reflect{0.6, 0.6, 0.6, 0.6, 0.6, 0.6};
  bool operator==(const Obstacle&) const = default;
};

struct Site {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  Vec3 axis = Vec3::UnitY();
  bool operator==(const Site&) const = default;
};

struct BaseStation {
  Vec3 position = Vec3::Zero();
  Vec3 axis = Vec3::UnitY();
  int antennas = 4;
  double spacing_wavelengths = 0.5;
  bool operator==(const BaseStation&) const = default;
};

struct Scene {
  BaseStation bs;
  std::vector<Site> sites;
  std::vector<Obstacle> obstacles;
  Box sensing_region;
  Box comm_region;
  double frequency_hz = 3.5e9;
  int irs_elements = 8;
  double irs_spacing_wavelengths = 0.5;

  int num_sites() const { return static_cast<int>(sites.size()); }
  double wavelength() const { return kSpeedOfLight / frequency_hz; }
  bool operator==(const Scene&) const = default;
};

enum class SamplingMode { grid, random, explicit_list };

struct PointSpec {
  SamplingMode mode = SamplingMode::grid;
  int P = 1;
  int Q = 1;
  std::uint64_t seed = 0;
  bool operator==(const PointSpec&) const = default;
};

struct PointSet {
  std::vector<Vec3> sensing;
  std::vector<Vec3> comm;
  int P() const { return static_cast<int>(sensing.size()); }
  int Q() const { return static_cast<int>(comm.size()); }
  bool operator==(const PointSet&) const = default;
};

struct Scenario {
  Scene scene;
  PointSpec spec;
  PointSet points;
};

// Raised for malformed documents (with a line/field locus) and for invariant violations (with
// every failed check listed).
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& what, std::vector<std::string> issues = {})
      : Error(compose(what, issues), "scene"), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string compose(const std::string& what, const std::vector<std::string>& issues) {
    std::string s = what;
    for (const auto& i : issues) s += "\n  - " + i;
    return s;
  }
  std::vector<std::string> issues_;
};

// Regular grid: an nx-by-ny lattice of cell centres in the x-y plane of the box (z at the box
// centre), nx chosen from the x/y aspect ratio, filled row by row and truncated to `count`.
// Random: independent uniform draws over the full box from a seeded Mersenne twister.
inline std::vector<Vec3> sample_points(const Box& region, int count, SamplingMode mode,
                                       std::uint64_t seed = 0) {
  if (count <= 0) throw ScenarioError("sample_points: count must be positive");
  if ((region.max.array() < region.min.array()).any())
    throw ScenarioError("sample_points: region max below min");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const Vec3 ext = region.extent();
  if (mode == SamplingMode::random) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
      Vec3 p;
      for (int a = 0; a < 3; ++a) p[a] = region.min[a] + u(rng) * ext[a];
      pts.push_back(region.min.cwiseMax(p).cwiseMin(region.max));
    }
    return pts;
  }
  int nx = 1;
  if (ext.y() <= 0.0)
    nx = count;
  else if (ext.x() > 0.0)
    nx = std::clamp(static_cast<int>(std::lround(std::sqrt(count * ext.x() / ext.y()))), 1, count);
  const int ny = (count + nx - 1) / nx;
  for (int j = 0; j < ny && static_cast<int>(pts.size()) < count; ++j) {
    for (int i = 0; i < nx && static_cast<int>(pts.size()) < count; ++i) {
      Vec3 p = region.center();
      p.x() = region.min.x() + (i + 0.5) / nx * ext.x();
      p.y() = region.min.y() + (j + 0.5) / ny * ext.y();
      pts.push_back(p);
    }
  }
  return pts;
}

// Returns every violated invariant; empty when the scenario is valid.
inline std::vector<std::string> check_scenario(const Scene& s, const PointSet& pts) {
  std::vector<std::string> bad;
  auto vec = [](const Vec3& v) {
    std::ostringstream os;
    os << "[" << v.x() << ", " << v.y() << ", " << v.z() << "]";
    return os.str();
  };
  if (!(s.frequency_hz > 0.0)) bad.push_back("frequency_hz must be positive");
  if (s.bs.antennas < 1) bad.push_back("bs.antennas must be >= 1");
  if (!is_unit(s.bs.axis)) bad.push_back("bs.axis is not unit length");
  if (s.irs_elements < 1) bad.push_back("irs.elements must be >= 1");
  if (s.sites.empty()) bad.push_back("at least one candidate site is required");
  for (std::size_t k = 0; k < s.sites.size(); ++k) {
    const Site& site = s.sites[k];
    const std::string tag = "sites[" + std::to_string(k) + "]";
    if (!is_unit(site.normal)) bad.push_back(tag + ".normal is not unit length");
    if (!is_unit(site.axis)) bad.push_back(tag + ".axis is not unit length");
    if (std::abs(site.normal.dot(site.axis)) > 1e-9)
      bad.push_back(tag + ": normal and axis are not orthogonal");
  }
  for (std::size_t o = 0; o < s.obstacles.size(); ++o) {
    const Obstacle& ob = s.obstacles[o];
    const std::string tag = "obstacles[" + std::to_string(o) + "]";
    if ((ob.box.max.array() <= ob.box.min.array()).any())
      bad.push_back(tag + " must have strictly positive extent in every axis");
    for (double r : ob.reflect)
      if (!(r >= 0.0 && r <= 1.0)) {
        bad.push_back(tag + ".reflect must lie in [0, 1]");
        break;
      }
    if (ob.box.interior_contains(s.bs.position))
      bad.push_back("bs " + vec(s.bs.position) + " lies inside " + tag);
    for (std::size_t k = 0; k < s.sites.size(); ++k)
      if (ob.box.interior_contains(s.sites[k].center))
        bad.push_back("sites[" + std::to_string(k) + "] " + vec(s.sites[k].center) +
                      " lies inside " + tag);
  }
  for (const Box* r : {&s.sensing_region, &s.comm_region})
    if ((r->max.array() < r->min.array()).any())
      bad.push_back(std::string(r == &s.sensing_region ? "sensing" : "comm") +
                    "_region max below min");
  if (pts.sensing.empty()) bad.push_back("P must be >= 1");
  if (pts.comm.empty()) bad.push_back("Q must be >= 1");
  for (std::size_t p = 0; p < pts.sensing.size(); ++p)
    if (!s.sensing_region.contains(pts.sensing[p], 1e-12))
      bad.push_back("sensing point " + std::to_string(p) + " outside sensing_region");
  for (std::size_t q = 0; q < pts.comm.size(); ++q)
    if (!s.comm_region.contains(pts.comm[q], 1e-12))
      bad.push_back("comm point " + std::to_string(q) + " outside comm_region");
  return bad;
}

namespace detail {

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const nlohmann::json& member(const nlohmann::json& j, const std::string& key,
                                    const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ScenarioError("scenario field '" + path + key + "' is missing");
  return j.at(key);
}

inline Vec3 read_vec3(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw ScenarioError("scenario field '" + path + "' must be a 3-element array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number())
      throw ScenarioError("scenario field '" + path + "[" + std::to_string(i) +
                          "]' must be a number");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline double read_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError("scenario field '" + path + "' must be a number");
  return j.get<double>();
}

inline int read_int(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw ScenarioError("scenario field '" + path + "' must be an integer");
  return j.get<int>();
}

inline Box read_box(const nlohmann::json& j, const std::string& path) {
  return Box{read_vec3(member(j, "min", path + "."), path + ".min"),
             read_vec3(member(j, "max", path + "."), path + ".max")};
}

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
inline nlohmann::json box_json(const Box& b) {
  return {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}};
}

inline const char* mode_name(SamplingMode m) {
  switch (m) {
    case SamplingMode::grid: return "grid";
    case SamplingMode::random: return "random";
    case SamplingMode::explicit_list: return "explicit";
  }
  return "grid";
}

}  // namespace detail

inline PointSet generate_points(const Scene& scene, const PointSpec& spec) {
  if (spec.mode == SamplingMode::explicit_list)
    throw ScenarioError("explicit point lists cannot be regenerated from a PointSpec");
  PointSet pts;
  pts.sensing = sample_points(scene.sensing_region, spec.P, spec.mode, spec.seed);
  // Distinct stream for the comm region so overlapping regions do not produce identical draws.
  pts.comm = sample_points(scene.comm_region, spec.Q, spec.mode, spec.seed ^ 0x9e3779b97f4a7c15ULL);
  return pts;
}

inline Scenario load_scenario(std::string_view text) {
  using nlohmann::json;
  using namespace detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario parse error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                        ": " + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario document must be a JSON object");

  Scenario out;
  Scene& s = out.scene;
  s.frequency_hz = read_number(member(doc, "frequency_hz", ""), "frequency_hz");

  const json& bs = member(doc, "bs", "");
  s.bs.position = read_vec3(member(bs, "position", "bs."), "bs.position");
  if (bs.contains("axis")) s.bs.axis = read_vec3(bs["axis"], "bs.axis");
  if (bs.contains("antennas")) s.bs.antennas = read_int(bs["antennas"], "bs.antennas");
  if (bs.contains("spacing_wavelengths"))
    s.bs.spacing_wavelengths = read_number(bs["spacing_wavelengths"], "bs.spacing_wavelengths");

  if (doc.contains("irs")) {
    const json& irs = doc["irs"];
    if (irs.contains("elements")) s.irs_elements = read_int(irs["elements"], "irs.elements");
    if (irs.contains("spacing_wavelengths"))
      s.irs_spacing_wavelengths =
          read_number(irs["spacing_wavelengths"], "irs.spacing_wavelengths");
  }

  const json& sites = member(doc, "sites", "");
  if (!sites.is_array()) throw ScenarioError("scenario field 'sites' must be an array");
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const std::string p = "sites[" + std::to_string(k) + "]";
    Site site;
    site.center = read_vec3(member(sites[k], "center", p + "."), p + ".center");
    site.normal = read_vec3(member(sites[k], "normal", p + "."), p + ".normal");
    site.axis = read_vec3(member(sites[k], "axis", p + "."), p + ".axis");
    s.sites.push_back(site);
  }

  const json& obstacles = member(doc, "obstacles", "");
  if (!obstacles.is_array()) throw ScenarioError("scenario field 'obstacles' must be an array");
  for (std::size_t o = 0; o < obstacles.size(); ++o) {
    const std::string p = "obstacles[" + std::to_string(o) + "]";
    Obstacle ob;
    ob.box = read_box(obstacles[o], p);
    if (obstacles[o].contains("reflect")) {
      const json& r = obstacles[o]["reflect"];
      if (r.is_number()) {
        ob.reflect.fill(r.get<double>());
      } else if (r.is_array() && r.size() == 6) {
        for (int f = 0; f < 6; ++f)
          ob.reflect[f] = read_number(r[f], p + ".reflect[" + std::to_string(f) + "]");
      } else {
        throw ScenarioError("scenario field '" + p + ".reflect' must be a number or 6-array");
      }
    }
    s.obstacles.push_back(ob);
  }

  s.sensing_region = read_box(member(doc, "sensing_region", ""), "sensing_region");
  s.comm_region = read_box(member(doc, "comm_region", ""), "comm_region");

  const json& pts = member(doc, "points", "");
  const json& mode = member(pts, "mode", "points.");
  if (!mode.is_string()) throw ScenarioError("scenario field 'points.mode' must be a string");
  const std::string m = mode.get<std::string>();
  if (m == "grid")
    out.spec.mode = SamplingMode::grid;
  else if (m == "random")
    out.spec.mode = SamplingMode::random;
  else if (m == "explicit")
    out.spec.mode = SamplingMode::explicit_list;
  else
    throw ScenarioError("scenario field 'points.mode' must be grid, random or explicit");
  if (pts.contains("seed")) {
    if (!pts["seed"].is_number_unsigned() && !pts["seed"].is_number_integer())
      throw ScenarioError("scenario field 'points.seed' must be an integer");
    out.spec.seed = pts["seed"].get<std::uint64_t>();
  }

  if (out.spec.mode == SamplingMode::explicit_list) {
    auto read_list = [&](const char* key) {
      std::vector<Vec3> v;
      const json& arr = member(pts, key, "points.");
      if (!arr.is_array())
        throw ScenarioError(std::string("scenario field 'points.") + key + "' must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i)
        v.push_back(read_vec3(arr[i], std::string("points.") + key + "[" + std::to_string(i) + "]"));
      return v;
    };
    out.points.sensing = read_list("sensing");
    out.points.comm = read_list("comm");
    out.spec.P = out.points.P();
    out.spec.Q = out.points.Q();
  } else {
    out.spec.P = read_int(member(pts, "P", "points."), "points.P");
    out.spec.Q = read_int(member(pts, "Q", "points."), "points.Q");
    if (out.spec.P < 1 || out.spec.Q < 1) {
      std::vector<std::string> issues;
      if (out.spec.P < 1) issues.push_back("P must be >= 1");
      if (out.spec.Q < 1) issues.push_back("Q must be >= 1");
      throw ScenarioError("scenario violates invariants:", issues);
    }
    if ((s.sensing_region.max.array() >= s.sensing_region.min.array()).all() &&
        (s.comm_region.max.array() >= s.comm_region.min.array()).all())
      out.points = generate_points(s, out.spec);
  }

  if (auto issues = check_scenario(s, out.points); !issues.empty())
    throw ScenarioError("scenario violates invariants:", std::move(issues));
  return out;
}

inline nlohmann::json scenario_json(const Scenario& sc) {
  using nlohmann::json;
  using namespace detail;
  const Scene& s = sc.scene;
  json doc;
  doc["frequency_hz"] = s.frequency_hz;
  doc["bs"] = {{"position", vec_json(s.bs.position)},
               {"axis", vec_json(s.bs.axis)},
               {"antennas", s.bs.antennas},
               {"spacing_wavelengths", s.bs.spacing_wavelengths}};
  doc["irs"] = {{"elements", s.irs_elements}, {"spacing_wavelengths", s.irs_spacing_wavelengths}};
  doc["sites"] = json::array();
  for (const Site& site : s.sites)
    doc["sites"].push_back({{"center", vec_json(site.center)},
                            {"normal", vec_json(site.normal)},
                            {"axis", vec_json(site.axis)}});
  doc["obstacles"] = json::array();
  for (const Obstacle& ob : s.obstacles) {
    json o = box_json(ob.box);
    const bool uniform = std::all_of(ob.reflect.begin(), ob.reflect.end(),
                                     [&](double r) { return r == ob.reflect[0]; });
    o["reflect"] = uniform ? json(ob.reflect[0]) : json(ob.reflect);
    doc["obstacles"].push_back(o);
  }
  doc["sensing_region"] = box_json(s.sensing_region);
  doc["comm_region"] = box_json(s.comm_region);
  json pts = {{"mode", mode_name(sc.spec.mode)}, {"seed", sc.spec.seed}};
  if (sc.spec.mode == SamplingMode::explicit_list) {
    pts["sensing"] = json::array();
    for (const Vec3& p : sc.points.sensing) pts["sensing"].push_back(vec_json(p));
    pts["comm"] = json::array();
    for (const Vec3& p : sc.points.comm) pts["comm"].push_back(vec_json(p));
  } else {
    pts["P"] = sc.spec.P;
    pts["Q"] = sc.spec.Q;
  }
  doc["points"] = pts;
  return doc;
}

inline std::string serialize_scenario(const Scenario& sc) { return scenario_json(sc).dump(2); }

// Fingerprint of everything that influences propagation: geometry, materials, arrays and
// frequency. Points are not part of it; the CKM records them in its endpoint registry.
inline std::uint64_t scene_hash(const Scene& s) {
  Scenario tmp{s, PointSpec{SamplingMode::grid, 1, 1, 0}, {}};
  nlohmann::json doc = scenario_json(tmp);
  doc.erase("points");
  doc.erase("sensing_region");
  doc.erase("comm_region");
  Fnv1a h;
  h.update(doc.dump());
  return h.digest();
}

}  // namespace irsplan
