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

// Channel knowledge map: image-method ray tracing (line of sight plus single specular bounces
// off slab faces) and the per endpoint-pair path table built from it.

#include "irsplan/common.hpp"
#include "irsplan/scene.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <utility>

namespace irsplan {

enum class PathKind : std::uint8_t { LoS = 0, Reflected = 1 };

struct PathRecord {
  PathKind kind = PathKind::LoS;
  double length = 0.0;
  cd gain{0.0, 0.0};         // Friis amplitude x reflection coefficient, phase exp(-j 2 pi L / lambda)
  Vec3 aod = Vec3::Zero();   // unit direction leaving the transmitter
  Vec3 aoa = Vec3::Zero();   // unit direction from the receiver back along the arriving ray
  std::optional<Vec3> bounce;
  int obstacle = -1;
  int face = -1;

  bool operator==(const PathRecord&) const = default;
};

inline PathRecord reversed(PathRecord r) {
  std::swap(r.aod, r.aoa);
  return r;
}

namespace detail {

// Closed-box test for the segment a->b, ignoring a 1 nm neighbourhood of each endpoint. Grazing
// contact with a face, edge or corner counts as a hit.
inline bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len == 0.0) return false;
  const double eps = 1e-9 / len;
  double t0 = eps, t1 = 1.0 - eps;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (a[i] < box.min[i] || a[i] > box.max[i]) return false;
      continue;
    }
    double ta = (box.min[i] - a[i]) / d[i];
    double tb = (box.max[i] - a[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

inline bool segment_blocked(const Scene& scene, const Vec3& a, const Vec3& b) {
  for (const Obstacle& ob : scene.obstacles)
    if (segment_hits_box(a, b, ob.box)) return true;
  return false;
}

inline bool lex_less(const Vec3& a, const Vec3& b) {
  return std::tie(a[0], a[1], a[2]) < std::tie(b[0], b[1], b[2]);
}

inline cd free_space_gain(double length, double lambda) {
  const double amp = lambda / (4.0 * kPi * length);
  return std::polar(amp, -2.0 * kPi * std::fmod(length / lambda, 1.0));
}

inline std::vector<PathRecord> trace_ordered(const Scene& scene, const Vec3& tx, const Vec3& rx) {
  const double lambda = scene.wavelength();
  std::vector<PathRecord> out;
  if (!segment_blocked(scene, tx, rx)) {
    PathRecord r;
    r.kind = PathKind::LoS;
    r.length = (rx - tx).norm();
    r.gain = free_space_gain(r.length, lambda);
    r.aod = (rx - tx) / r.length;
    r.aoa = (tx - rx) / r.length;
    out.push_back(r);
  }
  constexpr double kFaceTol = 1e-9;
  for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
    const Obstacle& ob = scene.obstacles[o];
    for (int face = 0; face < 6; ++face) {
      const int axis = face / 2;
      const double sign = (face % 2 == 0) ? -1.0 : 1.0;
      const double plane = (face % 2 == 0) ? ob.box.min[axis] : ob.box.max[axis];
      const double htx = sign * (tx[axis] - plane);
      const double hrx = sign * (rx[axis] - plane);
      if (htx <= kFaceTol || hrx <= kFaceTol) continue;
      if (ob.reflect[face] == 0.0) continue;
      Vec3 image = rx;
      image[axis] = 2.0 * plane - rx[axis];
      const double frac = htx / (htx + hrx);
      Vec3 bounce = tx + frac * (image - tx);
      bounce[axis] = plane;
      bool on_face = true;
      for (int j = 0; j < 3; ++j) {
        if (j == axis) continue;
        if (!(bounce[j] > ob.box.min[j] + kFaceTol && bounce[j] < ob.box.max[j] - kFaceTol))
          on_face = false;
      }
      if (!on_face) continue;
      if (segment_blocked(scene, tx, bounce) || segment_blocked(scene, bounce, rx)) continue;
      PathRecord r;
      r.kind = PathKind::Reflected;
      r.length = (tx - image).norm();
      r.gain = ob.reflect[face] * free_space_gain(r.length, lambda);
      r.aod = (bounce - tx).normalized();
      r.aoa = (bounce - rx).normalized();
      r.bounce = bounce;
      r.obstacle = static_cast<int>(o);
      r.face = face;
      out.push_back(r);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PathRecord& a, const PathRecord& b) {
    return std::tie(a.length, a.kind, a.obstacle, a.face) <
           std::tie(b.length, b.kind, b.obstacle, b.face);
  });
  return out;
}

}  // namespace detail

// All LoS and single-bounce paths between two points, sorted by ascending length. The pair is
// traced in a canonical (lexicographic) orientation so trace_paths(a, b) and trace_paths(b, a)
// agree bit for bit up to the aod/aoa swap.
inline std::vector<PathRecord> trace_paths(const Scene& scene, const Vec3& tx, const Vec3& rx) {
  if ((tx - rx).norm() == 0.0) throw Error("trace_paths: tx and rx coincide", "ckm");
  for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
    const Box& b = scene.obstacles[o].box;
    if (b.interior_contains(tx) || b.interior_contains(rx))
      throw Error("trace_paths: endpoint inside obstacle " + std::to_string(o), "ckm");
  }
  if (detail::lex_less(rx, tx)) {
    auto paths = detail::trace_ordered(scene, rx, tx);
    for (auto& p : paths) p = reversed(p);
    return paths;
  }
  return detail::trace_ordered(scene, tx, rx);
}

enum class Role : std::uint8_t { BS = 0, Site = 1, SP = 2, CP = 3 };

struct EndpointId {
  Role role = Role::BS;
  std::uint32_t index = 0;
  auto operator<=>(const EndpointId&) const = default;
};

inline std::string to_string(const EndpointId& id) {
  switch (id.role) {
    case Role::BS: return "BS";
    case Role::Site: return "site" + std::to_string(id.index);
    case Role::SP: return "SP" + std::to_string(id.index);
    case Role::CP: return "CP" + std::to_string(id.index);
  }
  return "?";
}

class CkmError : public Error {
 public:
  explicit CkmError(const std::string& what) : Error(what, "ckm") {}
};

struct CKM {
  double frequency_hz = 0.0;
  std::uint64_t scene_hash = 0;
  std::map<EndpointId, Vec3> endpoints;
  // Stored in the orientation they were traced (BS/site as transmitter).
  std::map<std::pair<EndpointId, EndpointId>, std::vector<PathRecord>> table;

  bool contains(const EndpointId& a, const EndpointId& b) const {
    return table.count({a, b}) || table.count({b, a});
  }

  // Records for a -> b; reverse lookups return the stored records with aod/aoa swapped.
  std::vector<PathRecord> paths(const EndpointId& a, const EndpointId& b) const {
    if (auto it = table.find({a, b}); it != table.end()) return it->second;
    if (auto it = table.find({b, a}); it != table.end()) {
      std::vector<PathRecord> out = it->second;
      for (auto& r : out) r = reversed(r);
      return out;
    }
    throw CkmError("CKM has no entry for pair (" + to_string(a) + ", " + to_string(b) + ")");
  }

  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& [key, recs] : table) n += recs.size();
    return n;
  }

  bool operator==(const CKM&) const = default;
};

inline CKM build_ckm(const Scene& scene, const PointSet& points) {
  CKM ckm;
  ckm.frequency_hz = scene.frequency_hz;
  ckm.scene_hash = scene_hash(scene);
  const EndpointId bs{Role::BS, 0};
  ckm.endpoints[bs] = scene.bs.position;
  for (std::size_t k = 0; k < scene.sites.size(); ++k)
    ckm.endpoints[{Role::Site, static_cast<std::uint32_t>(k)}] = scene.sites[k].center;
  for (std::size_t p = 0; p < points.sensing.size(); ++p)
    ckm.endpoints[{Role::SP, static_cast<std::uint32_t>(p)}] = points.sensing[p];
  for (std::size_t q = 0; q < points.comm.size(); ++q)
    ckm.endpoints[{Role::CP, static_cast<std::uint32_t>(q)}] = points.comm[q];

  std::vector<std::pair<EndpointId, EndpointId>> pairs;
  const auto K = static_cast<std::uint32_t>(scene.sites.size());
  for (std::uint32_t k = 0; k < K; ++k) pairs.push_back({bs, {Role::Site, k}});
  for (std::uint32_t k = 0; k < K; ++k) {
    for (std::uint32_t p = 0; p < points.sensing.size(); ++p)
      pairs.push_back({{Role::Site, k}, {Role::SP, p}});
    for (std::uint32_t q = 0; q < points.comm.size(); ++q)
      pairs.push_back({{Role::Site, k}, {Role::CP, q}});
  }
  for (std::uint32_t q = 0; q < points.comm.size(); ++q) pairs.push_back({bs, {Role::CP, q}});

  std::vector<std::vector<PathRecord>> traced(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [a, b] = pairs[i];
    try {
      traced[i] = trace_paths(scene, ckm.endpoints.at(a), ckm.endpoints.at(b));
    } catch (const Error& e) {
      throw CkmError("tracing (" + to_string(a) + ", " + to_string(b) + "): " + e.what());
    }
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) ckm.table[pairs[i]] = std::move(traced[i]);
  return ckm;
}

// Binary container, little-endian, layout documented in docs/ckm_format.md.
namespace detail {

inline constexpr char kCkmMagic[8] = {'I', 'R', 'S', 'C', 'K', 'M', '\0', '\1'};
inline constexpr std::uint32_t kCkmVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_vec3(const Vec3& v) {
    for (int i = 0; i < 3; ++i) put(v[i]);
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw CkmError("CKM file is truncated or corrupt");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Vec3 get_vec3() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = get<double>();
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_ckm(const CKM& ckm) {
  detail::ByteWriter w;
  for (char c : detail::kCkmMagic) w.put(c);
  w.put(detail::kCkmVersion);
  w.put(ckm.frequency_hz);
  w.put(ckm.scene_hash);
  w.put(static_cast<std::uint32_t>(ckm.endpoints.size()));
  for (const auto& [id, pos] : ckm.endpoints) {
    w.put(static_cast<std::uint8_t>(id.role));
    w.put(id.index);
    w.put_vec3(pos);
  }
  w.put(static_cast<std::uint32_t>(ckm.table.size()));
  for (const auto& [key, recs] : ckm.table) {
    for (const EndpointId& id : {key.first, key.second}) {
      w.put(static_cast<std::uint8_t>(id.role));
      w.put(id.index);
    }
    w.put(static_cast<std::uint32_t>(recs.size()));
    for (const PathRecord& r : recs) {
      w.put(static_cast<std::uint8_t>(r.kind));
      w.put(r.length);
      w.put(r.gain.real());
      w.put(r.gain.imag());
      w.put_vec3(r.aod);
      w.put_vec3(r.aoa);
      w.put(static_cast<std::int32_t>(r.obstacle));
      w.put(static_cast<std::int32_t>(r.face));
      w.put(static_cast<std::uint8_t>(r.bounce ? 1 : 0));
      if (r.bounce) w.put_vec3(*r.bounce);
    }
  }
  Fnv1a h;
  h.update(w.bytes().data(), w.bytes().size());
  w.put(h.digest());
  return std::move(w.bytes());
}

inline CKM decode_ckm(std::string_view data) {
  if (data.size() < sizeof(detail::kCkmMagic) + 8 ||
      std::memcmp(data.data(), detail::kCkmMagic, sizeof(detail::kCkmMagic)) != 0)
    throw CkmError("not a CKM file (bad magic)");
  const std::string_view payload = data.substr(0, data.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + payload.size(), 8);
  Fnv1a h;
  h.update(payload.data(), payload.size());
  if (h.digest() != stored) throw CkmError("CKM file is corrupt (checksum mismatch)");

  detail::ByteReader r(payload);
  for (std::size_t i = 0; i < sizeof(detail::kCkmMagic); ++i) r.get<char>();
  if (const auto v = r.get<std::uint32_t>(); v != detail::kCkmVersion)
    throw CkmError("unsupported CKM version " + std::to_string(v));
  CKM ckm;
  ckm.frequency_hz = r.get<double>();
  ckm.scene_hash = r.get<std::uint64_t>();
  auto read_id = [&] {
    const auto role = r.get<std::uint8_t>();
    if (role > 3) throw CkmError("CKM file is corrupt (bad endpoint role)");
    return EndpointId{static_cast<Role>(role), r.get<std::uint32_t>()};
  };
  const auto n_end = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_end; ++i) {
    const EndpointId id = read_id();
    ckm.endpoints[id] = r.get_vec3();
  }
  const auto n_pairs = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_pairs; ++i) {
    const EndpointId a = read_id();
    const EndpointId b = read_id();
    const auto n_rec = r.get<std::uint32_t>();
    std::vector<PathRecord> recs;
    recs.reserve(n_rec);
    for (std::uint32_t j = 0; j < n_rec; ++j) {
      PathRecord rec;
      const auto kind = r.get<std::uint8_t>();
      if (kind > 1) throw CkmError("CKM file is corrupt (bad path kind)");
      rec.kind = static_cast<PathKind>(kind);
      rec.length = r.get<double>();
      const double re = r.get<double>();
      const double im = r.get<double>();
      rec.gain = cd(re, im);
      rec.aod = r.get_vec3();
      rec.aoa = r.get_vec3();
      rec.obstacle = r.get<std::int32_t>();
      rec.face = r.get<std::int32_t>();
      if (r.get<std::uint8_t>()) rec.bounce = r.get_vec3();
      recs.push_back(rec);
    }
    ckm.table[{a, b}] = std::move(recs);
  }
  if (r.pos() != payload.size()) throw CkmError("CKM file is corrupt (trailing bytes)");
  return ckm;
}

inline void save_ckm(const CKM& ckm, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CkmError("cannot open " + path + " for writing");
  const std::string bytes = encode_ckm(ckm);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CkmError("failed writing " + path);
}

// Loads a CKM and, when expected_scene_hash is given, rejects maps built from another scene.
inline CKM load_ckm(const std::string& path, std::optional<std::uint64_t> expected_scene_hash = {}) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CkmError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CKM ckm = decode_ckm(bytes);
  if (expected_scene_hash && *expected_scene_hash != ckm.scene_hash)
    throw CkmError("CKM scene hash mismatch: file was built for a different scene");
  return ckm;
}

}  // namespace irsplan
