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

// Narrowband channels from CKM path records.
//
// Conventions: the BS-to-IRS channel of site k is an M x Nt matrix; the point channels are stored
// as column vectors whose conjugate transpose is the physical row channel, so the signal at CP q
// reads (sum_k beta_k hkq^H Theta_k H0k + h0q^H) x. Sensing channels keep only the LoS path.

#include "irsplan/ckm.hpp"

#include <nlohmann/json.hpp>

namespace irsplan {

struct ArrayGeometry {
  Vec3 axis = Vec3::UnitX();
  int elements = 1;
  double spacing_wavelengths = 0.5;
};

inline ArrayGeometry single_antenna() { return {}; }

// Element i is exp(j 2 pi spacing i <direction, axis>), referenced to element 0.
inline CVec array_response(const Vec3& direction, const Vec3& axis, int n_elements,
                           double spacing_wavelengths) {
  if (n_elements < 1) throw Error("array_response: element count must be >= 1", "channel");
  if (!is_unit(direction) || !is_unit(axis))
    throw Error("array_response: direction and axis must be unit vectors", "channel");
  const double step = 2.0 * kPi * spacing_wavelengths * direction.dot(axis);
  CVec a(n_elements);
  for (int i = 0; i < n_elements; ++i) a[i] = std::polar(1.0, step * i);
  return a;
}

inline CVec array_response(const Vec3& direction, const ArrayGeometry& g) {
  if (g.elements == 1) {
    if (!is_unit(direction))
      throw Error("array_response: direction must be a unit vector", "channel");
    return CVec::Ones(1);
  }
  return array_response(direction, g.axis, g.elements, g.spacing_wavelengths);
}

// rx_dim x tx_dim matrix sum_r gain_r a_rx(aoa_r) a_tx(aod_r)^H.
inline CMat synthesize_channel(std::span<const PathRecord> records, const ArrayGeometry& tx,
                               const ArrayGeometry& rx) {
  CMat H = CMat::Zero(rx.elements, tx.elements);
  for (const PathRecord& r : records)
    H.noalias() += r.gain * array_response(r.aoa, rx) * array_response(r.aod, tx).adjoint();
  return H;
}

struct ChannelSet {
  int K = 0, M = 0, Nt = 0, P = 0, Q = 0;
  std::vector<CMat> H0;                // [k], M x Nt
  std::vector<CVec> h0;                // [q], Nt
  std::vector<std::vector<CVec>> h;    // [k][q], M
  std::vector<std::vector<CVec>> g;    // [k][p], M (LoS only)

  bool operator==(const ChannelSet& o) const {
    auto eq = [](const auto& a, const auto& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
      return true;
    };
    if (std::tie(K, M, Nt, P, Q) != std::tie(o.K, o.M, o.Nt, o.P, o.Q)) return false;
    if (!eq(H0, o.H0) || !eq(h0, o.h0)) return false;
    for (int k = 0; k < K; ++k)
      if (!eq(h[k], o.h[k]) || !eq(g[k], o.g[k])) return false;
    return true;
  }
};

// Allocates a zero-filled set of the given dimensions.
inline ChannelSet zero_channels(int K, int M, int Nt, int P, int Q) {
  ChannelSet ch;
  ch.K = K, ch.M = M, ch.Nt = Nt, ch.P = P, ch.Q = Q;
  ch.H0.assign(K, CMat::Zero(M, Nt));
  ch.h0.assign(Q, CVec::Zero(Nt));
  ch.h.assign(K, std::vector<CVec>(Q, CVec::Zero(M)));
  ch.g.assign(K, std::vector<CVec>(P, CVec::Zero(M)));
  return ch;
}

inline ArrayGeometry bs_geometry(const Scene& s) {
  return {s.bs.axis, s.bs.antennas, s.bs.spacing_wavelengths};
}
inline ArrayGeometry site_geometry(const Scene& s, int k) {
  return {s.sites[k].axis, s.irs_elements, s.irs_spacing_wavelengths};
}

inline ChannelSet assemble_channel_set(const CKM& ckm, const Scene& scene, const PointSet& pts) {
  const int K = scene.num_sites(), M = scene.irs_elements, Nt = scene.bs.antennas;
  ChannelSet ch = zero_channels(K, M, Nt, pts.P(), pts.Q());
  const EndpointId bs{Role::BS, 0};
  const ArrayGeometry bsg = bs_geometry(scene);
  const ArrayGeometry pt = single_antenna();
  auto row_to_vec = [](const CMat& row) -> CVec { return row.adjoint(); };
  for (int k = 0; k < K; ++k) {
    const EndpointId site{Role::Site, static_cast<std::uint32_t>(k)};
    const ArrayGeometry sg = site_geometry(scene, k);
    ch.H0[k] = synthesize_channel(ckm.paths(bs, site), bsg, sg);
    for (int q = 0; q < ch.Q; ++q)
      ch.h[k][q] = row_to_vec(synthesize_channel(
          ckm.paths(site, {Role::CP, static_cast<std::uint32_t>(q)}), sg, pt));
    for (int p = 0; p < ch.P; ++p) {
      std::vector<PathRecord> los;
      for (const PathRecord& r : ckm.paths(site, {Role::SP, static_cast<std::uint32_t>(p)}))
        if (r.kind == PathKind::LoS) los.push_back(r);
      ch.g[k][p] = row_to_vec(synthesize_channel(los, sg, pt));
    }
  }
  for (int q = 0; q < ch.Q; ++q)
    ch.h0[q] = row_to_vec(
        synthesize_channel(ckm.paths(bs, {Role::CP, static_cast<std::uint32_t>(q)}), bsg, pt));
  return ch;
}

namespace detail {

inline nlohmann::json complex_json(const CMat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json complex_json(const CVec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

}  // namespace detail

// Every complex entry is written as a [re, im] pair.
inline nlohmann::json channel_set_json(const ChannelSet& ch) {
  using detail::complex_json;
  nlohmann::json j;
  j["dims"] = {{"K", ch.K}, {"M", ch.M}, {"Nt", ch.Nt}, {"P", ch.P}, {"Q", ch.Q}};
  j["H0"] = nlohmann::json::array();
  for (const CMat& H : ch.H0) j["H0"].push_back(complex_json(H));
  j["h0"] = nlohmann::json::array();
  for (const CVec& v : ch.h0) j["h0"].push_back(complex_json(v));
  j["h"] = nlohmann::json::array();
  j["g"] = nlohmann::json::array();
  for (int k = 0; k < ch.K; ++k) {
    nlohmann::json hk = nlohmann::json::array(), gk = nlohmann::json::array();
    for (const CVec& v : ch.h[k]) hk.push_back(complex_json(v));
    for (const CVec& v : ch.g[k]) gk.push_back(complex_json(v));
    j["h"].push_back(hk);
    j["g"].push_back(gk);
  }
  return j;
}

}  // namespace irsplan
