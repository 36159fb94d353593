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

// Illumination power, SNR, MRT covariances, required transmit power and cost.
//
// Phase vectors: v stacks the per-site vectors v_k (site k occupies entries [kM, kM+M)) with
// Theta_k^H = diag(v_k). For a target with per-site gain vectors a_k (g_kp or h_kq) and direct
// channel c (zero for SPs, h0q for CPs) the effective transmit-side vector is
//   u = sum_k beta_k H0k^H diag(a_k) v_k + c,
// and the received power under covariance R is u^H R u.

#include "irsplan/channel.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace irsplan {

struct Requirements {
  double P_s = 0.0;       // W
  double Gamma_c = 0.0;   // linear
  double sigma2 = 0.0;    // W
  double P0_max = 0.0;    // W

  double comm_threshold() const { return sigma2 * Gamma_c; }
  void validate() const {
    if (!(P_s > 0 && Gamma_c > 0 && sigma2 > 0 && P0_max > 0))
      throw Error("requirements must all be strictly positive", "metrics");
  }
};

struct CostWeights {
  double w1 = 1.0;   // per deployed IRS
  double w2 = 0.0;   // per watt
  void validate() const {
    if (!(w1 >= 0 && w2 >= 0)) throw Error("cost weights must be non-negative", "metrics");
  }
};

enum class CaseTag { I, II };

inline const char* case_name(CaseTag c) { return c == CaseTag::I ? "I" : "II"; }

struct TargetId {
  enum Kind : std::uint8_t { Sensing, Comm } kind = Sensing;
  int index = 0;
  bool operator==(const TargetId&) const = default;
};

inline std::string to_string(const TargetId& t) {
  return (t.kind == TargetId::Sensing ? "SP" : "CP") + std::to_string(t.index);
}

// Sensing points first, then communication points.
inline std::vector<TargetId> all_targets(const ChannelSet& ch) {
  std::vector<TargetId> out;
  for (int p = 0; p < ch.P; ++p) out.push_back({TargetId::Sensing, p});
  for (int q = 0; q < ch.Q; ++q) out.push_back({TargetId::Comm, q});
  return out;
}

inline const CVec& site_gain(const ChannelSet& ch, const TargetId& t, int k) {
  return t.kind == TargetId::Sensing ? ch.g[k][t.index] : ch.h[k][t.index];
}

inline CVec direct_channel(const ChannelSet& ch, const TargetId& t) {
  return t.kind == TargetId::Sensing ? CVec(CVec::Zero(ch.Nt)) : ch.h0[t.index];
}

inline double threshold(const Requirements& req, const TargetId& t) {
  return t.kind == TargetId::Sensing ? req.P_s : req.comm_threshold();
}

// Nt x M block H0k^H diag(a_k) of the target's cascaded channel.
inline CMat cascade_block(const ChannelSet& ch, const TargetId& t, int k) {
  return ch.H0[k].adjoint() * site_gain(ch, t, k).asDiagonal();
}

struct DeploymentPlan {
  std::vector<int> beta;
  CaseTag case_tag = CaseTag::I;
  CVec v;                          // case I, length K*M
  std::vector<CVec> v_sensing;     // case II, one per SP
  std::vector<CVec> v_comm;        // case II, one per CP
  double P0 = 0.0;
  double cost = 0.0;

  const CVec& phases(const TargetId& t) const {
    if (case_tag == CaseTag::I) return v;
    return t.kind == TargetId::Sensing ? v_sensing.at(t.index) : v_comm.at(t.index);
  }
  RVec beta_vector() const {
    RVec b(beta.size());
    for (std::size_t k = 0; k < beta.size(); ++k) b[k] = beta[k];
    return b;
  }
  int deployed() const { return static_cast<int>(std::count(beta.begin(), beta.end(), 1)); }
};

// Raised when a target cannot be reached or the power budget cannot be met.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::vector<TargetId> targets = {},
                  std::string stage = "metrics")
      : Error(what + describe(targets), std::move(stage)), targets_(std::move(targets)) {}
  const std::vector<TargetId>& targets() const noexcept { return targets_; }

 private:
  static std::string describe(const std::vector<TargetId>& t) {
    if (t.empty()) return "";
    std::string s = " (";
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + to_string(t[i]);
    return s + ")";
  }
  std::vector<TargetId> targets_;
};

inline CVec effective_vector(const ChannelSet& ch, const RVec& beta, const CVec& v,
                             const TargetId& t) {
  if (beta.size() != ch.K || v.size() != static_cast<Eigen::Index>(ch.K) * ch.M)
    throw Error("effective_vector: beta/v dimensions do not match the channel set", "metrics");
  CVec u = direct_channel(ch, t);
  for (int k = 0; k < ch.K; ++k) {
    if (beta[k] == 0.0) continue;
    u.noalias() +=
        beta[k] * (ch.H0[k].adjoint() * site_gain(ch, t, k).cwiseProduct(v.segment(k * ch.M, ch.M)));
  }
  return u;
}

namespace detail {

inline void check_covariance(const CMat& R, int Nt) {
  if (R.rows() != Nt || R.cols() != Nt)
    throw Error("covariance has wrong dimensions", "metrics");
  const double tr = R.trace().real();
  if ((R - R.adjoint()).norm() > 1e-9 * std::max(1.0, std::abs(tr)))
    throw Error("covariance is not Hermitian", "metrics");
  Eigen::SelfAdjointEigenSolver<CMat> es(R, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * std::abs(tr))
    throw Error("covariance is not positive semidefinite", "metrics");
}

}  // namespace detail

inline double illumination_power(const RVec& beta, const CVec& v, const CMat& R,
                                 const ChannelSet& ch, int p) {
  detail::check_covariance(R, ch.Nt);
  const CVec u = effective_vector(ch, beta, v, {TargetId::Sensing, p});
  return std::max(0.0, u.dot(R * u).real());
}

inline double communication_snr(const RVec& beta, const CVec& v, const CMat& R,
                                const ChannelSet& ch, int q, double sigma2) {
  detail::check_covariance(R, ch.Nt);
  const CVec u = effective_vector(ch, beta, v, {TargetId::Comm, q});
  return std::max(0.0, u.dot(R * u).real()) / sigma2;
}

struct CovarianceResult {
  CMat R;
  double value = 0.0;   // illumination power (W) or linear SNR
};

// MRT covariance R = (P0/|u|^2) u u^H and the metric it achieves.
inline CovarianceResult optimal_covariance(const RVec& beta, const CVec& v, const ChannelSet& ch,
                                           double P0, const TargetId& t, double sigma2 = 1.0) {
  const CVec u = effective_vector(ch, beta, v, t);
  const double n2 = u.squaredNorm();
  if (n2 == 0.0) throw InfeasibleError("target unreachable", {t});
  CovarianceResult r;
  r.R = (P0 / n2) * (u * u.adjoint());
  r.value = P0 * n2 / (t.kind == TargetId::Comm ? sigma2 : 1.0);
  return r;
}

// Per-target power ratio threshold / |u|^2, +inf for unreachable targets.
inline double power_ratio(const ChannelSet& ch, const RVec& beta, const CVec& v, const TargetId& t,
                          const Requirements& req) {
  const double n2 = effective_vector(ch, beta, v, t).squaredNorm();
  return n2 > 0.0 ? threshold(req, t) / n2 : std::numeric_limits<double>::infinity();
}

// Minimum P0 meeting every requirement under per-point MRT. `phases(t)` returns the phase vector
// serving target t (the same vector for every target in case I).
template <typename PhaseFn>
double required_power_with(const ChannelSet& ch, const RVec& beta, PhaseFn&& phases,
                           const Requirements& req) {
  double P0 = 0.0;
  std::vector<TargetId> unreachable;
  for (const TargetId& t : all_targets(ch)) {
    const double r = power_ratio(ch, beta, phases(t), t, req);
    if (std::isinf(r))
      unreachable.push_back(t);
    else
      P0 = std::max(P0, r);
  }
  if (!unreachable.empty()) throw InfeasibleError("unreachable targets", std::move(unreachable));
  return P0;
}

inline double required_power(const RVec& beta, const CVec& v, const ChannelSet& ch,
                             const Requirements& req) {
  return required_power_with(ch, beta, [&](const TargetId&) -> const CVec& { return v; }, req);
}

inline double required_power(const RVec& beta, const std::vector<CVec>& v_sensing,
                             const std::vector<CVec>& v_comm, const ChannelSet& ch,
                             const Requirements& req) {
  return required_power_with(
      ch, beta,
      [&](const TargetId& t) -> const CVec& {
        return t.kind == TargetId::Sensing ? v_sensing.at(t.index) : v_comm.at(t.index);
      },
      req);
}

inline double required_power(const DeploymentPlan& plan, const ChannelSet& ch,
                             const Requirements& req) {
  return required_power_with(
      ch, plan.beta_vector(), [&](const TargetId& t) -> const CVec& { return plan.phases(t); },
      req);
}

inline double system_cost(const RVec& beta, double P0, const CostWeights& w) {
  return w.w1 * beta.sum() + w.w2 * P0;
}

inline double system_cost(const std::vector<int>& beta, double P0, const CostWeights& w) {
  double n = 0;
  for (int b : beta) n += b;
  return w.w1 * n + w.w2 * P0;
}

inline bool within_budget(double P0, const Requirements& req) {
  return P0 <= req.P0_max * (1.0 + 1e-9);
}

struct PlanCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

// Independent re-check of a plan: binary beta, unit-modulus phases, budget, and every SP/CP
// requirement under its MRT covariance at the plan's P0.
inline PlanCheck verify_plan(const DeploymentPlan& plan, const ChannelSet& ch,
                             const Requirements& req, double rel_tol = 1e-6) {
  PlanCheck out;
  auto fail = [&](std::string s) {
    out.ok = false;
    out.violations.push_back(std::move(s));
  };
  if (static_cast<int>(plan.beta.size()) != ch.K) fail("beta has wrong length");
  for (int b : plan.beta)
    if (b != 0 && b != 1) fail("beta is not binary");
  auto check_phase = [&](const CVec& v, const std::string& tag) {
    if (v.size() != static_cast<Eigen::Index>(ch.K) * ch.M) {
      fail(tag + " has wrong length");
      return;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (std::abs(std::abs(v[i]) - 1.0) > 1e-9) {
        fail(tag + " entry " + std::to_string(i) + " is not unit modulus");
        return;
      }
  };
  if (plan.case_tag == CaseTag::I) {
    check_phase(plan.v, "v");
  } else {
    if (static_cast<int>(plan.v_sensing.size()) != ch.P ||
        static_cast<int>(plan.v_comm.size()) != ch.Q) {
      fail("per-point phase lists have wrong length");
      return out;
    }
    for (int p = 0; p < ch.P; ++p) check_phase(plan.v_sensing[p], "v_sensing[" + std::to_string(p) + "]");
    for (int q = 0; q < ch.Q; ++q) check_phase(plan.v_comm[q], "v_comm[" + std::to_string(q) + "]");
  }
  if (!out.ok) return out;
  if (!within_budget(plan.P0, req)) fail("P0 exceeds the budget");
  const RVec beta = plan.beta_vector();
  for (const TargetId& t : all_targets(ch)) {
    const CVec u = effective_vector(ch, beta, plan.phases(t), t);
    const double n2 = u.squaredNorm();
    // MRT value P0 |u|^2 compared against the threshold (SNR threshold times noise for CPs).
    if (plan.P0 * n2 < threshold(req, t) * (1.0 - rel_tol))
      fail(to_string(t) + " requirement not met");
  }
  return out;
}

}  // namespace irsplan
