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

// Fixed-deployment reflective beamforming and greedy relax-and-round.
//
// For a fixed beta the best phases minimize max_i thr_i / |F_i vt|^2 over unit-modulus
// vt = [v; 1], where F_i = [beta_1 B_1i, ..., beta_K B_Ki, c_i]. The lifted problem
//
//   max tau  s.t.  vt^H A_i vt >= tau,  |vt_j| = 1,   A_i = F_i^H F_i / thr_i (scaled)
//
// is relaxed to V PSD with unit diagonal and solved as a real SDP, then Gaussian randomization
// draws unit-modulus candidates from V.

#include "irsplan/metrics.hpp"
#include "irsplan/solvers/embed.hpp"
#include "irsplan/solvers/sdp.hpp"

#include <map>
#include <mutex>
#include <random>

namespace irsplan {

struct RoundingOptions {
  int n_gr = 200;               // Gaussian randomization draws
  double snap = 1e-3;           // relaxed weights below this count as zero
  SdpOptions sdp{};
};

struct ReflectiveSolution {
  CVec v;                // K*M unit-modulus phases; unused sites are set to 1
  CVec v_reduced;        // [phases of the active sites..., 1]
  std::vector<int> active_sites;
  double P0 = std::numeric_limits<double>::infinity();       // best candidate
  double sdr_P0 = 0.0;   // relaxation bound, never above P0
  bool feasible = false;
};

inline std::vector<int> init_binary(const RVec& beta_relaxed, double snap = 1e-3) {
  std::vector<int> b(beta_relaxed.size());
  for (Eigen::Index k = 0; k < beta_relaxed.size(); ++k) {
    if (!(beta_relaxed[k] >= 0.0 && beta_relaxed[k] <= 1.0))
      throw Error("init_binary: relaxed weights must lie in [0, 1]", "rounding");
    b[k] = beta_relaxed[k] >= snap ? 1 : 0;
  }
  return b;
}

// Indices of the non-zero (unsnapped) weights, ascending by weight, ties by lower index.
inline std::vector<int> removal_order(const RVec& beta_relaxed, double snap = 1e-3) {
  std::vector<int> xi;
  for (Eigen::Index k = 0; k < beta_relaxed.size(); ++k)
    if (beta_relaxed[k] >= snap) xi.push_back(static_cast<int>(k));
  std::stable_sort(xi.begin(), xi.end(),
                   [&](int a, int b) { return beta_relaxed[a] < beta_relaxed[b]; });
  return xi;
}

// Normalized candidate exp(j arg(w / w_last)); zero entries map to phase 0.
inline CVec normalize_phases(const CVec& w) {
  const Eigen::Index n = w.size();
  const double ref = std::arg(w[n - 1]);
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = w[i] == cd(0.0, 0.0) ? cd(1.0, 0.0) : std::polar(1.0, std::arg(w[i]) - ref);
  v[n - 1] = cd(1.0, 0.0);
  return v;
}

// Draws n_gr candidates from CN(0, V) with a seeded generator; draw i uses the i-th block of
// normal variates.
inline std::vector<CVec> gaussian_candidates(const CMat& V, int n_gr, std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (V + V.adjoint()));
  // Eigenvalues at round-off level are dropped so a rank-one V gives its vector back exactly.
  const double floor = 1e-12 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  const RVec lam = es.eigenvalues().unaryExpr([floor](double x) { return x > floor ? x : 0.0; });
  const CMat L = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  std::vector<CVec> out;
  out.reserve(static_cast<std::size_t>(n_gr));
  const Eigen::Index n = V.rows();
  for (int i = 0; i < n_gr; ++i) {
    CVec xi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = nd(rng);
      const double im = nd(rng);
      xi[j] = cd(re, im);
    }
    out.push_back(normalize_phases(L * xi));
  }
  return out;
}

inline CVec principal_candidate(const CMat& V) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (V + V.adjoint()));
  return normalize_phases(es.eigenvectors().col(V.rows() - 1));
}

// V from the real embedding [[X11, X12], [X21, X22]] of an n x n Hermitian matrix.
inline CMat hermitian_from_embedding(const RMat& X, Eigen::Index n) {
  CMat V(n, n);
  V.real() = 0.5 * (X.topLeftCorner(n, n) + X.block(n, n, n, n));
  V.imag() = 0.5 * (X.block(n, 0, n, n) - X.block(0, n, n, n));
  return 0.5 * (V + V.adjoint());
}

namespace detail {

struct LiftedTargets {
  std::vector<int> sites;          // active sites, in index order
  std::vector<CMat> F;             // Nt x n per target
  std::vector<double> thr;
  int n = 1;
};

inline LiftedTargets lift(const ChannelSet& ch, const RVec& beta, const std::vector<TargetId>& targets,
                          const Requirements& req) {
  LiftedTargets L;
  std::vector<std::vector<CMat>> blocks(targets.size());
  for (int k = 0; k < ch.K; ++k) {
    if (beta[k] == 0.0) continue;
    bool used = false;
    std::vector<CMat> col(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      col[i] = beta[k] * cascade_block(ch, targets[i], k);
      used = used || col[i].cwiseAbs2().sum() > 0.0;
    }
    if (!used) continue;
    L.sites.push_back(k);
    for (std::size_t i = 0; i < targets.size(); ++i) blocks[i].push_back(std::move(col[i]));
  }
  L.n = static_cast<int>(L.sites.size()) * ch.M + 1;
  std::vector<TargetId> unreachable;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    CMat F(ch.Nt, L.n);
    for (std::size_t s = 0; s < L.sites.size(); ++s) F.middleCols(s * ch.M, ch.M) = blocks[i][s];
    F.col(L.n - 1) = direct_channel(ch, targets[i]);
    if (F.cwiseAbs2().sum() == 0.0) unreachable.push_back(targets[i]);
    L.F.push_back(std::move(F));
    L.thr.push_back(threshold(req, targets[i]));
  }
  if (!unreachable.empty())
    throw InfeasibleError("targets unreachable under this deployment", unreachable, "rounding");
  return L;
}

inline double lifted_power(const LiftedTargets& L, const CVec& vt) {
  double P0 = 0.0;
  for (std::size_t i = 0; i < L.F.size(); ++i) {
    const double n2 = (L.F[i] * vt).squaredNorm();
    P0 = std::max(P0, n2 > 0.0 ? L.thr[i] / n2 : std::numeric_limits<double>::infinity());
  }
  return P0;
}

// Real SDP of the lifted relaxation; tau is the last diagonal entry of the PSD block.
inline SDProblem build_sdr(const LiftedTargets& L, double& scale) {
  const int n = L.n, d = 2 * n + 1;
  double big = 0.0;
  for (std::size_t i = 0; i < L.F.size(); ++i) big = std::max(big, L.F[i].squaredNorm() / L.thr[i]);
  scale = n / big;
  SDProblem sdp;
  sdp.dim = d;
  sdp.maximize = true;
  sdp.C = RMat::Zero(d, d);
  sdp.C(d - 1, d - 1) = 1.0;
  for (std::size_t i = 0; i < L.F.size(); ++i) {
    // vt^H A vt = <embed(A), X>/2 with embed(a a^H) = p p^T + q q^T for each row a^H of F.
    const CMat& F = L.F[i];
    SdpConstraint c;
    c.sense = SdpConstraint::Sense::geq;
    c.rhs = 0.0;
    c.factor = RMat::Zero(d, 2 * F.rows());
    for (Eigen::Index r = 0; r < F.rows(); ++r) {
      const CVec a = F.row(r).adjoint();
      c.factor.col(2 * r).head(2 * n) << a.real(), a.imag();
      c.factor.col(2 * r + 1).head(2 * n) << -a.imag(), a.real();
    }
    c.weights = RVec::Constant(2 * F.rows(), 0.5 * scale / L.thr[i]);
    c.entries.push_back({d - 1, d - 1, -1.0});
    sdp.constraints.push_back(std::move(c));
  }
  for (int j = 0; j < n; ++j) {
    SdpConstraint c;
    c.sense = SdpConstraint::Sense::eq;
    c.rhs = 2.0;
    c.entries = {{j, j, 1.0}, {n + j, n + j, 1.0}};
    sdp.constraints.push_back(std::move(c));
  }
  return sdp;
}

inline ReflectiveSolution solve_lifted(const ChannelSet& ch, const RVec& beta,
                                       const std::vector<TargetId>& targets,
                                       const Requirements& req, std::uint64_t seed, int n_gr,
                                       const SdpOptions& sdp_opt) {
  const LiftedTargets L = lift(ch, beta, targets, req);
  ReflectiveSolution out;
  out.active_sites = L.sites;
  CVec best = CVec::Ones(L.n);
  if (L.n == 1) {
    out.P0 = lifted_power(L, best);
    out.sdr_P0 = out.P0;
  } else {
    double scale = 1.0;
    const SDProblem sdp = build_sdr(L, scale);
    const SdpResult r = solve_sdp(sdp, sdp_opt);
    if (r.status == SolveStatus::infeasible || r.status == SolveStatus::unbounded ||
        !(r.primal_infeasibility < 1e-5 && r.relative_gap < 1e-5))
      throw Error(std::string("SDR solve failed (") + status_name(r.status) + ")", "rounding");
    const double tau_hi = std::max(r.objective, r.dual_objective);
    out.sdr_P0 = tau_hi > 0.0 ? scale / tau_hi : std::numeric_limits<double>::infinity();
    const CMat V = hermitian_from_embedding(r.X, L.n);
    best = principal_candidate(V);
    out.P0 = lifted_power(L, best);
    for (const CVec& cand : gaussian_candidates(V, n_gr, seed)) {
      const double p = lifted_power(L, cand);
      if (p < out.P0) {
        out.P0 = p;
        best = cand;
      }
    }
  }
  out.v_reduced = best;
  out.v = CVec::Ones(static_cast<Eigen::Index>(ch.K) * ch.M);
  for (std::size_t s = 0; s < L.sites.size(); ++s)
    out.v.segment(L.sites[s] * ch.M, ch.M) = best.segment(s * ch.M, ch.M);
  out.feasible = within_budget(out.P0, req);
  return out;
}

}  // namespace detail

// Case I: one phase vector for every SP and CP.
inline ReflectiveSolution solve_reflective_subproblem(const RVec& beta, const ChannelSet& ch,
                                                      const Requirements& req, std::uint64_t seed,
                                                      int n_gr = 200, const SdpOptions& sdp = {}) {
  return detail::solve_lifted(ch, beta, all_targets(ch), req, seed, n_gr, sdp);
}

// Case II: phases dedicated to a single target.
inline ReflectiveSolution solve_point_subproblem(const RVec& beta, const ChannelSet& ch,
                                                 const TargetId& target, const Requirements& req,
                                                 std::uint64_t seed, int n_gr = 200,
                                                 const SdpOptions& sdp = {}) {
  return detail::solve_lifted(ch, beta, {target}, req, seed, n_gr, sdp);
}

// Seed used for a target's case-II subproblem.
inline std::uint64_t point_seed(std::uint64_t seed, const TargetId& t) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (2 * static_cast<std::uint64_t>(t.index) + t.kind + 1));
}

struct PlanCandidate {
  DeploymentPlan plan;
  int step = 0;   // 0 for the initial pattern, i for the i-th removal
};

struct RoundingReport {
  DeploymentPlan plan;
  std::vector<int> order;                   // removal order over the relaxed weights
  std::vector<PlanCandidate> candidates;    // feasible patterns, in discovery order
};

namespace detail {

// Evaluates a binary pattern; per-target case-II results are cached on the set of deployed
// sites that actually reach the target, since nothing else changes the subproblem.
class PatternEvaluator {
 public:
  PatternEvaluator(const ChannelSet& ch, const Requirements& req, CaseTag c, std::uint64_t seed,
                   const RoundingOptions& opt)
      : ch_(ch), req_(req), case_(c), seed_(seed), opt_(opt) {
    for (const TargetId& t : all_targets(ch)) {
      std::vector<char> reach(ch.K, 0);
      for (int k = 0; k < ch.K; ++k) reach[k] = cascade_block(ch, t, k).cwiseAbs2().sum() > 0.0;
      reach_.push_back(std::move(reach));
    }
  }

  // Fills plan phases and P0; returns false when some target is unreachable.
  bool evaluate(const std::vector<int>& beta, DeploymentPlan& plan) {
    RVec b(ch_.K);
    for (int k = 0; k < ch_.K; ++k) b[k] = beta[k];
    plan.beta = beta;
    plan.case_tag = case_;
    try {
      if (case_ == CaseTag::I) {
        const auto s = solve_reflective_subproblem(b, ch_, req_, seed_, opt_.n_gr, opt_.sdp);
        plan.v = s.v;
        plan.P0 = s.P0;
      } else {
        const auto targets = all_targets(ch_);
        std::vector<CVec> vs(targets.size());
        std::vector<double> p0(targets.size());
        std::vector<char> bad(targets.size(), 0);
        parallel_for(targets.size(), [&](std::size_t i) {
          std::string key(ch_.K, '0');
          for (int k = 0; k < ch_.K; ++k) key[k] = (beta[k] && reach_[i][k]) ? '1' : '0';
          {
            std::lock_guard<std::mutex> lk(mu_);
            if (auto it = cache_.find({i, key}); it != cache_.end()) {
              std::tie(vs[i], p0[i], bad[i]) = it->second;
              return;
            }
          }
          try {
            const auto s = solve_point_subproblem(b, ch_, targets[i], req_,
                                                  point_seed(seed_, targets[i]), opt_.n_gr, opt_.sdp);
            vs[i] = s.v;
            p0[i] = s.P0;
          } catch (const InfeasibleError&) {
            bad[i] = 1;
            vs[i] = CVec::Ones(static_cast<Eigen::Index>(ch_.K) * ch_.M);
            p0[i] = std::numeric_limits<double>::infinity();
          }
          std::lock_guard<std::mutex> lk(mu_);
          cache_[{i, key}] = {vs[i], p0[i], bad[i]};
        });
        if (std::any_of(bad.begin(), bad.end(), [](char c) { return c != 0; })) return false;
        plan.v_sensing.assign(vs.begin(), vs.begin() + ch_.P);
        plan.v_comm.assign(vs.begin() + ch_.P, vs.end());
        plan.P0 = *std::max_element(p0.begin(), p0.end());
      }
    } catch (const InfeasibleError&) {
      return false;
    }
    return true;
  }

 private:
  const ChannelSet& ch_;
  const Requirements& req_;
  CaseTag case_;
  std::uint64_t seed_;
  RoundingOptions opt_;
  std::vector<std::vector<char>> reach_;
  std::mutex mu_;
  std::map<std::pair<std::size_t, std::string>, std::tuple<CVec, double, char>> cache_;
};

}  // namespace detail

// Greedy removal over the relaxed weights: starting from every non-zero site deployed, try
// switching sites off in ascending weight order; a removal is kept when the pattern stays
// feasible. Returns the cheapest feasible pattern seen.
inline RoundingReport greedy_round(const RVec& beta_relaxed, const ChannelSet& ch,
                                   const Requirements& req, const CostWeights& w, CaseTag c,
                                   std::uint64_t seed, const RoundingOptions& opt = {}) {
  req.validate();
  w.validate();
  if (beta_relaxed.size() != ch.K) throw Error("greedy_round: beta has the wrong length", "rounding");
  RoundingReport rep;
  std::vector<int> beta = init_binary(beta_relaxed, opt.snap);
  rep.order = removal_order(beta_relaxed, opt.snap);
  detail::PatternEvaluator eval(ch, req, c, seed, opt);

  auto try_pattern = [&](const std::vector<int>& b, int step) {
    DeploymentPlan plan;
    if (!eval.evaluate(b, plan) || !within_budget(plan.P0, req)) return false;
    plan.cost = system_cost(plan.beta, plan.P0, w);
    rep.candidates.push_back({plan, step});
    return true;
  };

  try_pattern(beta, 0);
  for (std::size_t i = 0; i < rep.order.size(); ++i) {
    const int k = rep.order[i];
    beta[k] = 0;
    if (!try_pattern(beta, static_cast<int>(i) + 1)) beta[k] = 1;
  }
  if (rep.candidates.empty())
    throw InfeasibleError("no deployment pattern meets the requirements within the power budget", {},
                          "rounding");
  const auto best = std::min_element(rep.candidates.begin(), rep.candidates.end(),
                                     [](const PlanCandidate& a, const PlanCandidate& b) {
                                       return a.plan.cost < b.plan.cost;
                                     });
  rep.plan = best->plan;
  return rep;
}

}  // namespace irsplan
