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

// Successive convex approximation of the relaxed joint problem (beta in [0,1]^K, |v_i| <= 1).
//
// Each target constraint thr_i / |u_i|^2 <= P0 is rewritten as f_i + thr_i t <= 0 with
// f_i = -|u_i|^2 and t = 1/P0, and f_i is replaced by the quadratic majorizer
// f_i(x0) + g^T (x - x0) + (mu_i / 2) |x - x0|^2 over the real parametrization
// x = (Re v, Im v, beta). Powers are normalized by the budget inside the subproblem.

#include "irsplan/rounding.hpp"
#include "irsplan/solvers/convex_qp.hpp"

#include <fstream>
#include <functional>

namespace irsplan {

// Real parametrization of the quantities one target depends on.
struct TargetModel {
  TargetId id;
  std::vector<int> sites;       // sites with a non-zero cascaded block
  std::vector<CMat> B;          // Nt x M per listed site
  CVec c;                       // direct channel
  double thr = 0.0;
};

inline TargetModel target_model(const ChannelSet& ch, const TargetId& t, const Requirements& req) {
  TargetModel m;
  m.id = t;
  m.c = direct_channel(ch, t);
  m.thr = threshold(req, t);
  for (int k = 0; k < ch.K; ++k) {
    CMat B = cascade_block(ch, t, k);
    if (B.cwiseAbs2().sum() == 0.0) continue;
    m.sites.push_back(k);
    m.B.push_back(std::move(B));
  }
  return m;
}

struct FValue {
  double value = 0.0;
  CVec grad_v;   // complex gradient 2 df/dv^*, length K*M (zero outside the target's sites)
  RVec grad_beta;
};

// f = -|sum_k beta_k B_k v_k + c|^2 with its gradient. For the real parametrization the
// derivative along Re v is Re(grad_v), along Im v is Im(grad_v).
inline FValue eval_f(const ChannelSet& ch, const RVec& beta, const CVec& v, const TargetId& t) {
  FValue out;
  const CVec z = effective_vector(ch, beta, v, t);
  out.value = -z.squaredNorm();
  out.grad_v = CVec::Zero(v.size());
  out.grad_beta = RVec::Zero(ch.K);
  for (int k = 0; k < ch.K; ++k) {
    const CVec& a = site_gain(ch, t, k);
    // B_k^H z = conj(a) .* (H0k z)
    const CVec Bhz = a.conjugate().cwiseProduct(ch.H0[k] * z);
    out.grad_v.segment(k * ch.M, ch.M) = -2.0 * beta[k] * Bhz;
    out.grad_beta[k] = -2.0 * (Bhz.dot(v.segment(k * ch.M, ch.M))).real();
  }
  return out;
}

// Curvature of the majorizer: the larger of 4(1+M)(sum_k s_k)^2 and the Hessian bound
// 2(1+M) sum_k s_k^2 + 2 s_max (sqrt(M) sum_k s_k + |c|), s_k the spectral norm of the target's
// cascaded block at site k; floored at 1e-12.
inline double estimate_mu(const ChannelSet& ch, const TargetId& t) {
  double sum = 0.0, sum2 = 0.0, smax = 0.0;
  for (int k = 0; k < ch.K; ++k) {
    const CMat B = cascade_block(ch, t, k);
    if (B.cwiseAbs2().sum() == 0.0) continue;
    const double s = Eigen::JacobiSVD<CMat>(B).singularValues()[0];
    sum += s;
    sum2 += s * s;
    smax = std::max(smax, s);
  }
  const double M = ch.M;
  const double recipe = 4.0 * (1.0 + M) * sum * sum;
  const double bound =
      2.0 * (1.0 + M) * sum2 + 2.0 * smax * (std::sqrt(M) * sum + direct_channel(ch, t).norm());
  return std::max({recipe, bound, 1e-12});
}

// Per-site curvature that majorizes f everywhere around (beta0, v0). Since -|z|^2 is concave,
// f <= f0 + grad.d - 2 sum_k dbeta_k Re(z0^H B_k dv_k), and the last term is at most
// sum_k |B_k^H z0| (w dbeta_k^2 + |dv_k|^2 / w) for any w > 0. Site k therefore needs 2 |B_k^H z0|,
// scaled by w on beta and 1/w on the phases (Surrogate::beta_weight). Returned as the largest
// value (floored at 1e-12 times |z0|^2 + 1e-300) plus per-site fractions.
struct SiteCurvature {
  double mu = 0.0;
  RVec site_scale;
};

inline SiteCurvature local_curvature(const ChannelSet& ch, const RVec& beta, const CVec& v,
                                     const TargetId& t) {
  const CVec z = effective_vector(ch, beta, v, t);
  RVec c(ch.K);
  for (int k = 0; k < ch.K; ++k)
    c[k] = 2.0 * site_gain(ch, t, k).conjugate().cwiseProduct(ch.H0[k] * z).norm();
  SiteCurvature out;
  out.mu = std::max(c.maxCoeff(), 1e-12 * z.squaredNorm() + 1e-300);
  out.site_scale = (c / out.mu).cwiseMax(1e-6);
  return out;
}

struct Surrogate {
  TargetId target;
  std::vector<int> sites;   // sites the target depends on; the distance term runs over these
  int M = 0;
  RVec beta0;
  CVec v0;
  double f0 = 0.0;
  CVec grad_v;
  RVec grad_beta;
  double mu = 0.0;
  RVec site_scale;          // curvature at site k is mu * site_scale[k]
  double beta_weight = 1.0; // beta entries carry curvature * beta_weight, phases / beta_weight

  double curvature(int k) const { return mu * site_scale[k]; }

  double operator()(const RVec& beta, const CVec& v) const {
    double val = f0;
    for (int k : sites) {
      const CVec dv = v.segment(k * M, M) - v0.segment(k * M, M);
      const double db = beta[k] - beta0[k];
      val += (grad_v.segment(k * M, M).conjugate().cwiseProduct(dv)).real().sum() +
             grad_beta[k] * db +
             0.5 * curvature(k) * (dv.squaredNorm() / beta_weight + beta_weight * db * db);
    }
    return val;
  }
};

// Empty site_scale means a uniform curvature mu.
inline Surrogate make_surrogate(const ChannelSet& ch, const RVec& beta, const CVec& v,
                                const TargetId& t, double mu, const RVec& site_scale = {}) {
  const FValue f = eval_f(ch, beta, v, t);
  Surrogate s{t, {}, ch.M, beta, v, f.value, f.grad_v, f.grad_beta, mu,
              site_scale.size() ? site_scale : RVec(RVec::Ones(ch.K))};
  for (int k = 0; k < ch.K; ++k)
    if (cascade_block(ch, t, k).cwiseAbs2().sum() > 0.0) s.sites.push_back(k);
  return s;
}

struct ScaOptions {
  int max_iters = 100;
  double tol = 1e-4;            // relative objective decrease
  int patience = 3;             // consecutive small decreases before stopping
  double mu_safety = 1.0;       // multiplies every starting curvature
  bool local_mu = true;         // per-site local_curvature instead of estimate_mu
  double beta_weight = 0.0;     // split of the local bound between beta and phases; 0 means M
  int max_doublings = 10;
  double snap = 1e-3;
  std::string trace_path;       // CSV of iteration -> objective, when non-empty
  RoundingOptions init{};       // SDR used for the initial phases
  std::uint64_t seed = 0;
  ConvexOptions qp{.tol = 1e-8};  // subproblem accuracy
  // Called after every accepted step with the surrogates that produced it.
  std::function<void(int, const std::vector<Surrogate>&)> observer;
};

struct RelaxedSolution {
  CaseTag case_tag = CaseTag::I;
  RVec beta;                    // relaxed weights, small entries snapped to zero
  RVec beta_raw;                // before snapping
  CVec v;                       // case I
  std::vector<CVec> v_sensing, v_comm;   // case II
  double P0 = 0.0;
  std::vector<double> trace;    // objective at the initial point and after every accepted step
  std::vector<double> mu;       // final curvature per target
  int iterations = 0;
  bool converged = false;

  const CVec& phases(const TargetId& t) const {
    if (case_tag == CaseTag::I) return v;
    return t.kind == TargetId::Sensing ? v_sensing.at(t.index) : v_comm.at(t.index);
  }
};

// Iterate (beta, phases) of the relaxed problem.
struct ScaState {
  RVec beta;
  std::vector<CVec> v;   // one entry (case I) or one per target (case II), each K*M
};

namespace detail {

// Variable layout of the convex subproblem. Phase entries are offsets from the expansion point;
// t and s are absolute (budget-normalized inverse power and its epigraph).
struct ScaLayout {
  int n = 0;
  std::vector<std::vector<int>> group_sites;      // per phase group, sites carrying variables
  std::vector<std::vector<int>> group_offset;     // start of site block (2M reals) per group
  std::vector<int> beta_index;
  int t_index = 0, s_index = 0;
};

inline ScaLayout make_layout(const ChannelSet& ch, const std::vector<TargetModel>& models,
                             CaseTag c) {
  ScaLayout L;
  const std::size_t groups = c == CaseTag::I ? 1 : models.size();
  L.group_sites.resize(groups);
  L.group_offset.resize(groups);
  if (c == CaseTag::I) {
    std::vector<char> used(ch.K, 0);
    for (const auto& m : models)
      for (int k : m.sites) used[k] = 1;
    for (int k = 0; k < ch.K; ++k)
      if (used[k]) L.group_sites[0].push_back(k);
  } else {
    for (std::size_t i = 0; i < models.size(); ++i) L.group_sites[i] = models[i].sites;
  }
  for (std::size_t gi = 0; gi < groups; ++gi)
    for (std::size_t s = 0; s < L.group_sites[gi].size(); ++s) {
      L.group_offset[gi].push_back(L.n);
      L.n += 2 * ch.M;
    }
  for (int k = 0; k < ch.K; ++k) L.beta_index.push_back(L.n++);
  L.t_index = L.n++;
  L.s_index = L.n++;
  return L;
}

inline double relaxed_power(const std::vector<TargetModel>& models, const ScaState& st,
                            const ChannelSet& ch, CaseTag c) {
  double P0 = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const CVec& v = st.v[c == CaseTag::I ? 0 : i];
    const double n2 = effective_vector(ch, st.beta, v, models[i].id).squaredNorm();
    P0 = std::max(P0, n2 > 0.0 ? models[i].thr / n2 : std::numeric_limits<double>::infinity());
  }
  return P0;
}

}  // namespace detail

// Convex subproblem at `state` with one surrogate per target (SPs then CPs, as in all_targets).
inline ConvexQP build_subproblem(const ScaState& state, const std::vector<Surrogate>& surrogates,
                                 const ChannelSet& ch, const Requirements& req,
                                 const CostWeights& w, CaseTag c) {
  const auto targets = all_targets(ch);
  if (surrogates.size() != targets.size())
    throw Error("build_subproblem: one surrogate per target is required", "sca");
  std::vector<TargetModel> models;
  for (const TargetId& t : targets) models.push_back(target_model(ch, t, req));
  const detail::ScaLayout L = detail::make_layout(ch, models, c);
  const int M = ch.M;
  ConvexQP qp(L.n);

  // group-local index of each site
  auto site_slot = [&](std::size_t g, int k) {
    const auto& s = L.group_sites[g];
    const auto it = std::find(s.begin(), s.end(), k);
    return it == s.end() ? -1 : static_cast<int>(it - s.begin());
  };

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Surrogate& sg = surrogates[i];
    if (!(sg.target == targets[i])) throw Error("build_subproblem: surrogate order mismatch", "sca");
    const std::size_t g = c == CaseTag::I ? 0 : i;
    const double scl = req.P0_max / models[i].thr;
    QuadraticTerm q;
    std::vector<double> lin;
    for (int k : models[i].sites) {
      const int slot = site_slot(g, k);
      const int off = L.group_offset[g][slot];
      for (int e = 0; e < M; ++e) {
        q.support.push_back(off + e);
        lin.push_back(scl * sg.grad_v[k * M + e].real());
      }
      for (int e = 0; e < M; ++e) {
        q.support.push_back(off + M + e);
        lin.push_back(scl * sg.grad_v[k * M + e].imag());
      }
      q.support.push_back(L.beta_index[k]);
      lin.push_back(scl * sg.grad_beta[k]);
    }
    const int nq = static_cast<int>(q.support.size());
    q.support.push_back(L.t_index);
    lin.push_back(1.0);
    q.a = Eigen::Map<RVec>(lin.data(), static_cast<Eigen::Index>(lin.size()));
    q.Q = RMat::Zero(nq + 1, nq + 1);
    int row = 0;
    for (int k : models[i].sites) {
      for (int e = 0; e < 2 * M; ++e) q.Q(row, row) = scl * sg.curvature(k) / sg.beta_weight, ++row;
      q.Q(row, row) = scl * sg.curvature(k) * sg.beta_weight, ++row;
    }
    q.b = scl * sg.f0;
    qp.quadratic.push_back(std::move(q));
  }

  // |v0 + dv|^2 <= 1 per phase entry
  for (std::size_t g = 0; g < L.group_sites.size(); ++g) {
    const CVec& v0 = state.v[g];
    for (std::size_t s = 0; s < L.group_sites[g].size(); ++s) {
      const int k = L.group_sites[g][s], off = L.group_offset[g][s];
      for (int e = 0; e < M; ++e) {
        const cd x = v0[k * M + e];
        QuadraticTerm q;
        q.support = {off + e, off + M + e};
        q.Q = 2.0 * RMat::Identity(2, 2);
        q.a = RVec(2);
        q.a << 2.0 * x.real(), 2.0 * x.imag();
        q.b = std::norm(x) - 1.0;
        qp.quadratic.push_back(std::move(q));
      }
    }
  }
  for (int k = 0; k < ch.K; ++k) qp.bound(L.beta_index[k], -state.beta[k], 1.0 - state.beta[k]);
  qp.lower[L.t_index] = 1.0;        // P0 <= budget
  qp.upper[L.s_index] = 2.0;

  // s t >= 1 as |(2, s - t)| <= s + t
  SocTerm cone;
  cone.support = {L.s_index, L.t_index};
  cone.A = RMat(2, 2);
  cone.A << 0.0, 0.0, 1.0, -1.0;
  cone.a0 = RVec(2);
  cone.a0 << 2.0, 0.0;
  cone.c = RVec::Ones(2);
  qp.cones.push_back(cone);

  qp.objective.support = L.beta_index;
  qp.objective.support.push_back(L.s_index);
  qp.objective.a = RVec::Constant(ch.K + 1, w.w1);
  qp.objective.a[ch.K] = w.w2 * req.P0_max;
  qp.objective.b = w.w1 * state.beta.sum();
  return qp;
}

namespace detail {

inline ScaState apply_step(const ScaState& st, const RVec& x, const ScaLayout& L, int M) {
  ScaState out = st;
  for (std::size_t g = 0; g < L.group_sites.size(); ++g)
    for (std::size_t s = 0; s < L.group_sites[g].size(); ++s) {
      const int k = L.group_sites[g][s], off = L.group_offset[g][s];
      for (int e = 0; e < M; ++e) {
        cd z = out.v[g][k * M + e] + cd(x[off + e], x[off + M + e]);
        if (std::abs(z) > 1.0) z /= std::abs(z);   // clip solver round-off
        out.v[g][k * M + e] = z;
      }
    }
  for (std::size_t k = 0; k < L.beta_index.size(); ++k)
    out.beta[k] = std::clamp(out.beta[k] + x[L.beta_index[k]], 0.0, 1.0);
  return out;
}

}  // namespace detail

class ScaError : public Error {
 public:
  explicit ScaError(const std::string& what) : Error(what, "sca") {}
};

// Initial phases at full deployment from the fixed-deployment SDR.
inline ScaState initial_state(const ChannelSet& ch, const Requirements& req, CaseTag c,
                              const ScaOptions& opt) {
  ScaState st;
  st.beta = RVec::Ones(ch.K);
  try {
    if (c == CaseTag::I) {
      st.v.push_back(
          solve_reflective_subproblem(st.beta, ch, req, opt.seed, opt.init.n_gr, opt.init.sdp).v);
    } else {
      const auto targets = all_targets(ch);
      st.v.resize(targets.size());
      parallel_for(targets.size(), [&](std::size_t i) {
        st.v[i] = solve_point_subproblem(st.beta, ch, targets[i], req, point_seed(opt.seed, targets[i]),
                                         opt.init.n_gr, opt.init.sdp)
                      .v;
      });
    }
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("infeasible at full deployment", e.targets(), "sca");
  }
  return st;
}

inline RelaxedSolution solve_relaxed(const ChannelSet& ch, const Requirements& req,
                                     const CostWeights& w, CaseTag c, const ScaOptions& opt = {},
                                     std::optional<ScaState> start = std::nullopt) {
  req.validate();
  w.validate();
  const auto targets = all_targets(ch);
  std::vector<TargetModel> models;
  for (const TargetId& t : targets) models.push_back(target_model(ch, t, req));
  const detail::ScaLayout L = detail::make_layout(ch, models, c);

  ScaState st = start ? *start : initial_state(ch, req, c, opt);
  const std::size_t groups = c == CaseTag::I ? 1 : targets.size();
  if (st.beta.size() != ch.K || st.v.size() != groups)
    throw ScaError("solve_relaxed: start state has the wrong shape");
  double P0 = detail::relaxed_power(models, st, ch, c);
  if (!within_budget(P0, req))
    throw InfeasibleError("infeasible at full deployment: required power " +
                              std::to_string(P0) + " W exceeds the budget",
                          {}, "sca");

  // Curvature per target: either the local bound times a doubling boost, or the fixed recipe.
  std::vector<double> mu(targets.size()), boost(targets.size(), opt.mu_safety);
  std::vector<RVec> site_scale(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (!opt.local_mu) mu[i] = opt.mu_safety * estimate_mu(ch, targets[i]);

  RelaxedSolution out;
  out.case_tag = c;
  double J = system_cost(st.beta, P0, w);
  out.trace.push_back(J);
  int small = 0;
  for (int it = 0; it < opt.max_iters; ++it) {
    ScaState next;
    double Pn = 0.0;
    bool solved = false;
    std::vector<Surrogate> used;
    for (int dbl = 0; dbl <= opt.max_doublings; ++dbl) {
      std::vector<Surrogate> sur(targets.size());
      parallel_for(targets.size(), [&](std::size_t i) {
        const CVec& vi = st.v[c == CaseTag::I ? 0 : i];
        if (opt.local_mu) {
          const SiteCurvature lc = local_curvature(ch, st.beta, vi, targets[i]);
          mu[i] = boost[i] * lc.mu;
          site_scale[i] = lc.site_scale;
        }
        sur[i] = make_surrogate(ch, st.beta, vi, targets[i], mu[i], site_scale[i]);
        if (opt.local_mu) sur[i].beta_weight = opt.beta_weight > 0.0 ? opt.beta_weight : ch.M;
      });
      const ConvexQP qp = build_subproblem(st, sur, ch, req, w, c);
      ConvexOptions qo = opt.qp;
      RVec x0 = RVec::Zero(qp.n);
      x0[L.t_index] = std::max(1.0, req.P0_max / std::max(P0, 1e-300));
      x0[L.s_index] = 1.0 / x0[L.t_index];
      qo.start = x0;
      const ConvexResult r = solve_convex(qp, qo);
      if (r.status == SolveStatus::infeasible) throw ScaError("SCA subproblem infeasible");
      if (r.status != SolveStatus::optimal && r.status != SolveStatus::max_iterations)
        throw ScaError(std::string("SCA subproblem failed: ") + status_name(r.status));
      next = detail::apply_step(st, r.x, L, ch.M);
      // Majorization check at the new point; offending curvatures are doubled.
      bool ok = true;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const CVec& vn = next.v[c == CaseTag::I ? 0 : i];
        const double f = eval_f(ch, next.beta, vn, targets[i]).value;
        if (f > sur[i](next.beta, vn) + 1e-9 * std::abs(f)) {
          mu[i] *= 2.0;
          boost[i] *= 2.0;
          ok = false;
        }
      }
      if (ok) {
        used = std::move(sur);
        solved = true;
        break;
      }
    }
    if (!solved) throw ScaError("majorization still violated after the maximum number of doublings");
    Pn = detail::relaxed_power(models, next, ch, c);
    const double Jn = system_cost(next.beta, Pn, w);
    out.iterations = it + 1;
    if (!(Jn <= J) || !within_budget(Pn, req)) {
      out.converged = true;
      break;
    }
    const double rel = (J - Jn) / std::max(std::abs(J), 1e-300);
    st = std::move(next);
    P0 = Pn;
    J = Jn;
    out.trace.push_back(J);
    if (opt.observer) opt.observer(it, used);
    small = rel < opt.tol ? small + 1 : 0;
    if (small >= opt.patience) {
      out.converged = true;
      break;
    }
  }

  out.beta_raw = st.beta;
  out.beta = st.beta;
  for (Eigen::Index k = 0; k < out.beta.size(); ++k)
    if (out.beta[k] < opt.snap) out.beta[k] = 0.0;
  if (c == CaseTag::I) {
    out.v = st.v[0];
  } else {
    out.v_sensing.assign(st.v.begin(), st.v.begin() + ch.P);
    out.v_comm.assign(st.v.begin() + ch.P, st.v.end());
  }
  out.P0 = P0;
  out.mu = mu;
  if (!opt.trace_path.empty()) {
    std::ofstream f(opt.trace_path);
    if (!f) throw ScaError("cannot write SCA trace to " + opt.trace_path);
    f.precision(17);
    f << "iteration,objective\n";
    for (std::size_t i = 0; i < out.trace.size(); ++i) f << i << ',' << out.trace[i] << '\n';
  }
  return out;
}

// State view of a relaxed solution, e.g. to warm-start another run.
inline ScaState state_of(const RelaxedSolution& s, const ChannelSet& ch, CaseTag as) {
  ScaState st;
  st.beta = s.beta_raw;
  if (as == CaseTag::I) {
    if (s.case_tag != CaseTag::I) throw ScaError("state_of: cannot collapse per-point phases");
    st.v = {s.v};
  } else {
    for (const TargetId& t : all_targets(ch)) st.v.push_back(s.phases(t));
  }
  return st;
}

}  // namespace irsplan
