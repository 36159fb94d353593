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

// Channel-based deployment weights and the random-phase benchmark.

#include "irsplan/rounding.hpp"

#include <bit>

namespace irsplan {

struct CbdWeights {
  RVec eta;        // requirement-weighted channel power per site
  RVec beta_cbd;   // eta / max(eta)
};

inline CbdWeights cbd_weights(const ChannelSet& ch, const Requirements& req) {
  CbdWeights w;
  w.eta = RVec::Zero(ch.K);
  for (int k = 0; k < ch.K; ++k) {
    double gs = 0.0, hs = 0.0;
    for (int p = 0; p < ch.P; ++p) gs += ch.g[k][p].squaredNorm();
    for (int q = 0; q < ch.Q; ++q) hs += ch.h[k][q].squaredNorm();
    w.eta[k] = req.P_s * gs + req.comm_threshold() * hs;
  }
  const double mx = w.eta.maxCoeff();
  if (!(mx > 0.0))
    throw InfeasibleError("no candidate site reaches any sensing or communication point", {},
                          "heuristics");
  w.beta_cbd = w.eta / mx;
  return w;
}

inline RoundingReport cbd_plan(const ChannelSet& ch, const Requirements& req, const CostWeights& w,
                               CaseTag c, std::uint64_t seed, const RoundingOptions& opt = {}) {
  return greedy_round(cbd_weights(ch, req).beta_cbd, ch, req, w, c, seed, opt);
}

// Uniform phases in [-pi, pi) for every element of every site, drawn once from the seed.
inline CVec random_phases(int K, int M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  CVec v(static_cast<Eigen::Index>(K) * M);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::polar(1.0, u(rng));
  return v;
}

struct RrbOptions {
  int draws = 1;          // best of this many independent phase draws
  int max_sites = 20;
};

struct RrbReport {
  DeploymentPlan plan;
  std::uint64_t feasible_patterns = 0;
};

// Exhaustive search over beta in {0,1}^K for fixed random phases with the closed-form P0.
inline RrbReport rrb_plan(const ChannelSet& ch, const Requirements& req, const CostWeights& w,
                          std::uint64_t seed, const RrbOptions& opt = {}) {
  req.validate();
  w.validate();
  if (ch.K > opt.max_sites)
    throw Error("rrb_plan: K = " + std::to_string(ch.K) + " exceeds the enumeration limit of " +
                    std::to_string(opt.max_sites),
                "heuristics");
  const auto targets = all_targets(ch);
  const std::uint64_t patterns = std::uint64_t{1} << ch.K;
  RrbReport best;
  best.plan.cost = std::numeric_limits<double>::infinity();
  std::uint64_t best_mask = 0;
  std::mt19937_64 seeder(seed);
  for (int d = 0; d < std::max(1, opt.draws); ++d) {
    const std::uint64_t s = d == 0 ? seed : seeder();
    const CVec v = random_phases(ch.K, ch.M, s);
    // Per-site contribution B_k v_k for every target, then patterns add them up.
    std::vector<std::vector<CVec>> contrib(targets.size(), std::vector<CVec>(ch.K));
    std::vector<CVec> direct(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      direct[i] = direct_channel(ch, targets[i]);
      for (int k = 0; k < ch.K; ++k)
        contrib[i][k] = ch.H0[k].adjoint() * site_gain(ch, targets[i], k).cwiseProduct(v.segment(k * ch.M, ch.M));
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), patterns));
    std::vector<double> cost(workers, std::numeric_limits<double>::infinity());
    std::vector<double> power(workers, 0.0);
    std::vector<std::uint64_t> arg(workers, 0), count(workers, 0);
    parallel_for(workers, [&](std::size_t wid) {
      for (std::uint64_t mask = wid; mask < patterns; mask += workers) {
        double P0 = 0.0;
        for (std::size_t i = 0; i < targets.size() && P0 <= req.P0_max * (1 + 1e-9); ++i) {
          CVec u = direct[i];
          for (int k = 0; k < ch.K; ++k)
            if (mask >> k & 1) u += contrib[i][k];
          const double n2 = u.squaredNorm();
          P0 = std::max(P0, n2 > 0.0 ? threshold(req, targets[i]) / n2
                                     : std::numeric_limits<double>::infinity());
        }
        if (!within_budget(P0, req)) continue;
        ++count[wid];
        const double c = w.w1 * std::popcount(mask) + w.w2 * P0;
        if (c < cost[wid] || (c == cost[wid] && mask < arg[wid])) {
          cost[wid] = c;
          arg[wid] = mask;
          power[wid] = P0;
        }
      }
    }, workers);
    for (unsigned wid = 0; wid < workers; ++wid) {
      best.feasible_patterns += count[wid];
      if (cost[wid] < best.plan.cost || (cost[wid] == best.plan.cost && arg[wid] < best_mask)) {
        best_mask = arg[wid];
        best.plan.cost = cost[wid];
        best.plan.P0 = power[wid];
        best.plan.beta.assign(ch.K, 0);
        for (int k = 0; k < ch.K; ++k) best.plan.beta[k] = static_cast<int>(arg[wid] >> k & 1);
        best.plan.v = v;
        best.plan.case_tag = CaseTag::I;
      }
    }
  }
  if (!std::isfinite(best.plan.cost))
    throw InfeasibleError("no deployment meets the requirements with the drawn random phases", {},
                          "heuristics");
  return best;
}

}  // namespace irsplan
