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

// Convex quadratically constrained programs with second-order cones and box bounds, solved by a
// primal log-barrier method with damped Newton steps.
//
// Every term acts on a subset of the variables ("support"), so the Newton system stays sparse
// when constraints touch disjoint variable groups. Small systems are factorized densely, large
// ones with a sparse LDL^T.
//
// Phase I finds a strictly feasible point by minimizing a common slack s over
// h_i(x) <= s (cones smoothed as sqrt(|w|^2 + eps^2) - u <= s), within a box around the start.

#include "irsplan/common.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <limits>
#include <optional>
#include <ostream>

namespace irsplan {

// 0.5 x_S^T Q x_S + a^T x_S + b, with S = support. An empty Q means no quadratic part.
struct QuadraticTerm {
  std::vector<int> support;
  RMat Q;
  RVec a;
  double b = 0.0;

  double value(const RVec& x) const {
    RVec xs(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) xs[i] = x[support[i]];
    double v = a.size() ? a.dot(xs) + b : b;
    if (Q.size()) v += 0.5 * xs.dot(Q * xs);
    return v;
  }
};

// |A x_S + a0| <= c^T x_S + d.
struct SocTerm {
  std::vector<int> support;
  RMat A;
  RVec a0;
  RVec c;
  double d = 0.0;

  double violation(const RVec& x) const {
    RVec xs(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) xs[i] = x[support[i]];
    return (A * xs + a0).norm() - (c.dot(xs) + d);
  }
};

struct ConvexQP {
  int n = 0;
  QuadraticTerm objective;
  std::vector<QuadraticTerm> quadratic;   // each <= 0
  std::vector<SocTerm> cones;
  RVec lower, upper;                      // box bounds, +-infinity when absent

  explicit ConvexQP(int dim = 0) { resize(dim); }
  void resize(int dim) {
    n = dim;
    lower = RVec::Constant(n, -std::numeric_limits<double>::infinity());
    upper = RVec::Constant(n, std::numeric_limits<double>::infinity());
  }
  void bound(int i, double lo, double hi) {
    lower[i] = lo;
    upper[i] = hi;
  }
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iterations };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iterations: return "max_iterations";
  }
  return "?";
}

struct ConvexOptions {
  double tol = 1e-9;              // relative duality gap
  int max_newton = 600;           // total Newton steps over both phases
  double growth = 20.0;           // barrier parameter multiplier
  std::optional<RVec> start;      // optional initial guess, need not be feasible
  std::size_t dense_limit = 400;  // above this dimension the sparse factorization is used
};

struct ConvexResult {
  SolveStatus status = SolveStatus::max_iterations;
  RVec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  double kkt_residual = std::numeric_limits<double>::infinity();
  RVec quadratic_duals;   // multipliers of the quadratic constraints
  int newton_steps = 0;
};

// Largest constraint violation of x (quadratic values, cone residuals, bound excess); <= 0 when
// x is feasible. Independent of the solver internals.
inline double max_violation(const ConvexQP& qp, const RVec& x) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& q : qp.quadratic) v = std::max(v, q.value(x));
  for (const auto& c : qp.cones) v = std::max(v, c.violation(x));
  for (int i = 0; i < qp.n; ++i) {
    if (std::isfinite(qp.lower[i])) v = std::max(v, qp.lower[i] - x[i]);
    if (std::isfinite(qp.upper[i])) v = std::max(v, x[i] - qp.upper[i]);
  }
  return v;
}

// Plain-text dump for cross-checking with external solvers; layout in docs/problem_dump.md.
inline void dump_problem(const ConvexQP& qp, std::ostream& os) {
  os.precision(17);
  auto term = [&](const char* tag, const QuadraticTerm& t) {
    os << tag << ' ' << t.support.size() << ' ' << t.b << '\n';
    for (int s : t.support) os << s << ' ';
    os << '\n';
    for (Eigen::Index i = 0; i < t.a.size(); ++i) os << t.a[i] << ' ';
    os << '\n';
    if (t.Q.size())
      for (Eigen::Index i = 0; i < t.Q.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.Q.cols(); ++j) os << t.Q(i, j) << ' ';
        os << '\n';
      }
  };
  os << "convexqp 1\nn " << qp.n << '\n';
  for (int i = 0; i < qp.n; ++i) os << "bound " << i << ' ' << qp.lower[i] << ' ' << qp.upper[i] << '\n';
  term("objective", qp.objective);
  for (const auto& q : qp.quadratic) term("quadratic", q);
  for (const auto& c : qp.cones) {
    os << "cone " << c.support.size() << ' ' << c.A.rows() << ' ' << c.d << '\n';
    for (int s : c.support) os << s << ' ';
    os << '\n' << c.A << '\n' << c.a0.transpose() << '\n' << c.c.transpose() << '\n';
  }
}

namespace detail {

using Triplets = std::vector<Eigen::Triplet<double>>;

inline RVec gather(const RVec& x, const std::vector<int>& s) {
  RVec xs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) xs[i] = x[s[i]];
  return xs;
}

class BarrierProblem {
 public:
  BarrierProblem(const ConvexQP& qp, bool phase1, double eps_cone)
      : qp_(qp), phase1_(phase1), eps_(eps_cone) {
    lo_ = qp.lower;
    hi_ = qp.upper;
  }

  void set_box(RVec lo, RVec hi) {
    lo_ = std::move(lo);
    hi_ = std::move(hi);
  }
  void set_slack_floor(double f) { floor_ = f; }

  int dim() const { return qp_.n + (phase1_ ? 1 : 0); }

  // Barrier complexity: one per quadratic constraint and finite bound, two per cone.
  double complexity() const {
    double m = static_cast<double>(qp_.quadratic.size());
    m += (phase1_ ? 1.0 : 2.0) * static_cast<double>(qp_.cones.size());
    for (int i = 0; i < qp_.n; ++i) m += std::isfinite(lo_[i]) + std::isfinite(hi_[i]);
    if (phase1_) m += 1.0;
    return m;
  }

  double objective(const RVec& z) const {
    return phase1_ ? z[qp_.n] : qp_.objective.value(z);
  }

  // Value of tau*f0 + barrier; gradient and Hessian triplets when requested. Returns false if z
  // is outside the barrier domain.
  bool eval(const RVec& z, double tau, double& val, RVec* grad, Triplets* hess) const {
    const int n = qp_.n;
    val = 0.0;
    if (grad) grad->setZero(dim());
    if (hess) hess->clear();
    auto add_block = [&](const std::vector<int>& s, const RMat& B) {
      for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
          if (B(i, j) != 0.0) hess->emplace_back(s[i], s[j], B(i, j));
    };
    auto add_scaled_q = [&](const std::vector<int>& s, const RMat& Q, double w) {
      for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
          if (Q(i, j) != 0.0) hess->emplace_back(s[i], s[j], w * Q(i, j));
    };

    // bounds
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(lo_[i])) {
        const double r = z[i] - lo_[i];
        if (!(r > 0.0)) return false;
        val -= std::log(r);
        if (grad) (*grad)[i] -= 1.0 / r;
        if (hess) hess->emplace_back(i, i, 1.0 / (r * r));
      }
      if (std::isfinite(hi_[i])) {
        const double r = hi_[i] - z[i];
        if (!(r > 0.0)) return false;
        val -= std::log(r);
        if (grad) (*grad)[i] += 1.0 / r;
        if (hess) hess->emplace_back(i, i, 1.0 / (r * r));
      }
    }

    const double sigma = phase1_ ? z[n] : 0.0;
    if (phase1_) {
      const double r = sigma - floor_;
      if (!(r > 0.0)) return false;
      val -= std::log(r);
      if (grad) (*grad)[n] -= 1.0 / r;
      if (hess) hess->emplace_back(n, n, 1.0 / (r * r));
    }

    // Phase I constraint h(x) - sigma <= 0 with gradient gh and Hessian Hh of h.
    auto phase1_term = [&](const std::vector<int>& s, double h, const RVec& gh,
                           const auto& add_hh) -> bool {
      const double r = sigma - h;
      if (!(r > 0.0)) return false;
      val -= std::log(r);
      if (grad) {
        for (std::size_t i = 0; i < s.size(); ++i) (*grad)[s[i]] += gh[i] / r;
        (*grad)[n] -= 1.0 / r;
      }
      if (hess) {
        add_block(s, (gh * gh.transpose()) / (r * r));
        add_hh(1.0 / r);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const double c = -gh[i] / (r * r);
          if (c != 0.0) {
            hess->emplace_back(s[i], n, c);
            hess->emplace_back(n, s[i], c);
          }
        }
        hess->emplace_back(n, n, 1.0 / (r * r));
      }
      return true;
    };

    for (const QuadraticTerm& q : qp_.quadratic) {
      const RVec xs = gather(z, q.support);
      RVec gh = q.a.size() ? q.a : RVec(RVec::Zero(xs.size()));
      double h = q.b + (q.a.size() ? q.a.dot(xs) : 0.0);
      if (q.Q.size()) {
        const RVec Qx = q.Q * xs;
        h += 0.5 * xs.dot(Qx);
        gh += Qx;
      }
      auto add_hh = [&](double w) {
        if (q.Q.size()) add_scaled_q(q.support, q.Q, w);
      };
      if (phase1_) {
        if (!phase1_term(q.support, h, gh, add_hh)) return false;
      } else {
        const double r = -h;
        if (!(r > 0.0)) return false;
        val -= std::log(r);
        if (grad)
          for (std::size_t i = 0; i < q.support.size(); ++i) (*grad)[q.support[i]] += gh[i] / r;
        if (hess) {
          add_block(q.support, (gh * gh.transpose()) / (r * r));
          add_hh(1.0 / r);
        }
      }
    }

    for (const SocTerm& c : qp_.cones) {
      const RVec xs = gather(z, c.support);
      const RVec w = c.A * xs + c.a0;
      const double u = c.c.dot(xs) + c.d;
      if (phase1_) {
        const double rho = std::sqrt(w.squaredNorm() + eps_ * eps_);
        const RVec Atw = c.A.transpose() * w;
        const RVec gh = Atw / rho - c.c;
        auto add_hh = [&](double s) {
          const RMat Hh = (c.A.transpose() * c.A) / rho - (Atw * Atw.transpose()) / (rho * rho * rho);
          add_scaled_q(c.support, Hh, s);
        };
        if (!phase1_term(c.support, rho - u, gh, add_hh)) return false;
      } else {
        const double phi = u * u - w.squaredNorm();
        if (!(u > 0.0) || !(phi > 0.0)) return false;
        val -= std::log(phi);
        const RVec gphi = 2.0 * u * c.c - 2.0 * (c.A.transpose() * w);
        if (grad)
          for (std::size_t i = 0; i < c.support.size(); ++i) (*grad)[c.support[i]] -= gphi[i] / phi;
        if (hess) {
          const RMat H2 = 2.0 * (c.c * c.c.transpose()) - 2.0 * (c.A.transpose() * c.A);
          add_block(c.support, (gphi * gphi.transpose()) / (phi * phi) - H2 / phi);
        }
      }
    }

    // objective
    if (phase1_) {
      val += tau * sigma;
      if (grad) (*grad)[n] += tau;
    } else {
      const QuadraticTerm& f = qp_.objective;
      if (!f.support.empty()) {
        const RVec xs = gather(z, f.support);
        double fv = f.b + (f.a.size() ? f.a.dot(xs) : 0.0);
        RVec gf = f.a.size() ? f.a : RVec(RVec::Zero(xs.size()));
        if (f.Q.size()) {
          const RVec Qx = f.Q * xs;
          fv += 0.5 * xs.dot(Qx);
          gf += Qx;
          if (hess) add_scaled_q(f.support, f.Q, tau);
        }
        val += tau * fv;
        if (grad)
          for (std::size_t i = 0; i < f.support.size(); ++i) (*grad)[f.support[i]] += tau * gf[i];
      } else {
        val += tau * f.b;
      }
    }
    return std::isfinite(val);
  }

  // Gradient of the objective alone (phase II), used to pick the first barrier weight.
  RVec objective_gradient(const RVec& z) const {
    RVec g = RVec::Zero(dim());
    if (phase1_) {
      g[qp_.n] = 1.0;
      return g;
    }
    const QuadraticTerm& f = qp_.objective;
    if (f.support.empty()) return g;
    const RVec xs = gather(z, f.support);
    RVec gf = f.a.size() ? f.a : RVec(RVec::Zero(xs.size()));
    if (f.Q.size()) gf += f.Q * xs;
    for (std::size_t i = 0; i < f.support.size(); ++i) g[f.support[i]] += gf[i];
    return g;
  }

 private:
  const ConvexQP& qp_;
  bool phase1_;
  double eps_;
  double floor_ = -1.0;
  RVec lo_, hi_;
};

// Newton system solver; keeps the symbolic sparse analysis between calls.
class NewtonSolver {
 public:
  NewtonSolver(int n, std::size_t dense_limit) : n_(n), dense_(static_cast<std::size_t>(n) <= dense_limit) {}

  bool solve(const Triplets& trip, const RVec& rhs, RVec& out) {
    if (dense_) {
      RMat H = RMat::Zero(n_, n_);
      for (const auto& t : trip) H(t.row(), t.col()) += t.value();
      const double scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
      for (double ridge = 0.0; ridge < 1e-2 * scale; ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100) {
        RMat Hr = H;
        Hr.diagonal().array() += ridge;
        Eigen::LLT<RMat> llt(Hr);
        if (llt.info() == Eigen::Success) {
          out = llt.solve(rhs);
          if (out.allFinite()) return true;
        }
      }
      return false;
    }
    Eigen::SparseMatrix<double> H(n_, n_);
    H.setFromTriplets(trip.begin(), trip.end());
    H.makeCompressed();
    double scale = 1e-300;
    for (int i = 0; i < n_; ++i) scale = std::max(scale, std::abs(H.coeff(i, i)));
    if (!analyzed_) {
      ldlt_.analyzePattern(H);
      analyzed_ = true;
    }
    for (double ridge = 0.0; ridge < 1e-2 * scale; ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100) {
      Eigen::SparseMatrix<double> Hr = H;
      if (ridge > 0.0)
        for (int i = 0; i < n_; ++i) Hr.coeffRef(i, i) += ridge;
      ldlt_.factorize(Hr);
      if (ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0.0).all()) {
        out = ldlt_.solve(rhs);
        if (out.allFinite()) return true;
      }
    }
    return false;
  }

 private:
  int n_;
  bool dense_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

struct CenteringOutcome {
  bool ok = true;          // false when the Newton system could not be solved
  int steps = 0;
  double grad_norm = 0.0;  // inf-norm of the full gradient at exit
};

// Damped Newton minimization of tau*f0 + barrier starting from a domain point. `stop` is polled
// after every step and may end the centering early.
template <typename Stop>
CenteringOutcome center(const BarrierProblem& bp, NewtonSolver& ns, RVec& z, double tau,
                        int budget, Stop&& stop) {
  CenteringOutcome out;
  Triplets trip;
  RVec g, dz;
  double val;
  const int cap = std::min(budget, out.steps + 100);
  while (out.steps < cap) {
    if (!bp.eval(z, tau, val, &g, &trip)) {
      out.ok = false;
      return out;
    }
    out.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (!ns.solve(trip, -g, dz)) {
      out.ok = false;
      return out;
    }
    ++out.steps;
    const double dec2 = -g.dot(dz);
    if (!(dec2 > 1e-14)) break;
    double alpha = 1.0, trial;
    RVec zn;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      zn = z + alpha * dz;
      if (bp.eval(zn, tau, trial, nullptr, nullptr) && trial <= val - 0.01 * alpha * dec2) {
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
    z = zn;
    if (stop(z)) break;
    // Decrement small, or progress lost in the rounding of the barrier value.
    if (dec2 < 1e-9 || val - trial <= 1e-14 * std::abs(val)) break;
  }
  if (bp.eval(z, tau, val, &g, nullptr)) out.grad_norm = g.lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace detail

inline ConvexResult solve_convex(const ConvexQP& qp, const ConvexOptions& opt = {}) {
  using namespace detail;
  ConvexResult res;
  const int n = qp.n;
  if (qp.lower.size() != n || qp.upper.size() != n)
    throw Error("solve_convex: bound vectors have the wrong size", "solvers");
  for (int i = 0; i < n; ++i)
    if (!(qp.lower[i] < qp.upper[i])) {
      res.status = SolveStatus::infeasible;
      return res;
    }

  // Start strictly inside the box.
  RVec x = opt.start ? *opt.start : RVec(RVec::Zero(n));
  if (x.size() != n) throw Error("solve_convex: start has the wrong size", "solvers");
  for (int i = 0; i < n; ++i) {
    const double lo = qp.lower[i], hi = qp.upper[i];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double m = std::min(1e-3 * (hi - lo), 0.5 * (hi - lo));
      x[i] = std::clamp(x[i], lo + m, hi - m);
    } else if (std::isfinite(lo)) {
      x[i] = std::max(x[i], lo + 1e-3 * std::max(1.0, std::abs(lo)));
    } else if (std::isfinite(hi)) {
      x[i] = std::min(x[i], hi - 1e-3 * std::max(1.0, std::abs(hi)));
    }
  }

  const bool has_constraints = !qp.quadratic.empty() || !qp.cones.empty();
  int steps = 0;

  // Phase I
  if (has_constraints) {
    double hmax = -std::numeric_limits<double>::infinity();
    double scale = 1.0;
    double eps = 1e-8;
    for (const auto& c : qp.cones)
      eps = std::max(eps, 1e-7 * std::max({1.0, c.a0.norm(), std::abs(c.d)}));
    for (const auto& q : qp.quadratic) {
      const double h = q.value(x);
      hmax = std::max(hmax, h);
      scale = std::max(scale, std::abs(h));
    }
    for (const auto& c : qp.cones) {
      const double h = std::sqrt(std::pow((c.A * gather(x, c.support) + c.a0).norm(), 2) + eps * eps) -
                       (c.c.dot(gather(x, c.support)) + c.d);
      hmax = std::max(hmax, h);
      scale = std::max(scale, std::abs(h));
    }
    if (hmax >= 0.0) {
      BarrierProblem p1(qp, true, eps);
      const double radius = 1e3 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
      RVec lo = qp.lower, hi = qp.upper;
      for (int i = 0; i < n; ++i) {
        lo[i] = std::max(lo[i], x[i] - radius);
        hi[i] = std::min(hi[i], x[i] + radius);
      }
      p1.set_box(lo, hi);
      const double floor = -scale;
      p1.set_slack_floor(floor);
      RVec z(n + 1);
      z << x, hmax + std::max(1.0, 0.1 * std::abs(hmax));
      NewtonSolver ns(n + 1, opt.dense_limit);
      double tau = 1.0 / std::max(1.0, std::abs(z[n]));
      bool found = false;
      auto sigma_negative = [&](const RVec& zz) { return zz[n] < 0.0; };
      while (steps < opt.max_newton) {
        const auto c = center(p1, ns, z, tau, opt.max_newton - steps, sigma_negative);
        steps += c.steps;
        if (!c.ok) break;
        if (z[n] < 0.0) {
          found = true;
          break;
        }
        const double gap = p1.complexity() / tau;
        if (gap < 1e-10 * scale || z[n] - gap > 0.0) break;   // optimum slack is non-negative
        tau *= opt.growth;
      }
      if (!found) {
        res.status = steps >= opt.max_newton ? SolveStatus::max_iterations : SolveStatus::infeasible;
        res.newton_steps = steps;
        res.x = z.head(n);
        return res;
      }
      x = z.head(n);
    }
  }

  // Phase II
  BarrierProblem p2(qp, false, 0.0);
  NewtonSolver ns(n, opt.dense_limit);
  const double m = p2.complexity();
  double tau = 1.0;
  {
    double val;
    RVec gphi;
    p2.eval(x, 0.0, val, &gphi, nullptr);
    const RVec gf = p2.objective_gradient(x);
    const double gg = gf.squaredNorm();
    if (gg > 0.0) {
      const double t0 = -gf.dot(gphi) / gg;
      tau = t0 > 0.0 ? t0 : m / std::max(1.0, std::abs(p2.objective(x)));
      tau = std::clamp(tau, 1e-8, 1e8);
    }
  }
  const bool trivial_objective = qp.objective.support.empty();
  auto never = [](const RVec&) { return false; };
  res.status = SolveStatus::max_iterations;
  while (steps < opt.max_newton) {
    const auto c = center(p2, ns, x, tau, opt.max_newton - steps, never);
    steps += c.steps;
    if (!c.ok) break;
    if (x.lpNorm<Eigen::Infinity>() > 1e12) {
      res.status = SolveStatus::unbounded;
      break;
    }
    const double f = p2.objective(x);
    res.gap = m / tau;
    res.kkt_residual = c.grad_norm / tau;
    if (trivial_objective || res.gap <= opt.tol * std::max(1.0, std::abs(f))) {
      res.status = SolveStatus::optimal;
      break;
    }
    tau *= opt.growth;
  }
  res.x = x;
  res.objective = qp.objective.value(x);
  res.newton_steps = steps;
  res.quadratic_duals.resize(static_cast<Eigen::Index>(qp.quadratic.size()));
  for (std::size_t i = 0; i < qp.quadratic.size(); ++i) {
    const double r = -qp.quadratic[i].value(x);
    res.quadratic_duals[i] = r > 0.0 ? 1.0 / (tau * r) : 0.0;
  }
  return res;
}

}  // namespace irsplan
