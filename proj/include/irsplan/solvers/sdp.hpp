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

// Small dense semidefinite programs
//
//   min / max  <C, X>   s.t.  <A_i, X> {=, >=, <=} b_i,   X PSD,
//
// solved by an infeasible primal-dual path-following method (HKM direction, Mehrotra
// predictor-corrector). Inequalities get a slack in an internal nonnegative block.
//
// Each A_i is stored as a sparse symmetric part plus a weighted low-rank part F diag(w) F^T, which
// keeps the Schur complement cheap for the two shapes the planner produces (unit diagonal
// constraints and rank-2Nt channel Gram matrices).

#include "irsplan/solvers/convex_qp.hpp"

#include <Eigen/Eigenvalues>

namespace irsplan {

struct SdpEntry {
  int row = 0, col = 0;   // row <= col; off-diagonal entries stand for both (row,col) and (col,row)
  double value = 0.0;
};

struct SdpConstraint {
  enum class Sense { eq, geq, leq } sense = Sense::eq;
  double rhs = 0.0;
  std::vector<SdpEntry> entries;
  RMat factor;     // d x r
  RVec weights;    // r

  // Dense symmetric A, stored through its eigen-decomposition.
  static SdpConstraint from_dense(const RMat& A, Sense sense, double rhs) {
    SdpConstraint c;
    c.sense = sense;
    c.rhs = rhs;
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (A + A.transpose()));
    const double big = es.eigenvalues().cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()[i]) > 1e-14 * big) keep.push_back(static_cast<int>(i));
    c.factor.resize(A.rows(), static_cast<Eigen::Index>(keep.size()));
    c.weights.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      c.factor.col(j) = es.eigenvectors().col(keep[j]);
      c.weights[j] = es.eigenvalues()[keep[j]];
    }
    return c;
  }

  RMat dense(int d) const {
    RMat A = RMat::Zero(d, d);
    for (const SdpEntry& e : entries) {
      A(e.row, e.col) += e.value;
      if (e.row != e.col) A(e.col, e.row) += e.value;
    }
    if (factor.cols()) A += factor * weights.asDiagonal() * factor.transpose();
    return A;
  }

  double inner(const RMat& X) const {
    double v = 0.0;
    for (const SdpEntry& e : entries)
      v += e.row == e.col ? e.value * X(e.row, e.col) : e.value * (X(e.row, e.col) + X(e.col, e.row));
    for (Eigen::Index r = 0; r < factor.cols(); ++r)
      v += weights[r] * factor.col(r).dot(X * factor.col(r));
    return v;
  }
};

struct SDProblem {
  int dim = 0;
  RMat C;
  bool maximize = false;
  std::vector<SdpConstraint> constraints;
};

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 100;
  int max_dim = 200;
};

struct SdpResult {
  SolveStatus status = SolveStatus::max_iterations;
  RMat X;
  RVec y;
  RMat Z;
  double objective = std::numeric_limits<double>::quiet_NaN();       // primal, in the caller's sense
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
};

class SdpSizeError : public Error {
 public:
  explicit SdpSizeError(const std::string& what) : Error(what, "solvers") {}
};

namespace detail {

class SdpOperator {
 public:
  SdpOperator(const SDProblem& p) : p_(p), d_(p.dim), m_(static_cast<int>(p.constraints.size())) {
    int R = 0;
    for (const auto& c : p.constraints) {
      offset_.push_back(R);
      R += static_cast<int>(c.factor.cols());
    }
    F_.resize(d_, R);
    W_.resize(R);
    for (int i = 0; i < m_; ++i) {
      const auto& c = p.constraints[i];
      if (c.factor.cols()) {
        F_.middleCols(offset_[i], c.factor.cols()) = c.factor;
        W_.segment(offset_[i], c.factor.cols()) = c.weights;
      }
    }
  }

  RVec apply(const RMat& X) const {
    RVec r(m_);
    const RMat XF = X * F_;
    for (int i = 0; i < m_; ++i) {
      const auto& c = p_.constraints[i];
      double v = 0.0;
      for (const SdpEntry& e : c.entries)
        v += e.row == e.col ? e.value * X(e.row, e.col) : e.value * (X(e.row, e.col) + X(e.col, e.row));
      for (Eigen::Index k = 0; k < c.factor.cols(); ++k)
        v += W_[offset_[i] + k] * F_.col(offset_[i] + k).dot(XF.col(offset_[i] + k));
      r[i] = v;
    }
    return r;
  }

  RMat adjoint(const RVec& y) const {
    RMat A = RMat::Zero(d_, d_);
    for (int i = 0; i < m_; ++i) {
      const auto& c = p_.constraints[i];
      for (const SdpEntry& e : c.entries) {
        A(e.row, e.col) += y[i] * e.value;
        if (e.row != e.col) A(e.col, e.row) += y[i] * e.value;
      }
    }
    if (F_.cols()) {
      RVec yw(F_.cols());
      for (int i = 0; i < m_; ++i)
        for (Eigen::Index k = 0; k < p_.constraints[i].factor.cols(); ++k)
          yw[offset_[i] + k] = y[i] * W_[offset_[i] + k];
      A.noalias() += F_ * yw.asDiagonal() * F_.transpose();
    }
    return A;
  }

  // Schur complement M_ij = <A_i, X A_j Zi>.
  RMat schur(const RMat& X, const RMat& Zi) const {
    RMat M(m_, m_);
    const RMat XF = X * F_, ZF = Zi * F_;
    const RMat Gx = F_.transpose() * XF, Gz = F_.transpose() * ZF;
    // x_b^T A_j z_a for columns b of X and a of Zi
    auto xAz = [&](int j, int b, int a) {
      const auto& c = p_.constraints[j];
      double v = 0.0;
      for (const SdpEntry& e : c.entries) {
        v += e.value * X(b, e.row) * Zi(a, e.col);
        if (e.row != e.col) v += e.value * X(b, e.col) * Zi(a, e.row);
      }
      for (Eigen::Index s = 0; s < c.factor.cols(); ++s) {
        const int k = offset_[j] + static_cast<int>(s);
        v += W_[k] * XF(b, k) * ZF(a, k);
      }
      return v;
    };
    for (int i = 0; i < m_; ++i) {
      const auto& ci = p_.constraints[i];
      for (int j = i; j < m_; ++j) {
        const auto& cj = p_.constraints[j];
        double v = 0.0;
        for (const SdpEntry& e : ci.entries) {
          if (e.row == e.col)
            v += e.value * xAz(j, e.row, e.row);
          else
            v += e.value * (xAz(j, e.col, e.row) + xAz(j, e.row, e.col));
        }
        for (Eigen::Index r = 0; r < ci.factor.cols(); ++r) {
          const int kr = offset_[i] + static_cast<int>(r);
          double t = 0.0;
          for (const SdpEntry& e : cj.entries) {
            t += e.value * XF(e.row, kr) * ZF(e.col, kr);
            if (e.row != e.col) t += e.value * XF(e.col, kr) * ZF(e.row, kr);
          }
          for (Eigen::Index s = 0; s < cj.factor.cols(); ++s) {
            const int ks = offset_[j] + static_cast<int>(s);
            t += W_[ks] * Gx(ks, kr) * Gz(ks, kr);
          }
          v += W_[kr] * t;
        }
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    return M;
  }

  double frobenius(int i) const { return p_.constraints[i].dense(d_).norm(); }

 private:
  const SDProblem& p_;
  int d_, m_;
  std::vector<int> offset_;
  RMat F_;
  RVec W_;
};

// Largest alpha with X + alpha dX PSD (infinity when dX keeps X PSD for every alpha).
inline double max_psd_step(const Eigen::LLT<RMat>& cholX, const RMat& dX) {
  const RMat L = cholX.matrixL();
  RMat W = L.triangularView<Eigen::Lower>().solve(dX);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline double max_nonneg_step(const RVec& x, const RVec& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

inline RMat sym(const RMat& A) { return 0.5 * (A + A.transpose()); }

}  // namespace detail

inline SdpResult solve_sdp(const SDProblem& prob, const SdpOptions& opt = {}) {
  using namespace detail;
  const int d = prob.dim;
  const int m = static_cast<int>(prob.constraints.size());
  if (d > opt.max_dim)
    throw SdpSizeError("SDP dimension " + std::to_string(d) + " exceeds the solver limit of " +
                       std::to_string(opt.max_dim));
  if (d < 1) throw Error("solve_sdp: dimension must be positive", "solvers");
  if (prob.C.rows() != d || prob.C.cols() != d)
    throw Error("solve_sdp: cost matrix has the wrong size", "solvers");
  for (const auto& c : prob.constraints) {
    for (const auto& e : c.entries)
      if (e.row < 0 || e.col < 0 || e.row >= d || e.col >= d)
        throw Error("solve_sdp: constraint entry out of range", "solvers");
    if (c.factor.cols() && (c.factor.rows() != d || c.weights.size() != c.factor.cols()))
      throw Error("solve_sdp: constraint factor has the wrong shape", "solvers");
  }

  const RMat C = prob.maximize ? RMat(-sym(prob.C)) : sym(prob.C);
  RVec b(m), e_lp = RVec::Zero(m);
  std::vector<int> lp_of(m, -1);
  int nl = 0;
  for (int i = 0; i < m; ++i) {
    b[i] = prob.constraints[i].rhs;
    if (prob.constraints[i].sense != SdpConstraint::Sense::eq) {
      lp_of[i] = nl++;
      e_lp[i] = prob.constraints[i].sense == SdpConstraint::Sense::geq ? -1.0 : 1.0;
    }
  }
  SdpOperator A(prob);
  auto lp_apply = [&](const RVec& xl) {
    RVec r = RVec::Zero(m);
    for (int i = 0; i < m; ++i)
      if (lp_of[i] >= 0) r[i] = e_lp[i] * xl[lp_of[i]];
    return r;
  };
  auto lp_adjoint = [&](const RVec& y) {
    RVec r(nl);
    for (int i = 0; i < m; ++i)
      if (lp_of[i] >= 0) r[lp_of[i]] = e_lp[i] * y[i];
    return r;
  };

  // Initial point
  const double sd = std::sqrt(static_cast<double>(d));
  double xi = std::max(10.0, sd), eta = std::max({10.0, sd, C.norm()});
  for (int i = 0; i < m; ++i) {
    const double nA = A.frobenius(i);
    xi = std::max(xi, sd * (1.0 + std::abs(b[i])) / (1.0 + nA));
    eta = std::max(eta, nA);
  }
  RMat X = xi * RMat::Identity(d, d), Z = eta * RMat::Identity(d, d);
  RVec xl = RVec::Constant(nl, xi), zl = RVec::Constant(nl, eta);
  RVec y = RVec::Zero(m);

  const double nb = b.norm(), nC = C.norm();
  const double nu = d + nl;
  SdpResult res;
  res.status = SolveStatus::max_iterations;

  for (int it = 0; it <= opt.max_iter; ++it) {
    const RVec Rp = b - A.apply(X) - lp_apply(xl);
    const RMat Rd = C - A.adjoint(y) - Z;
    const RVec rdl = -lp_adjoint(y) - zl;
    const double pobj = (C.cwiseProduct(X)).sum();
    const double dobj = b.dot(y);
    const double mu = ((X.cwiseProduct(Z)).sum() + xl.dot(zl)) / nu;
    res.primal_infeasibility = Rp.norm() / (1.0 + nb);
    res.dual_infeasibility = std::sqrt(Rd.squaredNorm() + rdl.squaredNorm()) / (1.0 + nC);
    res.relative_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.iterations = it;
    res.X = X;
    res.Z = Z;
    res.y = y;
    res.objective = prob.maximize ? -pobj : pobj;
    res.dual_objective = prob.maximize ? -dobj : dobj;
    if (res.primal_infeasibility <= opt.tol && res.dual_infeasibility <= opt.tol &&
        res.relative_gap <= opt.tol) {
      res.status = SolveStatus::optimal;
      break;
    }
    // Infeasibility certificates along diverging iterates.
    if (dobj > 0.0 && y.norm() > 1e8 * (1.0 + nC)) {
      const double ray = std::sqrt((A.adjoint(y) + Z).squaredNorm() + (lp_adjoint(y) + zl).squaredNorm());
      if (ray / dobj < 1e-6) {
        res.status = SolveStatus::infeasible;
        break;
      }
    }
    if (pobj < 0.0 && X.norm() > 1e8 * (1.0 + nb)) {
      const double ray = (A.apply(X) + lp_apply(xl)).norm();
      if (ray / -pobj < 1e-6) {
        res.status = SolveStatus::unbounded;
        break;
      }
    }
    if (it == opt.max_iter) break;

    Eigen::LLT<RMat> cholX(X), cholZ(Z);
    if (cholX.info() != Eigen::Success || cholZ.info() != Eigen::Success) break;
    const RMat Zi = cholZ.solve(RMat::Identity(d, d));
    RMat M = A.schur(X, Zi);
    for (int i = 0; i < m; ++i)
      if (lp_of[i] >= 0) M(i, i) += xl[lp_of[i]] / zl[lp_of[i]];
    Eigen::LLT<RMat> cholM(M);
    Eigen::LDLT<RMat> ldlM;
    const bool use_llt = cholM.info() == Eigen::Success;
    if (!use_llt) ldlM.compute(M);
    auto solveM = [&](const RVec& r) -> RVec { return use_llt ? RVec(cholM.solve(r)) : RVec(ldlM.solve(r)); };

    const RMat XRdZi = sym(X * Rd * Zi);
    struct Dir {
      RMat dX, dZ;
      RVec dy, dxl, dzl;
    };
    // K is Rc Zi, rcl the LP complementarity residual.
    auto direction = [&](const RMat& K, const RVec& rcl) {
      Dir D;
      RVec rhs = Rp - A.apply(sym(K)) + A.apply(XRdZi);
      for (int i = 0; i < m; ++i)
        if (lp_of[i] >= 0) {
          const int l = lp_of[i];
          rhs[i] -= e_lp[i] * (rcl[l] / zl[l] - xl[l] / zl[l] * rdl[l]);
        }
      D.dy = solveM(rhs);
      D.dZ = Rd - A.adjoint(D.dy);
      D.dX = sym(K - X * D.dZ * Zi);
      D.dzl = rdl - lp_adjoint(D.dy);
      D.dxl = RVec(nl);
      for (int l = 0; l < nl; ++l) D.dxl[l] = (rcl[l] - xl[l] * D.dzl[l]) / zl[l];
      return D;
    };
    auto steps = [&](const Dir& D, double& ap, double& ad) {
      ap = std::min(max_psd_step(cholX, D.dX), max_nonneg_step(xl, D.dxl));
      ad = std::min(max_psd_step(cholZ, D.dZ), max_nonneg_step(zl, D.dzl));
    };

    // Predictor
    RVec rcl_a(nl);
    for (int l = 0; l < nl; ++l) rcl_a[l] = -xl[l] * zl[l];
    const Dir Da = direction(-X, rcl_a);
    double ap, ad;
    steps(Da, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    const double mu_aff = (((X + ap * Da.dX).cwiseProduct(Z + ad * Da.dZ)).sum() +
                           (xl + ap * Da.dxl).dot(zl + ad * Da.dzl)) / nu;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector
    const RMat K = sigma * mu * Zi - X - Da.dX * Da.dZ * Zi;
    RVec rcl(nl);
    for (int l = 0; l < nl; ++l) rcl[l] = sigma * mu - xl[l] * zl[l] - Da.dxl[l] * Da.dzl[l];
    const Dir D = direction(K, rcl);
    steps(D, ap, ad);
    const double gamma = 0.9 + 0.09 * std::min(ap, ad) / (1.0 + std::min(ap, ad));
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    X = sym(X + ap * D.dX);
    xl += ap * D.dxl;
    y += ad * D.dy;
    Z = sym(Z + ad * D.dZ);
    zl += ad * D.dzl;
  }
  return res;
}

// Weak-duality bound from any dual vector y with a PSD slack: for a min problem the value
// b^T y is a lower bound on the optimum whenever C - sum y_i A_i is PSD and the signs of y match
// the inequality senses. Returns NaN when y does not certify.
inline double dual_bound(const SDProblem& prob, const RVec& y, double psd_tol = 1e-9) {
  const int d = prob.dim;
  const double s = prob.maximize ? -1.0 : 1.0;
  RMat S = s * 0.5 * (prob.C + prob.C.transpose());
  double bound = 0.0;
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& c = prob.constraints[i];
    if (c.sense == SdpConstraint::Sense::geq && y[i] < 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (c.sense == SdpConstraint::Sense::leq && y[i] > 0.0) return std::numeric_limits<double>::quiet_NaN();
    S -= y[i] * c.dense(d);
    bound += y[i] * c.rhs;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(S, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < -psd_tol * std::max(1.0, S.norm())) return std::numeric_limits<double>::quiet_NaN();
  return s * bound;
}

}  // namespace irsplan
