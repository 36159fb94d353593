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

// Complex <-> real embedding [[Re, -Im], [Im, Re]].

#include "irsplan/common.hpp"

namespace irsplan {

inline RMat complex_embed(const CMat& H) {
  const Eigen::Index m = H.rows(), n = H.cols();
  RMat E(2 * m, 2 * n);
  E.topLeftCorner(m, n) = H.real();
  E.topRightCorner(m, n) = -H.imag();
  E.bottomLeftCorner(m, n) = H.imag();
  E.bottomRightCorner(m, n) = H.real();
  return E;
}

// Inverse of complex_embed for exactly structured input. For an arbitrary real 2m x 2n matrix
// this returns the complex matrix whose embedding is nearest in Frobenius norm.
inline CMat complex_extract(const RMat& E) {
  if (E.rows() % 2 != 0 || E.cols() % 2 != 0)
    throw Error("complex_extract: dimensions must be even", "solvers");
  const Eigen::Index m = E.rows() / 2, n = E.cols() / 2;
  const RMat re = 0.5 * (E.topLeftCorner(m, n) + E.bottomRightCorner(m, n));
  const RMat im = 0.5 * (E.bottomLeftCorner(m, n) - E.topRightCorner(m, n));
  CMat H(m, n);
  H.real() = re;
  H.imag() = im;
  return H;
}

inline RVec stack_real(const CVec& x) {
  RVec r(2 * x.size());
  r << x.real(), x.imag();
  return r;
}

inline CVec unstack_real(const RVec& r) {
  if (r.size() % 2 != 0) throw Error("unstack_real: length must be even", "solvers");
  const Eigen::Index n = r.size() / 2;
  CVec x(n);
  x.real() = r.head(n);
  x.imag() = r.tail(n);
  return x;
}

}  // namespace irsplan
