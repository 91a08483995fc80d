// Copyright 2026 The faunsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAUN_VEC_OPS_HPP
#define FAUN_VEC_OPS_HPP

#include <cmath>

#include "faun/types.hpp"

namespace faun {

template <typename Derived>
Scalar l2_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.norm();
}

inline Scalar l2_norm(const ParamVector& v) { return v.values.norm(); }

// Euclidean projection onto the closed l2 ball of the given radius:
// the identity inside the ball, radial rescaling outside.
//
// The rescaled vector's recomputed norm can exceed the radius by a few ulps;
// the scale factor is nudged down until the result passes `norm <= radius`,
// so projecting twice returns the first output unchanged.
template <typename Derived>
typename Derived::PlainObject project_l2_ball(
    const Eigen::MatrixBase<Derived>& v, Scalar radius) {
  if (!(radius > Scalar{0})) {
    throw config_error("project_l2_ball: radius must be > 0");
  }
  const Scalar norm = v.norm();
  if (norm <= radius) return v;
  Scalar scale = radius / norm;
  typename Derived::PlainObject out = v * scale;
  while (out.norm() > radius) {
    scale = std::nextafter(scale, Scalar{0});
    out = v * scale;
  }
  return out;
}

inline ParamVector project_l2_ball(const ParamVector& v, Scalar radius) {
  ParamVector out = v;
  out.values = project_l2_ball(out.values, radius);
  return out;
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
  return a + b;
}
inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
  return a - b;
}
inline ParamVector scale(const ParamVector& v, Scalar s) { return s * v; }

}  // namespace faun

#endif  // FAUN_VEC_OPS_HPP
