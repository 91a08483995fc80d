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
//
// Test-only oracles. These deliberately avoid the library's computation
// paths: the gradient oracle uses central finite differences over forward()
// only, the projection/PGD oracles use dense grid search, and the averaging
// oracle uses plain scalar loops.

#ifndef FAUN_TESTS_ORACLES_HPP
#define FAUN_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "faun/data.hpp"
#include "faun/model.hpp"
#include "faun/types.hpp"

namespace faun::testing {

// Central finite differences of the batch loss, coordinate by coordinate.
inline Vector fd_gradient(const ParamVector& params, const ModelSpec& spec,
                          const ExampleBatch& batch, Scalar h = 1e-5) {
  Vector g(params.dim());
  ParamVector probe = params;
  for (Index i = 0; i < params.dim(); ++i) {
    probe.values(i) = params.values(i) + h;
    const Scalar up = forward(probe, spec, batch).loss;
    probe.values(i) = params.values(i) - h;
    const Scalar down = forward(probe, spec, batch).loss;
    probe.values(i) = params.values(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

inline Scalar max_relative_error(const Vector& actual, const Vector& expected,
                                 Scalar floor = 1e-8) {
  Scalar worst = 0;
  for (Index i = 0; i < actual.size(); ++i) {
    const Scalar denom = std::max(floor, std::abs(expected(i)));
    worst = std::max(worst, std::abs(actual(i) - expected(i)) / denom);
  }
  return worst;
}

// Scalar-loop mean of a list of vectors.
inline std::vector<Scalar> scalar_mean(
    const std::vector<std::vector<Scalar>>& vectors) {
  std::vector<Scalar> mean(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
  }
  for (auto& m : mean) m /= static_cast<Scalar>(vectors.size());
  return mean;
}

// Dense grid argmin of ||x - v|| over the 2-D disk of the given radius.
inline Eigen::Vector2d grid_project_2d(const Eigen::Vector2d& v, Scalar radius,
                                       int grid = 801) {
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  Scalar best_dist = (best - v).norm();
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      Eigen::Vector2d x(-radius + 2 * radius * i / (grid - 1),
                        -radius + 2 * radius * j / (grid - 1));
      if (x.norm() > radius) continue;
      const Scalar d = (x - v).norm();
      if (d < best_dist) {
        best_dist = d;
        best = x;
      }
    }
  }
  return best;
}

// Dense grid argmax of a scalar objective over [-radius, radius].
inline Scalar grid_argmax_1d(const std::function<Scalar(Scalar)>& objective,
                             Scalar radius, int grid = 200001) {
  Scalar best_x = 0;
  Scalar best_val = objective(0);
  for (int i = 0; i < grid; ++i) {
    const Scalar x = -radius + 2 * radius * i / (grid - 1);
    const Scalar val = objective(x);
    if (val > best_val) {
      best_val = val;
      best_x = x;
    }
  }
  return best_x;
}

// Dense grid argmax over the 2-D disk.
inline Eigen::Vector2d grid_argmax_2d(
    const std::function<Scalar(const Eigen::Vector2d&)>& objective,
    Scalar radius, int grid = 2001) {
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  Scalar best_val = objective(best);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      Eigen::Vector2d x(-radius + 2 * radius * i / (grid - 1),
                        -radius + 2 * radius * j / (grid - 1));
      if (x.norm() > radius) continue;
      const Scalar val = objective(x);
      if (val > best_val) {
        best_val = val;
        best = x;
      }
    }
  }
  return best;
}

}  // namespace faun::testing

#endif  // FAUN_TESTS_ORACLES_HPP
