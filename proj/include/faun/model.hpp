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

#ifndef FAUN_MODEL_HPP
#define FAUN_MODEL_HPP

#include <cstdint>

#include "faun/data.hpp"
#include "faun/types.hpp"

namespace faun {

// SGD-with-momentum state. The velocity buffer has the model's dimension.
struct OptimizerState {
  Scalar learning_rate{0.01};
  Scalar momentum{0.9};
  Vector velocity;

  static OptimizerState make(Scalar lr, Scalar mom, Index dim) {
    if (!(lr > 0)) throw config_error("optimizer: learning_rate must be > 0");
    if (mom < 0 || mom >= 1) {
      throw config_error("optimizer: momentum must be in [0, 1)");
    }
    OptimizerState s;
    s.learning_rate = lr;
    s.momentum = mom;
    s.velocity = Vector::Zero(dim);
    return s;
  }
};

struct ForwardResult {
  Matrix logits;  // batch_size x num_classes
  Scalar loss;    // mean softmax cross-entropy
};

struct LossGrad {
  Scalar loss;
  ParamVector grad;
};

// Weight / bias views into the flat parameter vector (frozen layout: per
// layer, column-major weight block then bias row).
Eigen::Map<const Matrix> weight_view(const ParamVector& params,
                                     const ModelSpec& spec, Index layer);
Eigen::Map<Matrix> weight_view(ParamVector& params, const ModelSpec& spec,
                               Index layer);
Eigen::Map<const Eigen::RowVectorXd> bias_view(const ParamVector& params,
                                               const ModelSpec& spec,
                                               Index layer);
Eigen::Map<Eigen::RowVectorXd> bias_view(ParamVector& params,
                                         const ModelSpec& spec, Index layer);

// Zero-initialized parameters with the spec's shape table.
ParamVector zero_params(const ModelSpec& spec);

// Random initialization: per-layer weights ~ N(0, 1/fan_in), biases zero.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

ForwardResult forward(const ParamVector& params, const ModelSpec& spec,
                      const ExampleBatch& batch);

// Exact gradient of the batch-mean softmax cross-entropy w.r.t. params.
ParamVector gradient(const ParamVector& params, const ModelSpec& spec,
                     const ExampleBatch& batch);

// One forward/backward pass returning both the loss and the gradient.
LossGrad loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                           const ExampleBatch& batch);

// velocity <- momentum * velocity + grad; params <- params - lr * velocity.
void sgd_step(ParamVector& params, const ParamVector& grad,
              OptimizerState& state);

}  // namespace faun

#endif  // FAUN_MODEL_HPP
