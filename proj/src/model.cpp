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

#include "faun/model.hpp"

#include <random>
#include <string>
#include <vector>

#include "faun/rng.hpp"

namespace faun {
namespace {

// Byte offset of layer `l`'s weight block in the flat vector.
Index weight_offset(const ModelSpec& spec, Index layer) {
  const auto dims = spec.layer_dims();
  Index off = 0;
  for (Index l = 0; l < layer; ++l) {
    off += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return off;
}

void check_batch(const ModelSpec& spec, const ExampleBatch& batch) {
  if (batch.width() != spec.input_dim) {
    throw config_error("forward: batch width " +
                       std::to_string(batch.width()) +
                       " does not match input_dim " +
                       std::to_string(spec.input_dim));
  }
  if (batch.labels.size() != batch.n()) {
    throw config_error("forward: labels/features row count mismatch");
  }
  if (!batch.features.allFinite()) {
    throw data_error("forward: non-finite feature values");
  }
  for (Index i = 0; i < batch.labels.size(); ++i) {
    const int y = batch.labels(i);
    if (y < 0 || y >= spec.num_classes) {
      throw data_error("forward: label " + std::to_string(y) +
                       " out of range at row " + std::to_string(i));
    }
  }
}

void check_params(const ParamVector& params, const ModelSpec& spec) {
  if (params.dim() != spec.param_count()) {
    throw config_error("model: parameter dimension " +
                       std::to_string(params.dim()) +
                       " does not match spec (" +
                       std::to_string(spec.param_count()) + ")");
  }
}

struct ForwardPass {
  std::vector<Matrix> activations;     // A[0] = X, A[l+1] = post-activation
  std::vector<Matrix> preactivations;  // Z[l] = A[l] * W_l + b_l
  Matrix probs;                        // softmax rows
  Scalar loss{0};
};

ForwardPass run_forward(const ParamVector& params, const ModelSpec& spec,
                        const ExampleBatch& batch) {
  const Index layers = spec.num_layers();
  const Index n = batch.n();

  ForwardPass fp;
  fp.activations.resize(layers + 1);
  fp.preactivations.resize(layers);
  fp.activations[0] = batch.features;

  for (Index l = 0; l < layers; ++l) {
    const auto w = weight_view(params, spec, l);
    const auto b = bias_view(params, spec, l);
    fp.preactivations[l] = fp.activations[l] * w;
    fp.preactivations[l].rowwise() += b;
    if (l + 1 < layers) {
      fp.activations[l + 1] = fp.preactivations[l].cwiseMax(Scalar{0});
    } else {
      fp.activations[l + 1] = fp.preactivations[l];
    }
  }

  const Matrix& logits = fp.activations[layers];
  const Vector row_max = logits.rowwise().maxCoeff();
  const Matrix shifted = logits.colwise() - row_max;
  const Vector lse = shifted.array().exp().rowwise().sum().log() +
                     row_max.array();

  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    total += lse(i) - logits(i, batch.labels(i));
  }
  fp.loss = total / static_cast<Scalar>(n);
  fp.probs = (logits.colwise() - lse).array().exp();
  return fp;
}

}  // namespace

Eigen::Map<const Matrix> weight_view(const ParamVector& params,
                                     const ModelSpec& spec, Index layer) {
  const auto dims = spec.layer_dims();
  return {params.values.data() + weight_offset(spec, layer), dims[layer],
          dims[layer + 1]};
}

Eigen::Map<Matrix> weight_view(ParamVector& params, const ModelSpec& spec,
                               Index layer) {
  const auto dims = spec.layer_dims();
  return {params.values.data() + weight_offset(spec, layer), dims[layer],
          dims[layer + 1]};
}

Eigen::Map<const Eigen::RowVectorXd> bias_view(const ParamVector& params,
                                               const ModelSpec& spec,
                                               Index layer) {
  const auto dims = spec.layer_dims();
  const Index off = weight_offset(spec, layer) + dims[layer] * dims[layer + 1];
  return {params.values.data() + off, dims[layer + 1]};
}

Eigen::Map<Eigen::RowVectorXd> bias_view(ParamVector& params,
                                         const ModelSpec& spec, Index layer) {
  const auto dims = spec.layer_dims();
  const Index off = weight_offset(spec, layer) + dims[layer] * dims[layer + 1];
  return {params.values.data() + off, dims[layer + 1]};
}

ParamVector zero_params(const ModelSpec& spec) {
  spec.validate();
  ParamVector p;
  p.shapes = spec.param_shapes();
  p.values = Vector::Zero(spec.param_count());
  return p;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector p = zero_params(spec);
  auto engine = make_engine(seed);
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  const auto dims = spec.layer_dims();
  for (Index l = 0; l < spec.num_layers(); ++l) {
    const Scalar std_dev = 1.0 / std::sqrt(static_cast<Scalar>(dims[l]));
    auto w = weight_view(p, spec, l);
    for (Index c = 0; c < w.cols(); ++c) {
      for (Index r = 0; r < w.rows(); ++r) {
        w(r, c) = std_dev * normal(engine);
      }
    }
  }
  return p;
}

ForwardResult forward(const ParamVector& params, const ModelSpec& spec,
                      const ExampleBatch& batch) {
  check_params(params, spec);
  check_batch(spec, batch);
  ForwardPass fp = run_forward(params, spec, batch);
  return {fp.activations.back(), fp.loss};
}

LossGrad loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                           const ExampleBatch& batch) {
  check_params(params, spec);
  check_batch(spec, batch);
  const Index layers = spec.num_layers();
  const Index n = batch.n();

  ForwardPass fp = run_forward(params, spec, batch);

  ParamVector grad = zero_params(spec);

  // d(loss)/d(logits) = (softmax - onehot) / n
  Matrix delta = fp.probs;
  for (Index i = 0; i < n; ++i) {
    delta(i, batch.labels(i)) -= Scalar{1};
  }
  delta /= static_cast<Scalar>(n);

  for (Index l = layers - 1; l >= 0; --l) {
    weight_view(grad, spec, l).noalias() =
        fp.activations[l].transpose() * delta;
    bias_view(grad, spec, l) = delta.colwise().sum();
    if (l > 0) {
      const auto w = weight_view(params, spec, l);
      delta = (delta * w.transpose()).array() *
              (fp.preactivations[l - 1].array() > Scalar{0}).cast<Scalar>();
    }
  }
  return {fp.loss, std::move(grad)};
}

ParamVector gradient(const ParamVector& params, const ModelSpec& spec,
                     const ExampleBatch& batch) {
  return loss_and_gradient(params, spec, batch).grad;
}

void sgd_step(ParamVector& params, const ParamVector& grad,
              OptimizerState& state) {
  if (grad.dim() != params.dim() || state.velocity.size() != params.dim()) {
    throw config_error("sgd_step: dimension mismatch");
  }
  state.velocity = state.momentum * state.velocity + grad.values;
  params.values -= state.learning_rate * state.velocity;
}

}  // namespace faun
