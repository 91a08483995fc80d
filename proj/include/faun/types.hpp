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

#ifndef FAUN_TYPES_HPP
#define FAUN_TYPES_HPP

#include <Eigen/Dense>

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace faun {

// All simulator arithmetic is in 64-bit floating point.
using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using LabelVector = Eigen::VectorXi;
using Index = Eigen::Index;

// Invalid experiment setup: bad dimensions, out-of-range hyperparameters,
// malformed configs.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent data: bad file bytes, non-finite features,
// labels out of range.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Arithmetic blow-up detected mid-computation (NaN/Inf loss or gradient).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what)
      : std::runtime_error(what) {}
};

struct MatrixShape {
  Index rows{0};
  Index cols{0};

  Index size() const { return rows * cols; }
  friend bool operator==(const MatrixShape&, const MatrixShape&) = default;
};

// Flat parameter vector plus the per-segment shape table that maps it back
// onto layer matrices.
//
// Frozen layout: for each layer l, the weight matrix (fan_in x fan_out,
// column-major) is stored first, immediately followed by the bias row
// (1 x fan_out). The shape table lists these segments in the same order.
struct ParamVector {
  Vector values;
  std::vector<MatrixShape> shapes;

  Index dim() const { return values.size(); }

  bool shapes_consistent() const {
    Index total = 0;
    for (const auto& s : shapes) total += s.size();
    return total == values.size();
  }

  bool all_finite() const { return values.allFinite(); }

  ParamVector& operator+=(const ParamVector& other) {
    check_same_dim(other);
    values += other.values;
    return *this;
  }
  ParamVector& operator-=(const ParamVector& other) {
    check_same_dim(other);
    values -= other.values;
    return *this;
  }
  ParamVector& operator*=(Scalar s) {
    values *= s;
    return *this;
  }

  friend ParamVector operator+(ParamVector a, const ParamVector& b) {
    a += b;
    return a;
  }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) {
    a -= b;
    return a;
  }
  friend ParamVector operator*(Scalar s, ParamVector v) {
    v *= s;
    return v;
  }

 private:
  void check_same_dim(const ParamVector& other) const {
    if (values.size() != other.values.size()) {
      throw config_error("ParamVector dimension mismatch: " +
                         std::to_string(values.size()) + " vs " +
                         std::to_string(other.values.size()));
    }
  }
};

enum class Activation { relu };

// Architecture of the desk-scale classifiers: a linear softmax model when
// hidden_dims is empty, otherwise an MLP with ReLU hidden layers.
struct ModelSpec {
  Index input_dim{0};
  std::vector<Index> hidden_dims;
  Index num_classes{0};
  Activation activation{Activation::relu};

  // Layer widths including input and output.
  std::vector<Index> layer_dims() const {
    std::vector<Index> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(num_classes);
    return dims;
  }

  Index num_layers() const {
    return static_cast<Index>(hidden_dims.size()) + 1;
  }

  std::vector<MatrixShape> param_shapes() const {
    std::vector<MatrixShape> shapes;
    const auto dims = layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      shapes.push_back({dims[l], dims[l + 1]});  // weight
      shapes.push_back({1, dims[l + 1]});        // bias
    }
    return shapes;
  }

  Index param_count() const {
    Index total = 0;
    for (const auto& s : param_shapes()) total += s.size();
    return total;
  }

  void validate() const {
    if (num_classes < 2) throw config_error("model: num_classes must be >= 2");
    if (input_dim < 1) throw config_error("model: input_dim must be >= 1");
    for (Index h : hidden_dims) {
      if (h < 1) throw config_error("model: hidden dims must be >= 1");
    }
  }
};

}  // namespace faun

#endif  // FAUN_TYPES_HPP
