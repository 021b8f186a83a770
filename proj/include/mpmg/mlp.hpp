#pragma once

// Fully connected ReLU network with a hand-written backward pass and Adam.
// Samples are columns: an input batch is (input_dim x batch).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mpmg/errors.hpp"
#include "mpmg/seeding.hpp"

namespace mpmg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix weight;  // (out x in)
  Vector bias;    // (out)
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  bool relu_output = false;  // apply ReLU after the last layer too
  std::uint64_t version = 0; // bumped by every parameter update

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }

  bool AllFinite() const {
    for (const auto& l : layers) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  std::size_t ParameterCount() const {
    std::size_t count = 0;
    for (const auto& l : layers) count += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return count;
  }
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline MlpParams MakeMlp(const std::vector<int>& sizes, bool relu_output, Rng& rng) {
  if (sizes.size() < 2) throw ContractError("an MLP needs at least an input and an output size");
  MlpParams params;
  params.relu_output = relu_output;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

inline MlpParams ZeroLike(const MlpParams& params) {
  MlpParams z = params;
  for (auto& l : z.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return z;
}

struct MlpCache {
  std::vector<Matrix> inputs;       // activation entering layer l
  std::vector<Matrix> preactivations;
  const MlpParams* owner = nullptr;
  std::uint64_t version = 0;
};

inline bool IsHidden(const MlpParams& p, std::size_t l) {
  return l + 1 < p.layers.size() || p.relu_output;
}

inline Matrix MlpForward(const MlpParams& params, const Matrix& input, MlpCache* cache = nullptr) {
  if (input.rows() != params.input_dim()) {
    throw ContractError("MLP expects input dim " + std::to_string(params.input_dim()) + ", got " +
                        std::to_string(input.rows()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
    cache->owner = &params;
    cache->version = params.version;
  }
  Matrix x = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = layer.weight * x;
    z.colwise() += layer.bias;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preactivations.push_back(z);
    }
    x = IsHidden(params, l) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Matrix input_grad;
};

// Gradients of a scalar loss given dLoss/dOutput (same shape as the output).
inline MlpGradients MlpBackward(const MlpParams& params, const MlpCache& cache, const Matrix& output_grad) {
  if (cache.owner != &params || cache.version != params.version ||
      cache.inputs.size() != params.layers.size()) {
    throw ContractError("MLP cache does not belong to the current parameters");
  }
  if (output_grad.rows() != params.output_dim() || output_grad.cols() != cache.inputs.front().cols()) {
    throw ContractError("output gradient shape does not match the cached forward pass");
  }
  MlpGradients grads;
  grads.layers.resize(params.layers.size());
  Matrix delta = output_grad;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    if (IsHidden(params, l)) {
      delta = delta.cwiseProduct((cache.preactivations[l].array() > 0.0).cast<double>().matrix());
    }
    grads.layers[l].weight = delta * cache.inputs[l].transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    delta = params.layers[l].weight.transpose() * delta;
  }
  grads.input_grad = std::move(delta);
  return grads;
}

inline void AccumulateGradients(MlpGradients& into, const MlpGradients& from) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    into.layers[l].weight += from.layers[l].weight;
    into.layers[l].bias += from.layers[l].bias;
  }
}

inline void CheckFinite(const MlpParams& params, const char* what) {
  if (!params.AllFinite()) throw NumericError(std::string("non-finite parameters in ") + what);
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const MlpParams& params, AdamConfig config)
      : config_(config), m_(ZeroLike(params).layers), v_(ZeroLike(params).layers) {}

  void Step(MlpParams& params, const MlpGradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      Update(params.layers[l].weight, grads.layers[l].weight, m_[l].weight, v_[l].weight, c1, c2);
      Update(params.layers[l].bias, grads.layers[l].bias, m_[l].bias, v_[l].bias, c1, c2);
    }
    ++params.version;
  }

 private:
  template <typename P>
  void Update(P& param, const P& grad, P& m, P& v, double c1, double c2) const {
    m = config_.beta1 * m + (1.0 - config_.beta1) * grad;
    v = config_.beta2 * v + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
    param.array() -= config_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
  }

  AdamConfig config_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  std::int64_t t_ = 0;
};

inline Matrix ColumnFrom(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace mpmg
