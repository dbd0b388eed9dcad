// Fully connected feedforward network with hand-written reverse mode and Adam.
//
// Samples are stored column-wise: an input batch is a (layer_dims[0] x batch)
// matrix. Weights are (out x in), so each layer computes Z = W * A + b.
// Hidden layers use ReLU; the output layer is either linear (critic) or tanh
// (actor). Mlp<double> is the verification build used by the gradient oracles.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lander/common.hpp"

namespace lander {

enum class Activation { Identity, Relu, Tanh };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::Identity, Activation::Relu, Activation::Tanh})
    if (to_string(a) == s) return a;
  throw FormatError("unknown activation '" + std::string(s) + "'");
}

template <typename Scalar>
struct MlpGradients {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void scale(Scalar s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
  }
};

template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Gradients = MlpGradients<Scalar>;

  Mlp() = default;

  /// Zero-initialized network. `layer_dims` = {inputs, hidden..., outputs}.
  Mlp(std::vector<int> layer_dims, Activation output_activation)
      : dims_(std::move(layer_dims)), output_activation_(output_activation) {
    if (dims_.size() < 2) throw ContractError("Mlp: need at least input and output dims");
    for (int d : dims_)
      if (d <= 0) throw ContractError("Mlp: layer dims must be positive");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      weights_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
      biases_.push_back(Vector::Zero(dims_[l + 1]));
    }
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
      for (Eigen::Index i = 0; i < weights_[l].size(); ++i)
        weights_[l].data()[i] = static_cast<Scalar>(uniform(rng, -bound, bound));
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i)
        biases_[l][i] = static_cast<Scalar>(uniform(rng, -bound, bound));
    }
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  Activation output_activation() const { return output_activation_; }
  Activation activation(std::size_t layer) const {
    return layer + 1 == weights_.size() ? output_activation_ : Activation::Relu;
  }

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  bool parameters_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  /// Stateless forward pass on a batch.
  Matrix forward(const Matrix& input) const {
    check_input(input);
    Matrix a = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * a;
      z.colwise() += biases_[l];
      activate(z, activation(l));
      a = std::move(z);
    }
    return a;
  }

  /// Forward pass that keeps the activations needed by backward().
  const Matrix& forward_cached(const Matrix& input) {
    check_input(input);
    cache_.resize(weights_.size() + 1);
    cache_[0] = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix& z = cache_[l + 1];
      z.noalias() = weights_[l] * cache_[l];
      z.colwise() += biases_[l];
      activate(z, activation(l));
    }
    return cache_.back();
  }

  bool has_cache() const { return !cache_.empty(); }
  void clear_cache() { cache_.clear(); }

  /// Gradients of sum(output .* upstream) with respect to every parameter,
  /// using the activations of the last forward_cached() call. When
  /// `input_grad` is given it receives the gradient with respect to the input.
  void backward(const Matrix& upstream, Gradients* grads, Matrix* input_grad = nullptr) {
    if (cache_.empty()) throw ContractError("Mlp::backward: no cached forward pass");
    if (upstream.rows() != output_size() || upstream.cols() != cache_.back().cols())
      throw ContractError("Mlp::backward: upstream gradient shape mismatch");
    if (grads) {
      grads->weights.resize(weights_.size());
      grads->biases.resize(weights_.size());
    }
    delta_ = upstream;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      activation_backward(delta_, cache_[l + 1], activation(l));
      if (grads) {
        grads->weights[l].noalias() = delta_ * cache_[l].transpose();
        grads->biases[l] = delta_.rowwise().sum();
      }
      if (l > 0 || input_grad) {
        scratch_.noalias() = weights_[l].transpose() * delta_;
        delta_.swap(scratch_);
      }
    }
    if (input_grad) *input_grad = delta_;
  }

  /// this <- tau * online + (1 - tau) * this
  void polyak_update(const Mlp& online, Scalar tau) {
    check_same_shape(online);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] = tau * online.weights_[l] + (Scalar(1) - tau) * weights_[l];
      biases_[l] = tau * online.biases_[l] + (Scalar(1) - tau) * biases_[l];
    }
  }

  void copy_parameters_from(const Mlp& other) {
    check_same_shape(other);
    weights_ = other.weights_;
    biases_ = other.biases_;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
      g.biases.push_back(Vector::Zero(biases_[l].size()));
    }
    return g;
  }

  /// Row-major flattening of each layer's weights followed by its biases.
  std::vector<Scalar> flatten() const {
    std::vector<Scalar> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) out.push_back(weights_[l](r, c));
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out.push_back(biases_[l][i]);
    }
    return out;
  }

  void unflatten(std::span<const Scalar> flat) {
    if (flat.size() != parameter_count()) throw FormatError("Mlp::unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) weights_[l](r, c) = flat[k++];
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = flat[k++];
    }
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(dims_, output_activation_);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.weights()[l] = weights_[l].template cast<Other>();
      out.biases()[l] = biases_[l].template cast<Other>();
    }
    return out;
  }

 private:
  static void activate(Matrix& z, Activation a) {
    switch (a) {
      case Activation::Identity: break;
      case Activation::Relu: z = z.cwiseMax(Scalar(0)); break;
      case Activation::Tanh: z = z.array().tanh().matrix(); break;
    }
  }

  // delta <- delta * f'(z), expressed through the activation output y = f(z).
  static void activation_backward(Matrix& delta, const Matrix& y, Activation a) {
    switch (a) {
      case Activation::Identity: break;
      case Activation::Relu: delta = (y.array() > Scalar(0)).select(delta, Scalar(0)); break;
      case Activation::Tanh: delta = (delta.array() * (Scalar(1) - y.array().square())).matrix(); break;
    }
  }

  void check_input(const Matrix& input) const {
    if (input.rows() != input_size())
      throw ContractError("Mlp: input has " + std::to_string(input.rows()) + " rows, expected " +
                          std::to_string(input_size()));
  }

  void check_same_shape(const Mlp& other) const {
    if (other.dims_ != dims_) throw ContractError("Mlp: layer dims differ");
  }

  std::vector<int> dims_;
  Activation output_activation_ = Activation::Identity;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::vector<Matrix> cache_;  // cache_[0] = input, cache_[l+1] = output of layer l
  Matrix delta_, scratch_;
};

/// Adam with bias correction.
template <typename Scalar>
class Adam {
 public:
  using Matrix = typename Mlp<Scalar>::Matrix;
  using Vector = typename Mlp<Scalar>::Vector;

  struct Options {
    Scalar learning_rate = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);
  };

  Adam() = default;
  Adam(const Mlp<Scalar>& net, Options opts) : opts_(opts) {
    m_ = net.zero_gradients();
    v_ = net.zero_gradients();
  }

  /// One descent step along `grads`.
  void step(Mlp<Scalar>& net, const MlpGradients<Scalar>& grads) {
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(opts_.beta1, static_cast<Scalar>(t_));
    const Scalar c2 = Scalar(1) - std::pow(opts_.beta2, static_cast<Scalar>(t_));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      apply(net.weights()[l], m_.weights[l], v_.weights[l], grads.weights[l], c1, c2);
      apply(net.biases()[l], m_.biases[l], v_.biases[l], grads.biases[l], c1, c2);
    }
  }

  long steps() const { return t_; }
  void set_steps(long t) { t_ = t; }
  const Options& options() const { return opts_; }
  MlpGradients<Scalar>& first_moment() { return m_; }
  MlpGradients<Scalar>& second_moment() { return v_; }
  const MlpGradients<Scalar>& first_moment() const { return m_; }
  const MlpGradients<Scalar>& second_moment() const { return v_; }

 private:
  template <typename P>
  void apply(P& param, P& m, P& v, const P& g, Scalar c1, Scalar c2) const {
    m = opts_.beta1 * m + (Scalar(1) - opts_.beta1) * g;
    v = (opts_.beta2 * v.array() + (Scalar(1) - opts_.beta2) * g.array().square()).matrix();
    param.array() -= opts_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opts_.epsilon);
  }

  Options opts_;
  MlpGradients<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace lander
