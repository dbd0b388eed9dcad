// Test-only reference implementation of the feedforward pass, written with
// plain loops over std::vector so it shares no code path with Mlp.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lander/mlp.hpp"

namespace oracle {

template <typename Scalar>
struct Net {
  std::vector<int> dims;
  std::vector<std::vector<Scalar>> w;  // row-major (out x in)
  std::vector<std::vector<Scalar>> b;
  std::vector<lander::Activation> act;
};

template <typename Scalar>
Net<Scalar> copy_of(const lander::Mlp<Scalar>& m) {
  Net<Scalar> n;
  n.dims = m.layer_dims();
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto& W = m.weights()[l];
    std::vector<Scalar> wl;
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) wl.push_back(W(r, c));
    n.w.push_back(wl);
    n.b.emplace_back(m.biases()[l].data(), m.biases()[l].data() + m.biases()[l].size());
    n.act.push_back(m.activation(l));
  }
  return n;
}

/// Output for one sample; `relu_mask` (optional) receives the sign pattern of
/// every ReLU pre-activation so callers can detect kink crossings.
template <typename Scalar>
std::vector<Scalar> forward(const Net<Scalar>& n, const std::vector<Scalar>& x, std::vector<bool>* relu_mask = nullptr) {
  std::vector<Scalar> a = x;
  for (std::size_t l = 0; l < n.w.size(); ++l) {
    const int in = n.dims[l], out = n.dims[l + 1];
    std::vector<Scalar> z(static_cast<std::size_t>(out));
    for (int r = 0; r < out; ++r) {
      Scalar s = n.b[l][static_cast<std::size_t>(r)];
      for (int c = 0; c < in; ++c) s += n.w[l][static_cast<std::size_t>(r * in + c)] * a[static_cast<std::size_t>(c)];
      switch (n.act[l]) {
        case lander::Activation::Identity: break;
        case lander::Activation::Relu:
          if (relu_mask) relu_mask->push_back(s > 0);
          s = s > 0 ? s : Scalar(0);
          break;
        case lander::Activation::Tanh: s = std::tanh(s); break;
      }
      z[static_cast<std::size_t>(r)] = s;
    }
    a = std::move(z);
  }
  return a;
}

/// sum_k sum_j out_kj * upstream_kj over a batch of column samples.
template <typename Scalar>
Scalar weighted_loss(const Net<Scalar>& n, const std::vector<std::vector<Scalar>>& xs,
                     const std::vector<std::vector<Scalar>>& upstream, std::vector<bool>* mask = nullptr) {
  Scalar loss = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto y = forward(n, xs[k], mask);
    for (std::size_t j = 0; j < y.size(); ++j) loss += y[j] * upstream[k][j];
  }
  return loss;
}

}  // namespace oracle
