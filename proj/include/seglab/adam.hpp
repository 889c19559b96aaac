#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "seglab/error.hpp"
#include "seglab/graph.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    require(lr > 0, ErrorKind::Config, "learning rate must be positive");
    require(beta1 >= 0 && beta1 < 1, ErrorKind::Config, "beta1 outside [0,1)");
    require(beta2 >= 0 && beta2 < 1, ErrorKind::Config, "beta2 outside [0,1)");
    require(eps > 0, ErrorKind::Config, "adam eps must be positive");
  }
};

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::int64_t t = 0;  // completed steps
};

inline void adam_update(Tensor& p, const Tensor& g, Tensor& m, Tensor& v,
                        std::int64_t t, const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (std::size_t i = 0; i < p.numel(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// One optimiser step over every trainable tensor of the graph, in the fixed
// parameter registration order. Assumes backward() has just run.
inline void adam_step(Graph& g, AdamState& state, const AdamConfig& cfg) {
  state.t += 1;
  for (int pi : g.params()) {
    const Node& n = g.node(pi);
    Tensor& m = state.m[n.id];
    Tensor& v = state.v[n.id];
    if (m.numel() != n.value.numel()) m = Tensor(n.value.shape(), 0.0);
    if (v.numel() != n.value.numel()) v = Tensor(n.value.shape(), 0.0);
    adam_update(g.param_value(pi), n.grad, m, v, state.t, cfg);
  }
}

}  // namespace seglab
