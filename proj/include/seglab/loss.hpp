#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

// Pixel-wise hybrid objective: a cross-entropy part plus a smooth overlap
// part, averaged over batch*height*width and summed over classes. The
// cross-entropy part scores only foreground pixels by default; full_bce
// adds the background term, which is what the training configs ship with
// because foreground-only supervision leaves background pixels without a
// gradient.
struct LossConfig {
  double eps_log = 1e-7;   // floor inside log()
  double eps_dice = 1e-7;  // floor for the overlap denominator
  bool full_bce = false;
  std::vector<double> head_weights;  // empty means every head weighs 1

  void validate() const {
    require(eps_log > 0 && eps_log < 1e-2, ErrorKind::Config,
            "eps_log outside (0, 1e-2)");
    require(eps_dice > 0 && eps_dice < 1e-2, ErrorKind::Config,
            "eps_dice outside (0, 1e-2)");
    for (double w : head_weights)
      require(std::isfinite(w), ErrorKind::Config, "non-finite head weight");
  }
};

namespace lossmath {

// Per-pixel score; the loss negates the average of these. The denominator
// floor only engages when y and p are both near zero, so a perfect
// prediction scores exactly 1 per pixel.
inline double point_term(double y, double p, const LossConfig& cfg) {
  double term = y * std::log(std::max(p, cfg.eps_log));
  if (cfg.full_bce)
    term += (1.0 - y) * std::log(std::max(1.0 - p, cfg.eps_log));
  double denom = y * y + p * p;
  if (denom < cfg.eps_dice) denom = cfg.eps_dice;
  term += 2.0 * y * p / denom;
  return term;
}

inline double point_dterm_dp(double y, double p, const LossConfig& cfg) {
  double d = 0.0;
  if (p >= cfg.eps_log) d += y / p;
  if (cfg.full_bce && (1.0 - p) >= cfg.eps_log) d -= (1.0 - y) / (1.0 - p);
  double denom = y * y + p * p;
  if (denom >= cfg.eps_dice)
    d += 2.0 * y * (y * y - p * p) / (denom * denom);
  else
    d += 2.0 * y / cfg.eps_dice;
  return d;
}

}  // namespace lossmath

inline void check_binary_labels(const Tensor& y, const char* where) {
  for (std::size_t i = 0; i < y.numel(); ++i)
    require(y[i] == 0.0 || y[i] == 1.0, ErrorKind::Label,
            std::string(where) + ": label value " + std::to_string(y[i]) +
                " is not 0 or 1");
}

// Label and prediction are rank-4 NCHW with identical shapes. The average
// runs over batch*height*width; class channels are summed.
inline double hybrid_loss(const Tensor& label, const Tensor& pred,
                          const LossConfig& cfg = {}) {
  cfg.validate();
  check_same_shape(label, pred, "hybrid_loss");
  require(label.rank() == 4, ErrorKind::Shape,
          "hybrid_loss expects rank-4 tensors, got " + shape_str(label.shape()));
  check_binary_labels(label, "hybrid_loss");
  const double n = double(label.extent(0) * label.extent(2) * label.extent(3));
  double acc = 0.0;
  for (std::size_t i = 0; i < label.numel(); ++i)
    acc += lossmath::point_term(label[i], pred[i], cfg);
  return -acc / n;
}

// Weighted sum of per-head losses. An empty weight list weighs every head 1.
inline double total_loss(const Tensor& label, const std::vector<Tensor>& heads,
                         const LossConfig& cfg = {}) {
  require(!heads.empty(), ErrorKind::Shape, "total_loss with zero heads");
  require(cfg.head_weights.empty() || cfg.head_weights.size() == heads.size(),
          ErrorKind::Config,
          "head_weights length " + std::to_string(cfg.head_weights.size()) +
              " does not match head count " + std::to_string(heads.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    double w = cfg.head_weights.empty() ? 1.0 : cfg.head_weights[i];
    acc += w * hybrid_loss(label, heads[i], cfg);
  }
  return acc;
}

}  // namespace seglab
