#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seglab/arch.hpp"
#include "seglab/data.hpp"
#include "seglab/error.hpp"
#include "seglab/metrics.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

// Inference either averages every supervised head (ensemble) or first cuts
// the graph down to the requested stage and reads its single head (pruned).
struct PredictMode {
  bool ensemble = true;
  int keep_stage = 0;
};

inline PredictMode parse_predict_mode(const std::string& s) {
  if (s == "ensemble") return {true, 0};
  if (s.rfind("pruned:", 0) == 0) {
    const std::string num = s.substr(7);
    try {
      std::size_t used = 0;
      int k = std::stoi(num, &used);
      require(used == num.size() && k >= 1, ErrorKind::Config, "");
      return {false, k};
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "bad pruned stage in mode '" + s + "'");
    }
  }
  fail(ErrorKind::Config,
       "unknown mode '" + s + "' (expected ensemble or pruned:K)");
}

inline std::string predict_mode_name(const PredictMode& m) {
  return m.ensemble ? "ensemble" : ("pruned:" + std::to_string(m.keep_stage));
}

// The network to actually run for a mode; pruning happens once, up front.
inline Network mode_network(const Network& full, const PredictMode& mode) {
  if (mode.ensemble) return full;
  return prune(full, mode.keep_stage);
}

// Mean probability map over every head of the given network.
inline Tensor predict_probs(Network& net, const Tensor& batch) {
  net.forward_image(batch);
  Tensor prob = net.head_value(net.heads[0]);
  for (std::size_t h = 1; h < net.heads.size(); ++h)
    prob = add(prob, net.head_value(net.heads[h]));
  return scale(prob, 1.0 / double(net.heads.size()));
}

// Cover a [C,H,W] image with the patch grid (tail clamped to the border),
// predict every patch in one batch, and average the per-pixel votes where
// patches overlap.
inline Tensor sliding_window_predict(Network& net, const Tensor& image,
                                     std::size_t patch_h, std::size_t patch_w,
                                     std::size_t stride_h, std::size_t stride_w) {
  require(image.rank() == 3, ErrorKind::Shape,
          "sliding window expects one [C,H,W] image, got " +
              shape_str(image.shape()));
  const std::size_t C = image.extent(0), H = image.extent(1), W = image.extent(2);
  require(patch_h >= 1 && patch_h <= H && patch_w >= 1 && patch_w <= W,
          ErrorKind::Range, "patch does not fit the image");
  require(stride_h >= 1 && stride_w >= 1, ErrorKind::Range, "zero stride");

  std::vector<std::size_t> ys, xs;
  for (std::size_t y = 0;; y += stride_h) {
    if (y + patch_h >= H) {
      ys.push_back(H - patch_h);
      break;
    }
    ys.push_back(y);
  }
  for (std::size_t x = 0;; x += stride_w) {
    if (x + patch_w >= W) {
      xs.push_back(W - patch_w);
      break;
    }
    xs.push_back(x);
  }

  const std::size_t P = ys.size() * xs.size();
  Tensor batch(Shape{P, C, patch_h, patch_w});
  std::size_t p = 0;
  for (std::size_t yi = 0; yi < ys.size(); ++yi)
    for (std::size_t xi = 0; xi < xs.size(); ++xi, ++p)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = 0; y < patch_h; ++y)
          for (std::size_t x = 0; x < patch_w; ++x)
            batch.at4(p, c, y, x) = image[(c * H + ys[yi] + y) * W + xs[xi] + x];

  const Tensor probs = predict_probs(net, batch);
  const std::size_t classes = probs.extent(1);
  Tensor sum(Shape{classes, H, W}, 0.0);
  Tensor votes(Shape{classes, H, W}, 0.0);
  p = 0;
  for (std::size_t yi = 0; yi < ys.size(); ++yi)
    for (std::size_t xi = 0; xi < xs.size(); ++xi, ++p)
      for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t y = 0; y < patch_h; ++y)
          for (std::size_t x = 0; x < patch_w; ++x) {
            const std::size_t at = (c * H + ys[yi] + y) * W + xs[xi] + x;
            sum[at] += probs.at4(p, c, y, x);
            votes[at] += 1.0;
          }
  for (std::size_t i = 0; i < sum.numel(); ++i) sum[i] /= votes[i];
  return sum;
}

struct EvalRow {
  std::string id;
  int size_bucket = 0;
  SegMetrics metrics;
};

// Per-image metrics over one split, batching same-sized images together.
inline std::vector<EvalRow> evaluate_split(Network& net, const Dataset& ds,
                                           const std::string& split,
                                           double threshold,
                                           std::size_t batch_size) {
  const std::vector<std::size_t> idx = ds.split_indices(split);
  require(!idx.empty(), ErrorKind::Data, "dataset has no " + split + " split");
  std::vector<EvalRow> rows;
  for (std::size_t at = 0; at < idx.size(); at += batch_size) {
    const std::size_t end = std::min(idx.size(), at + batch_size);
    std::vector<std::size_t> chunk(idx.begin() + long(at), idx.begin() + long(end));
    auto [input, label] = make_batch(ds, chunk);
    const Tensor probs = predict_probs(net, input);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const SegSample& s = ds.samples[chunk[b]];
      EvalRow row;
      row.id = s.id;
      row.size_bucket = s.size_bucket;
      Tensor prob_one(Shape{probs.extent(1), probs.extent(2), probs.extent(3)});
      const std::size_t n = prob_one.numel();
      std::copy(probs.data() + b * n, probs.data() + (b + 1) * n, prob_one.data());
      row.metrics = segmentation_metrics(prob_one, s.mask, threshold);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline double mean_iou(const std::vector<EvalRow>& rows) {
  double s = 0.0;
  for (const EvalRow& r : rows) s += r.metrics.iou;
  return rows.empty() ? 0.0 : s / double(rows.size());
}

inline double mean_dice(const std::vector<EvalRow>& rows) {
  double s = 0.0;
  for (const EvalRow& r : rows) s += r.metrics.dice;
  return rows.empty() ? 0.0 : s / double(rows.size());
}

}  // namespace seglab
