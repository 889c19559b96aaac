#pragma once

#include <cstddef>
#include <cstdint>

#include "seglab/error.hpp"
#include "seglab/loss.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Probabilities binarise at `threshold` (strictly greater counts as
// foreground). Counts pool over every element of the pair.
inline ConfusionCounts confusion(const Tensor& pred, const Tensor& label,
                                 double threshold = 0.5) {
  check_same_shape(pred, label, "confusion");
  check_binary_labels(label, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] > threshold;
    const bool y = label[i] != 0.0;
    if (p && y)
      ++c.tp;
    else if (p && !y)
      ++c.fp;
    else if (!p && y)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

struct SegMetrics {
  double iou = 1.0;
  double dice = 1.0;
  double sensitivity = 1.0;
  double specificity = 1.0;
  double f1 = 1.0;
  double f2 = 1.0;
};

// Empty-denominator conventions: a metric whose denominator is zero (both
// prediction and reference empty for that quantity) scores 1, so an image
// with no foreground and no false alarms counts as perfectly segmented.
inline SegMetrics metrics_from_counts(const ConfusionCounts& c) {
  SegMetrics m;
  const double tp = double(c.tp), fp = double(c.fp), tn = double(c.tn),
               fn = double(c.fn);
  if (tp + fp + fn > 0) m.iou = tp / (tp + fp + fn);
  if (2 * tp + fp + fn > 0) m.dice = 2 * tp / (2 * tp + fp + fn);
  if (tp + fn > 0) m.sensitivity = tp / (tp + fn);
  if (tn + fp > 0) m.specificity = tn / (tn + fp);
  m.f1 = m.dice;
  if (5 * tp + 4 * fn + fp > 0) m.f2 = 5 * tp / (5 * tp + 4 * fn + fp);
  return m;
}

inline SegMetrics segmentation_metrics(const Tensor& pred, const Tensor& label,
                                       double threshold = 0.5) {
  return metrics_from_counts(confusion(pred, label, threshold));
}

}  // namespace seglab
