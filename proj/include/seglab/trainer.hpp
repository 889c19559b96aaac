#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "seglab/adam.hpp"
#include "seglab/arch.hpp"
#include "seglab/checkpoint.hpp"
#include "seglab/data.hpp"
#include "seglab/error.hpp"
#include "seglab/graph.hpp"
#include "seglab/loss.hpp"
#include "seglab/metrics.hpp"
#include "seglab/rng.hpp"

namespace seglab {

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 7;
  LossConfig loss;

  void validate() const {
    adam.validate();
    loss.validate();
    require(batch_size >= 1, ErrorKind::Config, "batch_size must be positive");
    require(max_epochs >= 1, ErrorKind::Config, "max_epochs must be positive");
    require(patience >= 1, ErrorKind::Config, "patience must be positive");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::vector<double> head_val_losses;  // per supervised head, ascending stage
  double val_iou = 0.0;                 // mean per-image IoU, head-averaged map
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
  std::string stop_reason;  // "early_stop" or "max_epochs"
  std::vector<int> head_stages;
};

namespace detail {

// [B,C,H,W] -> one sample [C,H,W]
inline Tensor image_slice(const Tensor& batch, std::size_t b) {
  const Shape& s = batch.shape();
  Tensor out(Shape{s[1], s[2], s[3]});
  const std::size_t n = s[1] * s[2] * s[3];
  std::copy(batch.data() + b * n, batch.data() + (b + 1) * n, out.data());
  return out;
}

inline std::map<std::string, Tensor> snapshot_params(const Graph& g) {
  std::map<std::string, Tensor> out;
  for (int p : g.params()) out[g.node(p).id] = g.value(p);
  return out;
}

inline void restore_params(Graph& g, const std::map<std::string, Tensor>& src,
                           const char* context) {
  for (int p : g.params()) {
    const std::string& name = g.node(p).id;
    auto it = src.find(name);
    require(it != src.end(), ErrorKind::Compat,
            std::string(context) + ": missing parameter " + name);
    require(it->second.shape() == g.value(p).shape(), ErrorKind::Compat,
            std::string(context) + ": parameter " + name + " shape mismatch");
    g.param_value(p) = it->second;
  }
}

inline std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::size_t>& order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    const std::size_t end = std::min(order.size(), at + batch_size);
    out.emplace_back(order.begin() + long(at), order.begin() + long(end));
  }
  return out;
}

}  // namespace detail

// Attach one pixel-loss node per supervised head plus their weighted sum.
// The total-loss node is named "loss"; per-head nodes "loss@X^{0,j}".
inline int attach_losses(Network& net, const LossConfig& loss_cfg) {
  Graph& g = net.graph;
  const ArchSpec& spec = net.spec;
  g.placeholder("label", Shape{0, spec.classes, 0, 0});
  require(loss_cfg.head_weights.empty() ||
              loss_cfg.head_weights.size() == net.heads.size(),
          ErrorKind::Config,
          "head_weights length " + std::to_string(loss_cfg.head_weights.size()) +
              " does not match " + std::to_string(net.heads.size()) + " heads");
  std::vector<int> terms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < net.heads.size(); ++i) {
    const int j = net.heads[i];
    terms.push_back(g.hybrid_loss_node("loss@X^{0," + std::to_string(j) + "}",
                                       g.must_find("label"),
                                       g.must_find(head_name(j)), loss_cfg));
    weights.push_back(loss_cfg.head_weights.empty() ? 1.0
                                                    : loss_cfg.head_weights[i]);
  }
  return g.weighted_sum("loss", terms, weights);
}

// Mini-batch descent over the train split, early stopping on the val-split
// total loss. Epoch e shuffles with the child stream (seed, shuffle, e), so
// a resumed run replays the exact batch sequence the original would have.
inline TrainResult train(const ArchSpec& spec, const Dataset& data,
                         const TrainConfig& cfg,
                         const Checkpoint* resume = nullptr) {
  spec.validate();
  cfg.validate();
  const std::vector<std::size_t> train_idx = data.split_indices("train");
  const std::vector<std::size_t> val_idx = data.split_indices("val");
  require(!train_idx.empty(), ErrorKind::Data, "dataset has no train split");
  require(!val_idx.empty(), ErrorKind::Data, "dataset has no val split");

  Network net = build(spec, cfg.seed);
  const int loss_node = attach_losses(net, cfg.loss);
  Graph& g = net.graph;

  AdamState opt;
  Checkpoint ck;
  ck.spec = spec;
  ck.seed = cfg.seed;
  std::size_t start_epoch = 0;
  if (resume) {
    check_same_spec(resume->spec, spec, "resume");
    require(resume->seed == cfg.seed, ErrorKind::Compat,
            "resume seed " + std::to_string(cfg.seed) +
                " differs from checkpoint seed " + std::to_string(resume->seed));
    detail::restore_params(g, resume->current, "resume");
    opt.m = resume->m;
    opt.v = resume->v;
    opt.t = resume->adam_t;
    ck = *resume;
    start_epoch = resume->epochs_done;
  }

  TrainResult result;
  result.head_stages = net.heads;
  result.stop_reason = "max_epochs";

  for (std::size_t epoch = start_epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng = Rng(cfg.seed).split(stream::shuffle).split(epoch);
    shuffle_rng.shuffle(order.begin(), order.end());

    double train_acc = 0.0;
    std::size_t train_n = 0;
    for (const auto& batch : detail::make_batches(order, cfg.batch_size)) {
      auto [input, label] = make_batch(data, batch);
      g.forward({{net.input_name(), input}, {"label", label}});
      const double loss = g.value(loss_node)[0];
      require(std::isfinite(loss), ErrorKind::Training,
              "non-finite loss at epoch " + std::to_string(epoch));
      g.backward(loss_node);
      adam_step(g, opt, cfg.adam);
      train_acc += loss * double(batch.size());
      train_n += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_acc / double(train_n);
    rec.head_val_losses.assign(net.heads.size(), 0.0);
    double val_acc = 0.0, iou_acc = 0.0;
    std::size_t val_n = 0;
    for (const auto& batch : detail::make_batches(val_idx, cfg.batch_size)) {
      auto [input, label] = make_batch(data, batch);
      g.forward({{net.input_name(), input}, {"label", label}});
      const double loss = g.value(loss_node)[0];
      require(std::isfinite(loss), ErrorKind::Training,
              "non-finite validation loss at epoch " + std::to_string(epoch));
      val_acc += loss * double(batch.size());
      for (std::size_t h = 0; h < net.heads.size(); ++h)
        rec.head_val_losses[h] +=
            g.value("loss@X^{0," + std::to_string(net.heads[h]) + "}")[0] *
            double(batch.size());
      Tensor prob = net.head_value(net.heads[0]);
      for (std::size_t h = 1; h < net.heads.size(); ++h)
        prob = add(prob, net.head_value(net.heads[h]));
      prob = scale(prob, 1.0 / double(net.heads.size()));
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const SegMetrics m = segmentation_metrics(detail::image_slice(prob, b),
                                                  detail::image_slice(label, b));
        iou_acc += m.iou;
      }
      val_n += batch.size();
    }
    rec.val_loss = val_acc / double(val_n);
    for (double& h : rec.head_val_losses) h /= double(val_n);
    rec.val_iou = iou_acc / double(val_n);
    result.history.push_back(rec);

    ck.epochs_done = epoch;
    if (rec.val_loss < ck.best_val_loss) {
      ck.best_val_loss = rec.val_loss;
      ck.best_epoch = epoch;
      ck.since_improve = 0;
      ck.best = detail::snapshot_params(g);
    } else {
      ck.since_improve += 1;
    }
    if (ck.since_improve >= cfg.patience) {
      result.stop_reason = "early_stop";
      break;
    }
  }

  ck.current = detail::snapshot_params(g);
  ck.m = opt.m;
  ck.v = opt.v;
  ck.adam_t = opt.t;
  if (ck.best.empty()) ck.best = ck.current;
  result.checkpoint = std::move(ck);
  return result;
}

}  // namespace seglab
