#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "seglab/arch.hpp"
#include "seglab/checkpoint.hpp"
#include "seglab/data.hpp"
#include "seglab/error.hpp"
#include "seglab/predict.hpp"
#include "seglab/stats.hpp"
#include "seglab/trainer.hpp"

namespace seglab {

namespace detail {

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

// One row per retained stage: cheaper graphs must come out both smaller and
// faster, and the accuracy column shows what that costs. Inference time is
// the median over single-image forward passes, which is robust to the odd
// scheduling hiccup.
struct PruneStudyRow {
  int stage = 0;
  std::size_t params = 0;
  double test_iou = 0.0;
  double test_dice = 0.0;
  double seconds_median = 0.0;
  double seconds_mean = 0.0;
  double time_reduction_vs_full = 0.0;  // 1 - median_k / median_full
  double param_reduction_vs_full = 0.0;
};

inline std::vector<PruneStudyRow> prune_study(const Network& full,
                                              const Dataset& data,
                                              double threshold,
                                              std::size_t batch_size) {
  std::vector<PruneStudyRow> rows;
  const std::vector<std::size_t> test_idx = data.split_indices("test");
  require(!test_idx.empty(), ErrorKind::Data, "dataset has no test split");
  for (int k = 1; k <= full.spec.depth; ++k) {
    Network sub = prune(full, k);
    PruneStudyRow row;
    row.stage = k;
    row.params = param_count(sub);
    std::vector<double> times;
    for (std::size_t i : test_idx) {
      const SegSample& s = data.samples[i];
      Tensor batch(Shape{1, s.image.extent(0), s.image.extent(1), s.image.extent(2)},
                   s.image.vec());
      const auto start = std::chrono::steady_clock::now();
      predict_probs(sub, batch);
      times.push_back(detail::seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    row.seconds_median = times[times.size() / 2];
    for (double t : times) row.seconds_mean += t / double(times.size());
    const std::vector<EvalRow> evals =
        evaluate_split(sub, data, "test", threshold, batch_size);
    row.test_iou = mean_iou(evals);
    row.test_dice = mean_dice(evals);
    rows.push_back(row);
  }
  const double full_time = rows.back().seconds_median;
  const double full_params = double(rows.back().params);
  for (PruneStudyRow& row : rows) {
    if (full_time > 0) row.time_reduction_vs_full = 1.0 - row.seconds_median / full_time;
    if (full_params > 0)
      row.param_reduction_vs_full = 1.0 - double(row.params) / full_params;
  }
  return rows;
}

// Training-time/accuracy grid over the family: the plain encoder-decoder at
// every depth up to the configured one, then the nested variants at full
// depth, with and without deep supervision where that is a free choice.
struct AblationVariant {
  std::string label;
  ArchSpec spec;
};

inline std::vector<AblationVariant> ablation_variants(const ArchSpec& base) {
  std::vector<AblationVariant> out;
  for (int d = 1; d <= base.depth; ++d) {
    ArchSpec s = base;
    s.variant = Variant::Unet;
    s.depth = d;
    s.widths.assign(base.widths.begin(), base.widths.begin() + d + 1);
    s.deep_supervision = false;
    out.push_back({"unet_d" + std::to_string(d), s});
  }
  {
    ArchSpec s = base;
    s.variant = Variant::UnetE;
    s.deep_supervision = true;
    out.push_back({"unet_e", s});
  }
  for (bool ds : {false, true}) {
    ArchSpec s = base;
    s.variant = Variant::UnetPlus;
    s.deep_supervision = ds;
    out.push_back({ds ? "unet_plus_ds" : "unet_plus", s});
  }
  for (bool ds : {false, true}) {
    ArchSpec s = base;
    s.variant = Variant::UnetPp;
    s.deep_supervision = ds;
    out.push_back({ds ? "unet_pp_ds" : "unet_pp", s});
  }
  return out;
}

struct AblationRow {
  std::string label;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t params = 0;
  double test_iou = 0.0;
  double test_dice = 0.0;
  std::size_t best_epoch = 0;
  double train_seconds = 0.0;
};

// Trial t uses the same derived seed across variants, so per-trial pairs are
// directly comparable.
inline std::vector<AblationRow> run_ablation(const ArchSpec& base,
                                             const Dataset& data,
                                             const TrainConfig& cfg,
                                             std::size_t trials) {
  require(trials >= 1, ErrorKind::Config, "trials must be positive");
  std::vector<AblationRow> rows;
  for (const AblationVariant& variant : ablation_variants(base)) {
    for (std::size_t t = 0; t < trials; ++t) {
      TrainConfig run_cfg = cfg;
      run_cfg.seed = Rng(cfg.seed).split(stream::trial).split(t).next_u64();
      AblationRow row;
      row.label = variant.label;
      row.trial = t;
      row.seed = run_cfg.seed;
      const auto start = std::chrono::steady_clock::now();
      TrainResult res = train(variant.spec, data, run_cfg);
      row.train_seconds = detail::seconds_since(start);
      row.best_epoch = res.checkpoint.best_epoch;
      Network net = network_from_checkpoint(res.checkpoint);
      row.params = param_count(net);
      const std::vector<EvalRow> evals =
          evaluate_split(net, data, "test", 0.5, cfg.batch_size);
      row.test_iou = mean_iou(evals);
      row.test_dice = mean_dice(evals);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct AblationComparison {
  std::string label;      // variant compared against the baseline
  std::string baseline;
  double mean_delta = 0.0;  // variant IoU minus baseline IoU
  TTestResult ttest;
};

// Compare every variant's per-trial test IoU against the deepest plain
// encoder-decoder.
inline std::vector<AblationComparison> compare_ablation(
    const std::vector<AblationRow>& rows, const std::string& baseline_label) {
  std::vector<std::string> labels;
  for (const AblationRow& r : rows)
    if (labels.empty() || labels.back() != r.label) labels.push_back(r.label);
  auto iou_of = [&](const std::string& label) {
    std::vector<double> out;
    for (const AblationRow& r : rows)
      if (r.label == label) out.push_back(r.test_iou);
    return out;
  };
  const std::vector<double> base = iou_of(baseline_label);
  require(!base.empty(), ErrorKind::Contract,
          "no ablation rows for baseline " + baseline_label);
  std::vector<AblationComparison> out;
  for (const std::string& label : labels) {
    if (label == baseline_label) continue;
    AblationComparison c;
    c.label = label;
    c.baseline = baseline_label;
    const std::vector<double> v = iou_of(label);
    c.mean_delta = mean_of(v) - mean_of(base);
    if (v.size() >= 2 && base.size() >= 2) c.ttest = welch_ttest(v, base);
    out.push_back(std::move(c));
  }
  return out;
}

// Does a stage-k sub-graph cut from a trained full graph match a same-shape
// network trained on its own? At k = depth the two runs are the same
// training job, so the row is flagged structurally equal.
struct EmbeddedVsIsolatedRow {
  int stage = 0;
  std::uint64_t seed = 0;
  double iou_embedded = 0.0;
  double dice_embedded = 0.0;
  double iou_isolated = 0.0;
  double dice_isolated = 0.0;
  double delta_iou = 0.0;  // embedded minus isolated
  bool structural_equal = false;
};

inline EmbeddedVsIsolatedRow embedded_vs_isolated(const ArchSpec& spec,
                                                  const Dataset& data,
                                                  const TrainConfig& cfg,
                                                  int stage) {
  require(spec.deep_supervision, ErrorKind::Contract,
          "embedded extraction needs deep supervision");
  require(stage >= 1 && stage <= spec.depth, ErrorKind::Range,
          "stage outside 1..depth");

  EmbeddedVsIsolatedRow row;
  row.stage = stage;
  row.seed = cfg.seed;
  row.structural_equal = (stage == spec.depth);

  TrainResult full_res = train(spec, data, cfg);
  Network full = network_from_checkpoint(full_res.checkpoint);
  Network embedded = prune(full, stage);
  const std::vector<EvalRow> emb =
      evaluate_split(embedded, data, "test", 0.5, cfg.batch_size);
  row.iou_embedded = mean_iou(emb);
  row.dice_embedded = mean_dice(emb);

  // The isolated counterpart trains the truncated graph with its single
  // final head; only the row-head wiring rule (unet_e) insists on keeping
  // the auxiliary heads.
  ArchSpec iso_spec = spec;
  iso_spec.depth = stage;
  iso_spec.widths.assign(spec.widths.begin(), spec.widths.begin() + stage + 1);
  iso_spec.deep_supervision = spec.variant == Variant::UnetE;
  TrainResult iso_res = train(iso_spec, data, cfg);
  Network isolated = network_from_checkpoint(iso_res.checkpoint);
  if (isolated.heads.size() > 1) isolated = prune(isolated, stage);
  const std::vector<EvalRow> iso =
      evaluate_split(isolated, data, "test", 0.5, cfg.batch_size);
  row.iou_isolated = mean_iou(iso);
  row.dice_isolated = mean_dice(iso);

  row.delta_iou = row.iou_embedded - row.iou_isolated;
  return row;
}

}  // namespace seglab
