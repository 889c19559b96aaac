// Command-line front end: every library capability behind one binary with
// deterministic, atomically written outputs.
//
// Exit codes: 0 success, 2 bad usage or configuration, 1 runtime failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seglab/seglab.hpp"

namespace fs = std::filesystem;
using namespace seglab;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  bool synthetic = false;
  std::vector<std::string> sets;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
};

RunConfig resolve_config(const GlobalArgs& ga) {
  RunConfig cfg;
  if (!ga.config_path.empty()) cfg.load_file(ga.config_path);
  for (const std::string& pair : ga.sets) {
    const std::size_t eq = pair.find('=');
    require(eq != std::string::npos, ErrorKind::Config,
            "--set expects key=value, got '" + pair + "'");
    cfg.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  if (ga.seed_opt && ga.seed_opt->count() > 0) {
    cfg.set("train.seed", std::to_string(ga.seed));
    cfg.set("data.seed", std::to_string(ga.seed));
  }
  if (ga.trials_opt && ga.trials_opt->count() > 0)
    cfg.set("study.trials", std::to_string(ga.trials));
  if (ga.synthetic) cfg.set("data.source", "synthetic");
  return cfg;
}

void write_resolved(const RunConfig& cfg, const fs::path& out) {
  write_text_atomic(out / "config.resolved", cfg.echo());
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------- summary

int cmd_summary(const RunConfig& cfg, const fs::path& out) {
  const ArchSpec spec = cfg.arch();
  Network net = build(spec, cfg.get_u64("train.seed"));
  const std::string text = summary_text(net);
  write_resolved(cfg, out);
  write_text_atomic(out / "summary.txt", text);
  write_text_atomic(out / "summary.csv", summary_csv(net));
  write_text_atomic(out / "arch.dot", to_dot(net));
  std::cout << text;
  std::cout << "wrote " << (out / "summary.csv").string() << ", "
            << (out / "arch.dot").string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ train

std::string history_csv(const TrainResult& res) {
  std::vector<std::string> header = {"epoch", "train_loss", "val_loss", "val_iou"};
  for (int j : res.head_stages) header.push_back("val_loss_head" + std::to_string(j));
  std::vector<std::vector<std::string>> rows;
  for (const EpochRecord& r : res.history) {
    std::vector<std::string> row = {std::to_string(r.epoch), fmt_num(r.train_loss),
                                    fmt_num(r.val_loss), fmt_num(r.val_iou)};
    for (double h : r.head_val_losses) row.push_back(fmt_num(h));
    rows.push_back(std::move(row));
  }
  return to_csv(header, rows);
}

int cmd_train(const RunConfig& cfg, const fs::path& out,
              const std::string& resume_path) {
  const ArchSpec spec = cfg.arch();
  const TrainConfig tcfg = cfg.train();
  write_resolved(cfg, out);
  const Dataset data = cfg.dataset();

  Checkpoint resume_ck;
  const Checkpoint* resume = nullptr;
  if (!resume_path.empty()) {
    resume_ck = load_checkpoint(resume_path);
    resume = &resume_ck;
  }

  const auto start = std::chrono::steady_clock::now();
  TrainResult res = train(spec, data, tcfg, resume);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_checkpoint(out / "checkpoint.nnck", res.checkpoint);
  write_text_atomic(out / "history.csv", history_csv(res));

  if (!res.history.empty()) {
    ChartSpec chart;
    chart.title = "training curves";
    chart.x_label = "epoch";
    chart.y_label = "loss";
    ChartSeries tr{"train_loss", {}}, va{"val_loss", {}};
    for (const EpochRecord& r : res.history) {
      chart.xs.push_back(double(r.epoch));
      tr.ys.push_back(r.train_loss);
      va.ys.push_back(r.val_loss);
    }
    chart.series = {tr, va};
    write_text_atomic(out / "curves.svg", line_chart_svg(chart));
  }

  std::ostringstream rep;
  rep << "stop_reason=" << res.stop_reason << "\n";
  rep << "epochs_done=" << res.checkpoint.epochs_done << "\n";
  rep << "best_epoch=" << res.checkpoint.best_epoch << "\n";
  rep << "best_val_loss=" << fmt_num(res.checkpoint.best_val_loss) << "\n";
  rep << "params=" << res.checkpoint.best.size() << " tensors, "
      << [&] {
           std::size_t n = 0;
           for (const auto& [k, t] : res.checkpoint.best) n += t.numel();
           return n;
         }()
      << " values\n";
  write_text_atomic(out / "train_report.txt", rep.str());

  std::cout << "trained " << variant_name(spec.variant) << " depth " << spec.depth
            << ": " << res.checkpoint.epochs_done << " epochs ("
            << res.stop_reason << "), best epoch " << res.checkpoint.best_epoch
            << ", best val loss " << fmt_num(res.checkpoint.best_val_loss) << ", "
            << fmt_num(seconds) << "s\n";
  std::cout << "wrote " << (out / "checkpoint.nnck").string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- eval

struct MeanMetrics {
  double iou = 0, dice = 0, sens = 0, spec = 0, f1 = 0, f2 = 0;
  std::size_t count = 0;

  void add(const SegMetrics& m) {
    iou += m.iou;
    dice += m.dice;
    sens += m.sensitivity;
    spec += m.specificity;
    f1 += m.f1;
    f2 += m.f2;
    ++count;
  }
  double mean(double v) const { return count ? v / double(count) : 0.0; }
};

int cmd_eval(const RunConfig& cfg, const fs::path& out,
             const std::string& checkpoint_path) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const PredictMode mode = parse_predict_mode(cfg.get("eval.mode"));
  const double threshold = cfg.get_double("eval.threshold");
  require(threshold > 0.0 && threshold < 1.0, ErrorKind::Config,
          "eval.threshold outside (0,1)");
  const std::string split = cfg.get("eval.split");
  const std::size_t batch = cfg.get_size("train.batch_size");
  const std::size_t patch = cfg.get_size("eval.patch");
  std::size_t stride = cfg.get_size("eval.stride");
  if (patch > 0 && stride == 0) stride = patch / 2;

  write_resolved(cfg, out);
  const Dataset data = cfg.dataset();
  Network full = network_from_checkpoint(ck);
  Network net = mode_network(full, mode);

  std::vector<EvalRow> rows;
  if (patch == 0) {
    rows = evaluate_split(net, data, split, threshold, batch);
  } else {
    // Patch-and-vote inference over each image.
    const std::vector<std::size_t> idx = data.split_indices(split);
    require(!idx.empty(), ErrorKind::Data, "dataset has no " + split + " split");
    for (std::size_t i : idx) {
      const SegSample& s = data.samples[i];
      const Tensor prob =
          sliding_window_predict(net, s.image, patch, patch, stride, stride);
      EvalRow row;
      row.id = s.id;
      row.size_bucket = s.size_bucket;
      row.metrics = segmentation_metrics(prob, s.mask, threshold);
      rows.push_back(std::move(row));
    }
  }

  std::vector<std::vector<std::string>> csv_rows;
  MeanMetrics total;
  std::map<int, MeanMetrics> by_bucket;
  for (const EvalRow& r : rows) {
    const SegMetrics& m = r.metrics;
    csv_rows.push_back({r.id, std::to_string(r.size_bucket), fmt_num(m.iou),
                        fmt_num(m.dice), fmt_num(m.sensitivity),
                        fmt_num(m.specificity), fmt_num(m.f1), fmt_num(m.f2)});
    total.add(m);
    by_bucket[r.size_bucket].add(m);
  }
  write_text_atomic(out / "metrics.csv",
                    to_csv({"id", "size_bucket", "iou", "dice", "sensitivity",
                            "specificity", "f1", "f2"},
                           csv_rows));

  std::vector<std::vector<std::string>> agg = {
      {split, predict_mode_name(mode), std::to_string(total.count),
       fmt_num(total.mean(total.iou)), fmt_num(total.mean(total.dice)),
       fmt_num(total.mean(total.sens)), fmt_num(total.mean(total.spec)),
       fmt_num(total.mean(total.f1)), fmt_num(total.mean(total.f2))}};
  write_text_atomic(out / "aggregate.csv",
                    to_csv({"split", "mode", "images", "mean_iou", "mean_dice",
                            "mean_sensitivity", "mean_specificity", "mean_f1",
                            "mean_f2"},
                           agg));

  if (cfg.get_bool("eval.stratified")) {
    std::vector<std::vector<std::string>> strat;
    for (const auto& [bucket, mm] : by_bucket)
      strat.push_back({std::to_string(bucket), std::to_string(mm.count),
                       fmt_num(mm.mean(mm.iou)), fmt_num(mm.mean(mm.dice))});
    write_text_atomic(out / "stratified.csv",
                      to_csv({"size_bucket", "images", "mean_iou", "mean_dice"},
                             strat));
  }

  std::cout << split << " (" << predict_mode_name(mode) << "): " << total.count
            << " images, mean IoU " << fmt_num(total.mean(total.iou))
            << ", mean Dice " << fmt_num(total.mean(total.dice)) << "\n";
  std::cout << "wrote " << (out / "metrics.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------ prune-study

int cmd_prune_study(const RunConfig& cfg, const fs::path& out,
                    const std::string& checkpoint_path) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const double threshold = cfg.get_double("eval.threshold");
  const std::size_t batch = cfg.get_size("train.batch_size");
  write_resolved(cfg, out);
  const Dataset data = cfg.dataset();
  Network full = network_from_checkpoint(ck);

  const std::vector<PruneStudyRow> rows = prune_study(full, data, threshold, batch);
  // Wall-clock numbers stay out of the CSV so reruns from the same config
  // produce byte-identical tables; timing goes to its own report.
  std::vector<std::vector<std::string>> csv_rows;
  for (const PruneStudyRow& r : rows)
    csv_rows.push_back({std::to_string(r.stage), std::to_string(r.params),
                        fmt_num(r.param_reduction_vs_full), fmt_num(r.test_iou),
                        fmt_num(r.test_dice)});
  write_text_atomic(out / "prune_study.csv",
                    to_csv({"stage", "params", "param_reduction_vs_full",
                            "test_iou", "test_dice"},
                           csv_rows));

  {
    std::ostringstream os;
    os << "single-image inference time by retained stage\n";
    for (const PruneStudyRow& r : rows)
      os << "stage " << r.stage << ": median " << fmt_num(r.seconds_median)
         << " s, mean " << fmt_num(r.seconds_mean) << " s, time reduction vs full "
         << fmt_num(100.0 * r.time_reduction_vs_full) << "%, param reduction "
         << fmt_num(100.0 * r.param_reduction_vs_full) << "%\n";
    write_text_atomic(out / "prune_timing.txt", os.str());
  }

  ChartSpec acc;
  acc.title = "accuracy by retained stage";
  acc.x_label = "stage";
  acc.y_label = "test IoU";
  ChartSeries iou{"test_iou", {}};
  for (const PruneStudyRow& r : rows) {
    acc.xs.push_back(double(r.stage));
    iou.ys.push_back(r.test_iou);
  }
  acc.series = {iou};
  write_text_atomic(out / "prune_iou.svg", line_chart_svg(acc));

  ChartSpec cost;
  cost.title = "inference cost by retained stage";
  cost.x_label = "stage";
  cost.y_label = "median seconds per image";
  ChartSeries sec{"seconds_median", {}};
  for (const PruneStudyRow& r : rows) {
    cost.xs.push_back(double(r.stage));
    sec.ys.push_back(r.seconds_median);
  }
  cost.series = {sec};
  write_text_atomic(out / "prune_cost.svg", line_chart_svg(cost));

  for (const PruneStudyRow& r : rows)
    std::cout << "stage " << r.stage << ": " << r.params << " params, IoU "
              << fmt_num(r.test_iou) << ", median " << fmt_num(r.seconds_median)
              << " s/image\n";
  std::cout << "wrote " << (out / "prune_study.csv").string() << "\n";
  return 0;
}

// -------------------------------------------------------------- gradcheck

// Central differences are only meaningful where the function is smooth, so
// every probe runs at one fixed, known-smooth point: rectifier inputs are
// kept clear of their kink and pool windows have strict maxima at step size
// epsilon. The configured seed is deliberately not used here.
constexpr std::uint64_t kProbeSeed = 1001;

Tensor probe_normal(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_normal();
  return t;
}

Tensor probe_unit(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_unit();
  return t;
}

Tensor probe_binary(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = rng.next_below(2) ? 1.0 : 0.0;
  return t;
}

using ProbeFn = std::function<GradCheckReport(double, std::size_t, double)>;

GradCheckReport probe(Graph& g, const std::string& root,
                      const std::map<std::string, Tensor>& feeds, double tol,
                      std::size_t coords, double eps) {
  return finite_diff_check(g, root, feeds,
                           Rng(kProbeSeed).split(stream::gradcheck), tol,
                           coords, eps);
}

std::vector<std::pair<std::string, ProbeFn>> op_probes(const LossConfig& lcfg) {
  std::vector<std::pair<std::string, ProbeFn>> cases;
  cases.emplace_back("conv2d", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 1);
    int x = g.parameter("x", probe_normal(Shape{1, 2, 5, 6}, rng));
    int k = g.parameter("k", probe_normal(Shape{3, 2, 3, 3}, rng));
    int b = g.parameter("b", probe_normal(Shape{3}, rng));
    g.sum_all("s", g.conv2d("c", x, k, b));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("upconv2", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 2);
    int x = g.parameter("x", probe_normal(Shape{1, 3, 3, 3}, rng));
    int k = g.parameter("k", probe_normal(Shape{3, 2, 2, 2}, rng));
    int b = g.parameter("b", probe_normal(Shape{2}, rng));
    g.sum_all("s", g.upconv2("u", x, k, b));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("maxpool2", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 3);
    int x = g.parameter("x", probe_normal(Shape{1, 2, 6, 6}, rng));
    int w = g.parameter("w", probe_normal(Shape{1, 2, 3, 3}, rng));
    g.sum_all("s", g.mul("m", g.maxpool2("p", x), w));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("relu", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 4);
    Tensor v(Shape{40});
    for (std::size_t i = 0; i < v.numel(); ++i)
      v[i] = (0.1 + 0.9 * rng.next_unit()) * (rng.next_below(2) ? 1.0 : -1.0);
    int x = g.parameter("x", v);
    int w = g.parameter("w", probe_normal(Shape{40}, rng));
    g.sum_all("s", g.mul("m", g.relu("r", x), w));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("sigmoid", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 5);
    int x = g.parameter("x", probe_normal(Shape{40}, rng));
    g.sum_all("s", g.sigmoid("sg", x));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("arith", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 6);
    int a = g.parameter("a", probe_normal(Shape{20}, rng));
    int b = g.parameter("b", probe_normal(Shape{20}, rng));
    int c = g.parameter("c", probe_normal(Shape{20}, rng));
    int prod = g.mul("prod", g.sub("diff", g.add("sum", a, b), c), b);
    g.sum_all("s", g.scale("sc", prod, 0.37));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("concat", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 7);
    int a = g.parameter("a", probe_normal(Shape{1, 2, 3, 3}, rng));
    int b = g.parameter("b", probe_normal(Shape{1, 3, 3, 3}, rng));
    int w = g.parameter("w", probe_normal(Shape{1, 5, 3, 3}, rng));
    g.sum_all("s", g.mul("m", g.concat("cat", {a, b}), w));
    return probe(g, "s", {}, tol, n, eps);
  });
  cases.emplace_back("weighted_sum", [](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 8);
    int a = g.parameter("a", Tensor::scalar(rng.next_normal()));
    int b = g.parameter("b", Tensor::scalar(rng.next_normal()));
    g.weighted_sum("ws", {g.sum_all("sa", a), g.sum_all("sb", b)}, {0.3, 1.7});
    return probe(g, "ws", {}, tol, n, eps);
  });
  cases.emplace_back("loss", [lcfg](double tol, std::size_t n, double eps) {
    Graph g;
    Rng rng(kProbeSeed + 9);
    int z = g.parameter("z", probe_normal(Shape{1, 1, 4, 4}, rng));
    int p = g.sigmoid("p", z);
    int label = g.placeholder("label", Shape{1, 1, 4, 4});
    LossConfig pixel = lcfg;
    pixel.head_weights.clear();  // single head here
    g.hybrid_loss_node("L", label, p, pixel);
    Tensor y = probe_binary(Shape{1, 1, 4, 4}, rng);
    return probe(g, "L", {{"label", y}}, tol, n, eps);
  });
  return cases;
}

int cmd_gradcheck(const RunConfig& cfg, const fs::path& out, double tolerance,
                  std::size_t coords, double epsilon, const std::string& op) {
  std::ostringstream os;
  bool all_pass = true;
  auto report = [&](const std::string& name, const GradCheckReport& rep) {
    os << name << ": coords=" << rep.coords_checked
       << " max_error=" << fmt_num(rep.max_error) << " worst=" << rep.worst.param
       << "[" << rep.worst.index << "] result="
       << (rep.pass ? "pass" : "fail") << "\n";
    all_pass = all_pass && rep.pass;
  };

  bool matched = false;
  for (const auto& [name, fn] : op_probes(cfg.loss())) {
    if (!op.empty() && op != name) continue;
    matched = true;
    report("op=" + name, fn(tolerance, coords, epsilon));
  }
  require(op.empty() || matched, ErrorKind::Config,
          "unknown op '" + op +
              "' (conv2d, upconv2, maxpool2, relu, sigmoid, arith, concat, "
              "weighted_sum, loss)");

  if (op.empty()) {
    // whole net: shrunken proxy of the configured variant, since the check
    // needs two forward passes per probed coordinate
    ArchSpec spec;
    spec.variant = parse_variant(cfg.get("arch.variant"));
    spec.depth = 2;
    spec.widths = {4, 8, 16};
    spec.classes = cfg.get_size("arch.classes");
    spec.deep_supervision = spec.variant != Variant::Unet;
    spec.in_channels = cfg.get_size("arch.in_channels");
    spec.in_height = 16;
    spec.in_width = 16;
    spec.validate();

    Network net = build(spec, kProbeSeed);
    attach_losses(net, cfg.loss());
    Rng feed_rng = Rng(kProbeSeed).split(stream::data);
    const std::map<std::string, Tensor> feeds = {
        {"input", probe_unit(Shape{2, spec.in_channels, 16, 16}, feed_rng)},
        {"label", probe_binary(Shape{2, spec.classes, 16, 16}, feed_rng)}};
    GradCheckReport rep = finite_diff_check(
        net.graph, "loss", feeds, Rng(kProbeSeed).split(stream::gradcheck),
        tolerance, coords, epsilon);
    report(std::string("net=") + variant_name(spec.variant), rep);
  }

  os << "tolerance=" << fmt_num(tolerance) << "\n";
  os << "result=" << (all_pass ? "pass" : "fail") << "\n";
  write_resolved(cfg, out);
  write_text_atomic(out / "gradcheck.txt", os.str());
  std::cout << os.str();
  return all_pass ? 0 : 1;
}

// ----------------------------------------------------------------- ablate

int cmd_ablate(const RunConfig& cfg, const fs::path& out) {
  const ArchSpec base = cfg.arch();
  const TrainConfig tcfg = cfg.train();
  const std::size_t trials = cfg.get_size("study.trials");
  write_resolved(cfg, out);
  const Dataset data = cfg.dataset();

  const std::vector<AblationRow> rows = run_ablation(base, data, tcfg, trials);
  // Deterministic columns only; wall-clock training times go to timings.txt.
  std::vector<std::vector<std::string>> csv_rows;
  for (const AblationRow& r : rows)
    csv_rows.push_back({r.label, std::to_string(r.trial), std::to_string(r.seed),
                        std::to_string(r.params), fmt_num(r.test_iou),
                        fmt_num(r.test_dice), std::to_string(r.best_epoch)});
  write_text_atomic(out / "ablation.csv",
                    to_csv({"variant", "trial", "seed", "params", "test_iou",
                            "test_dice", "best_epoch"},
                           csv_rows));
  {
    std::ostringstream os;
    os << "training wall-clock seconds per trial\n";
    for (const AblationRow& r : rows)
      os << r.label << " trial " << r.trial << ": " << fmt_num(r.train_seconds)
         << " s\n";
    write_text_atomic(out / "timings.txt", os.str());
  }

  // Per-variant mean and sample s.d. of the test metrics.
  {
    std::vector<std::string> labels;
    std::map<std::string, std::vector<double>> ious, dices;
    std::map<std::string, std::size_t> params;
    for (const AblationRow& r : rows) {
      if (!ious.count(r.label)) labels.push_back(r.label);
      ious[r.label].push_back(r.test_iou);
      dices[r.label].push_back(r.test_dice);
      params[r.label] = r.params;
    }
    std::vector<std::vector<std::string>> mean_rows;
    for (const std::string& label : labels) {
      const std::vector<double>& iou = ious[label];
      const std::vector<double>& dice = dices[label];
      const double iou_sd = iou.size() > 1 ? stddev_of(iou) : 0.0;
      const double dice_sd = dice.size() > 1 ? stddev_of(dice) : 0.0;
      mean_rows.push_back({label, std::to_string(params[label]),
                           fmt_num(mean_of(iou)), fmt_num(iou_sd),
                           fmt_num(mean_of(dice)), fmt_num(dice_sd)});
    }
    write_text_atomic(out / "variant_means.csv",
                      to_csv({"variant", "params", "mean_iou", "sd_iou",
                              "mean_dice", "sd_dice"},
                             mean_rows));
  }

  const std::string baseline = "unet_d" + std::to_string(base.depth);
  const std::vector<AblationComparison> comps = compare_ablation(rows, baseline);
  std::vector<std::vector<std::string>> comp_rows;
  for (const AblationComparison& c : comps)
    comp_rows.push_back({c.label, c.baseline, fmt_num(c.mean_delta),
                         fmt_num(c.ttest.t), fmt_num(c.ttest.df),
                         fmt_num(c.ttest.p), bool_str(c.ttest.significant)});
  write_text_atomic(out / "comparisons.csv",
                    to_csv({"variant", "baseline", "mean_delta_iou", "t", "df",
                            "p", "significant"},
                           comp_rows));

  // Mean IoU by variant, in grid order.
  {
    std::vector<std::string> labels;
    std::vector<double> means;
    for (const AblationRow& r : rows) {
      if (labels.empty() || labels.back() != r.label) {
        labels.push_back(r.label);
        means.push_back(0.0);
      }
      means.back() += r.test_iou / double(trials);
    }
    ChartSpec chart;
    chart.title = "mean test IoU by variant (grid order)";
    chart.x_label = "variant index";
    chart.y_label = "mean IoU";
    ChartSeries s{"mean_iou", means};
    for (std::size_t i = 0; i < means.size(); ++i) chart.xs.push_back(double(i + 1));
    chart.series = {s};
    write_text_atomic(out / "ablation_iou.svg", line_chart_svg(chart));
  }

  // Optional embedded-vs-isolated harness over the configured stages.
  const std::vector<std::size_t> stages = cfg.get_size_list("study.embed_stages");
  if (!stages.empty()) {
    ArchSpec emb_spec = base;
    emb_spec.variant = Variant::UnetPp;
    emb_spec.deep_supervision = true;
    std::vector<std::vector<std::string>> emb_rows;
    for (std::size_t stage : stages) {
      for (std::size_t t = 0; t < trials; ++t) {
        TrainConfig run_cfg = tcfg;
        run_cfg.seed = Rng(tcfg.seed).split(stream::trial).split(t).next_u64();
        const EmbeddedVsIsolatedRow r =
            embedded_vs_isolated(emb_spec, data, run_cfg, int(stage));
        emb_rows.push_back({std::to_string(r.stage), std::to_string(t),
                            std::to_string(r.seed), fmt_num(r.iou_embedded),
                            fmt_num(r.dice_embedded), fmt_num(r.iou_isolated),
                            fmt_num(r.dice_isolated), fmt_num(r.delta_iou),
                            bool_str(r.structural_equal)});
      }
    }
    write_text_atomic(out / "embedded.csv",
                      to_csv({"stage", "trial", "seed", "iou_embedded",
                              "dice_embedded", "iou_isolated", "dice_isolated",
                              "delta_iou", "structural_equal"},
                             emb_rows));
  }

  std::cout << "ablation: " << rows.size() << " rows over " << trials
            << " trial(s)\n";
  std::cout << "wrote " << (out / "ablation.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- featmap

void save_gray_pgm(const fs::path& path, const Tensor& map) {
  double lo = map[0], hi = map[0];
  for (std::size_t i = 0; i < map.numel(); ++i) {
    lo = std::min(lo, map[i]);
    hi = std::max(hi, map[i]);
  }
  PgmImage img{map.extent(1), map.extent(0), {}};
  img.samples.resize(map.numel());
  for (std::size_t i = 0; i < map.numel(); ++i) {
    const double v = hi > lo ? (map[i] - lo) / (hi - lo) : 0.0;
    img.samples[i] = std::uint16_t(std::lround(v * 65535.0));
  }
  write_pgm(path, img);
}

int cmd_featmap(const RunConfig& cfg, const fs::path& out,
                const std::string& checkpoint_path, const std::string& image_path) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  write_resolved(cfg, out);

  Tensor image;  // [C,H,W]
  if (!image_path.empty()) {
    const PgmImage pgm = read_pgm(image_path);
    image = Tensor(Shape{1, pgm.height, pgm.width});
    for (std::size_t i = 0; i < pgm.samples.size(); ++i)
      image[i] = double(pgm.samples[i]) / 65535.0;
  } else {
    const Dataset data = cfg.dataset();
    const std::vector<std::size_t> idx = data.split_indices("test");
    require(!idx.empty(), ErrorKind::Data, "dataset has no test split");
    image = data.samples[idx[0]].image;
    std::cout << "using test image " << data.samples[idx[0]].id << "\n";
  }

  Network net = network_from_checkpoint(ck);
  Tensor batch(Shape{1, image.extent(0), image.extent(1), image.extent(2)},
               image.vec());
  net.forward_image(batch);

  // Channel-mean activation of every block along the top row, plus the mean
  // head probability map.
  for (int j = 0; j <= net.spec.depth; ++j) {
    if (!node_exists(net.spec.variant, net.spec.depth, 0, j)) continue;
    const Tensor& act = net.graph.value(node_name(0, j));
    const std::size_t C = act.extent(1), H = act.extent(2), W = act.extent(3);
    Tensor map(Shape{H, W}, 0.0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H * W; ++i)
        map[i] += act[(c * H * W) + i] / double(C);
    save_gray_pgm(out / ("featmap_x0_" + std::to_string(j) + ".pgm"), map);
  }
  Tensor prob = net.head_value(net.heads[0]);
  for (std::size_t h = 1; h < net.heads.size(); ++h)
    prob = add(prob, net.head_value(net.heads[h]));
  prob = scale(prob, 1.0 / double(net.heads.size()));
  Tensor prob_map(Shape{prob.extent(2), prob.extent(3)});
  for (std::size_t i = 0; i < prob_map.numel(); ++i) prob_map[i] = prob[i];
  save_gray_pgm(out / "prediction.pgm", prob_map);

  std::cout << "wrote feature maps to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segmentation architecture laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs ga;
  app.add_option("--config", ga.config_path, "key=value config file");
  app.add_option("--out", ga.out_dir, "output directory (default: out)");
  ga.seed_opt = app.add_option("--seed", ga.seed, "override train.seed and data.seed");
  ga.trials_opt = app.add_option("--trials", ga.trials, "override study.trials");
  app.add_flag("--synthetic", ga.synthetic, "force data.source=synthetic");
  app.add_option("--set", ga.sets, "override one config key (key=value), repeatable");

  CLI::App* c_summary = app.add_subcommand("summary", "architecture table, CSV and DOT");
  CLI::App* c_train = app.add_subcommand("train", "train and write a checkpoint");
  std::string resume_path;
  c_train->add_option("--resume", resume_path, "checkpoint to continue from");
  CLI::App* c_eval = app.add_subcommand("eval", "per-image metrics for a checkpoint");
  std::string eval_ck;
  c_eval->add_option("--checkpoint", eval_ck, "checkpoint file")->required();
  CLI::App* c_prune = app.add_subcommand("prune-study", "accuracy/cost per retained stage");
  std::string prune_ck;
  c_prune->add_option("--checkpoint", prune_ck, "checkpoint file")->required();
  CLI::App* c_grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
  double gc_tol = 1e-4, gc_eps = 1e-5;
  std::size_t gc_coords = 200;
  std::string gc_op;
  c_grad->add_option("--tolerance", gc_tol, "max relative error (default 1e-4)");
  c_grad->add_option("--coords", gc_coords, "coordinates to probe (default 200)");
  c_grad->add_option("--epsilon", gc_eps, "finite-difference step (default 1e-5)");
  c_grad->add_option("--op", gc_op, "check a single op instead of everything");
  CLI::App* c_ablate = app.add_subcommand("ablate", "variant grid with repeats and tests");
  CLI::App* c_featmap = app.add_subcommand("featmap", "activation maps along the top row");
  std::string fm_ck, fm_image;
  c_featmap->add_option("--checkpoint", fm_ck, "checkpoint file")->required();
  c_featmap->add_option("--image", fm_image, "16-bit PGM input (default: first test image)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig cfg = resolve_config(ga);
    const fs::path out = ga.out_dir;
    std::error_code ec;
    fs::create_directories(out, ec);
    require(fs::is_directory(out), ErrorKind::Io,
            "cannot create output directory " + out.string());

    if (c_summary->parsed()) return cmd_summary(cfg, out);
    if (c_train->parsed()) return cmd_train(cfg, out, resume_path);
    if (c_eval->parsed()) return cmd_eval(cfg, out, eval_ck);
    if (c_prune->parsed()) return cmd_prune_study(cfg, out, prune_ck);
    if (c_grad->parsed())
      return cmd_gradcheck(cfg, out, gc_tol, gc_coords, gc_eps, gc_op);
    if (c_ablate->parsed()) return cmd_ablate(cfg, out);
    if (c_featmap->parsed()) return cmd_featmap(cfg, out, fm_ck, fm_image);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Spec) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
