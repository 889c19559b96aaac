#pragma once

#include <climits>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/arch.hpp"
#include "seglab/data.hpp"
#include "seglab/error.hpp"
#include "seglab/loss.hpp"
#include "seglab/serialize.hpp"
#include "seglab/trainer.hpp"

namespace seglab {

// Flat key=value run configuration. Every key has a default; a file or a
// command-line override may only touch keys that exist, so a typo fails
// loudly instead of silently running with defaults.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"arch.variant", "unet_pp"},
        {"arch.depth", "3"},
        {"arch.widths", "8,16,32,64"},
        {"arch.classes", "1"},
        {"arch.deep_supervision", "true"},
        {"arch.in_channels", "1"},
        {"arch.in_height", "64"},
        {"arch.in_width", "64"},
        {"train.lr", "0.0003"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.eps", "1e-8"},
        {"train.batch_size", "8"},
        {"train.max_epochs", "30"},
        {"train.patience", "5"},
        {"train.seed", "7"},
        {"loss.eps_log", "1e-7"},
        {"loss.eps_dice", "1e-7"},
        {"loss.full_bce", "false"},
        {"loss.head_weights", ""},
        {"data.source", "synthetic"},
        {"data.dir", ""},
        {"data.count", "200"},
        {"data.height", "64"},
        {"data.width", "64"},
        {"data.blobs_min", "1"},
        {"data.blobs_max", "4"},
        {"data.radius_min", "3"},
        {"data.radius_max", "12"},
        {"data.deform", "0.3"},
        {"data.noise_std", "0.02"},
        {"data.multi_scale", "true"},
        {"data.seed", "7"},
        {"eval.threshold", "0.5"},
        {"eval.mode", "ensemble"},
        {"eval.split", "test"},
        {"eval.stratified", "false"},
        {"eval.patch", "0"},
        {"eval.stride", "0"},
        {"study.trials", "5"},
        {"study.embed_stages", ""},
    };
    return table;
  }

  RunConfig() : kv_(defaults()) {}

  void set(const std::string& key, const std::string& value) {
    require(kv_.count(key) == 1, ErrorKind::Config, "unknown config key '" + key + "'");
    kv_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = kv_.find(key);
    require(it != kv_.end(), ErrorKind::Config, "unknown config key '" + key + "'");
    return it->second;
  }

  // Lines of "key = value"; '#' starts a comment, blank lines are skipped.
  void load_file(const std::filesystem::path& path) {
    std::istringstream is(read_text(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      require(eq != std::string::npos, ErrorKind::Config,
              path.string() + ":" + std::to_string(line_no) + ": expected key=value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      try {
        set(key, value);
      } catch (const Error&) {
        fail(ErrorKind::Config, path.string() + ":" + std::to_string(line_no) +
                                    ": unknown config key '" + key + "'");
      }
    }
  }

  // Canonical form: sorted key=value lines. Feeding this back in reproduces
  // the run exactly.
  std::string echo() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
  }

  std::uint64_t get_u64(const std::string& key) const {
    return std::uint64_t(parse_ll(key, 0));
  }
  std::size_t get_size(const std::string& key) const {
    const long long v = parse_ll(key, 0);
    return std::size_t(v);
  }
  int get_int(const std::string& key) const { return int(parse_ll(key)); }

  double get_double(const std::string& key) const {
    const std::string& s = get(key);
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      require(used == s.size(), ErrorKind::Config, "");
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::Config, key + ": '" + s + "' is not a number");
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    fail(ErrorKind::Config, key + ": '" + s + "' is not a boolean");
  }

  std::vector<std::size_t> get_size_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const std::string& tok : split_csv(get(key)))
      out.push_back(std::size_t(parse_ll_value(key, tok, 0)));
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : split_csv(get(key))) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        fail(ErrorKind::Config, key + ": '" + tok + "' is not a number");
      }
    }
    return out;
  }

  ArchSpec arch() const {
    ArchSpec s;
    s.variant = parse_variant(get("arch.variant"));
    s.depth = get_int("arch.depth");
    s.widths = get_size_list("arch.widths");
    s.classes = get_size("arch.classes");
    s.deep_supervision = get_bool("arch.deep_supervision");
    s.in_channels = get_size("arch.in_channels");
    s.in_height = get_size("arch.in_height");
    s.in_width = get_size("arch.in_width");
    s.validate();
    return s;
  }

  LossConfig loss() const {
    LossConfig c;
    c.eps_log = get_double("loss.eps_log");
    c.eps_dice = get_double("loss.eps_dice");
    c.full_bce = get_bool("loss.full_bce");
    c.head_weights = get_double_list("loss.head_weights");
    c.validate();
    return c;
  }

  TrainConfig train() const {
    TrainConfig c;
    c.adam.lr = get_double("train.lr");
    c.adam.beta1 = get_double("train.beta1");
    c.adam.beta2 = get_double("train.beta2");
    c.adam.eps = get_double("train.eps");
    c.batch_size = get_size("train.batch_size");
    c.max_epochs = get_size("train.max_epochs");
    c.patience = get_size("train.patience");
    c.seed = get_u64("train.seed");
    c.loss = loss();
    c.validate();
    return c;
  }

  SynthConfig synth() const {
    SynthConfig c;
    c.count = get_size("data.count");
    c.height = get_size("data.height");
    c.width = get_size("data.width");
    c.blobs_min = get_size("data.blobs_min");
    c.blobs_max = get_size("data.blobs_max");
    c.radius_min = get_double("data.radius_min");
    c.radius_max = get_double("data.radius_max");
    c.deform = get_double("data.deform");
    c.noise_std = get_double("data.noise_std");
    c.multi_scale = get_bool("data.multi_scale");
    c.seed = get_u64("data.seed");
    c.validate();
    return c;
  }

  Dataset dataset() const {
    const std::string& source = get("data.source");
    if (source == "synthetic") return gen_synthetic(synth());
    if (source == "dir") {
      require(!get("data.dir").empty(), ErrorKind::Config,
              "data.source=dir needs data.dir");
      return load_dataset(get("data.dir"));
    }
    fail(ErrorKind::Config,
         "data.source '" + source + "' is neither synthetic nor dir");
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
  }

  static std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(trim(tok));
    return out;
  }

  long long parse_ll_value(const std::string& key, const std::string& s,
                           long long min_value = LLONG_MIN) const {
    try {
      std::size_t used = 0;
      long long v = std::stoll(s, &used);
      require(used == s.size() && v >= min_value, ErrorKind::Config, "");
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::Config, key + ": '" + s + "' is not a valid integer");
    }
  }

  long long parse_ll(const std::string& key, long long min_value = LLONG_MIN) const {
    return parse_ll_value(key, get(key), min_value);
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace seglab
