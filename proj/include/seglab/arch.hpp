#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/graph.hpp"
#include "seglab/rng.hpp"

namespace seglab {

// Family of nested encoder-decoder graphs over the node grid X^{i,j},
// where i indexes the resolution level and j the stage along a row.
//   unet       plain encoder-decoder: rows hold only X^{i,0} and X^{i,d-i}
//   unet_e     every X^{i,j}, row input is always the row head X^{i,0}
//   unet_plus  every X^{i,j}, row input is the adjacent X^{i,j-1}
//   unet_pp    every X^{i,j}, row input is all of X^{i,0..j-1} (dense skips)
// In every variant a stage j>0 node also consumes the learned 2x upsampling
// of X^{i+1,j-1}.
enum class Variant { Unet, UnetE, UnetPlus, UnetPp };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Unet: return "unet";
    case Variant::UnetE: return "unet_e";
    case Variant::UnetPlus: return "unet_plus";
    case Variant::UnetPp: return "unet_pp";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "unet") return Variant::Unet;
  if (s == "unet_e") return Variant::UnetE;
  if (s == "unet_plus") return Variant::UnetPlus;
  if (s == "unet_pp") return Variant::UnetPp;
  fail(ErrorKind::Spec, "unknown variant '" + s +
                            "' (expected unet, unet_e, unet_plus, unet_pp)");
}

struct ArchSpec {
  Variant variant = Variant::UnetPp;
  int depth = 4;
  std::vector<std::size_t> widths;  // depth+1 entries, index = level
  std::size_t classes = 1;
  bool deep_supervision = true;
  std::size_t in_channels = 1;
  std::size_t in_height = 64;
  std::size_t in_width = 64;

  void validate() const {
    require(depth >= 1 && depth <= 4, ErrorKind::Spec,
            "depth " + std::to_string(depth) + " outside 1..4");
    require(widths.size() == std::size_t(depth) + 1, ErrorKind::Spec,
            "widths must list depth+1 entries, got " +
                std::to_string(widths.size()) + " for depth " +
                std::to_string(depth));
    for (std::size_t w : widths)
      require(w >= 1, ErrorKind::Spec, "width entries must be positive");
    require(classes >= 1, ErrorKind::Spec, "classes must be positive");
    require(in_channels >= 1, ErrorKind::Spec, "in_channels must be positive");
    const std::size_t div = std::size_t(1) << depth;
    require(in_height >= div && in_height % div == 0, ErrorKind::Spec,
            "input height " + std::to_string(in_height) +
                " not divisible by 2^depth = " + std::to_string(div));
    require(in_width >= div && in_width % div == 0, ErrorKind::Spec,
            "input width " + std::to_string(in_width) +
                " not divisible by 2^depth = " + std::to_string(div));
    require(variant != Variant::UnetE || deep_supervision, ErrorKind::Spec,
            "unet_e is defined only with deep supervision");
  }
};

inline std::string node_name(int i, int j) {
  return "X^{" + std::to_string(i) + "," + std::to_string(j) + "}";
}

inline std::string head_name(int j) { return "head@X^{0," + std::to_string(j) + "}"; }

inline bool node_exists(Variant v, int depth, int i, int j) {
  if (i < 0 || j < 0 || i + j > depth) return false;
  if (v == Variant::Unet) return j == 0 || i + j == depth;
  return true;
}

struct ArchNodeInfo {
  int level = 0;  // i
  int stage = 0;  // j
  std::vector<std::string> inputs;  // predecessor block names, wiring order
};

struct Network {
  ArchSpec spec;
  Graph graph;
  std::vector<ArchNodeInfo> nodes;  // creation order: stage-major, level-minor
  std::vector<int> heads;           // stages that carry a head, ascending

  const std::string& input_name() const {
    static const std::string n = "input";
    return n;
  }

  std::vector<std::string> head_names() const {
    std::vector<std::string> out;
    for (int j : heads) out.push_back(head_name(j));
    return out;
  }

  void forward_image(const Tensor& batch) {
    graph.forward({{input_name(), batch}});
  }

  const Tensor& head_value(int j) const { return graph.value(head_name(j)); }
};

namespace detail {

inline Tensor he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double stddev = std::sqrt(2.0 / double(fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_normal(0.0, stddev);
  return t;
}

// Two 3x3 convolutions, each followed by a rectifier; the block output node
// carries the bare grid name.
inline int conv_block(Graph& g, const std::string& base, int input,
                      std::size_t in_ch, std::size_t out_ch, Rng& rng) {
  int k0 = g.parameter(base + "/conv0/kernel",
                       he_normal(Shape{out_ch, in_ch, 3, 3}, in_ch * 9, rng));
  int b0 = g.parameter(base + "/conv0/bias", Tensor(Shape{out_ch}, 0.0));
  int c0 = g.conv2d(base + "/conv0", input, k0, b0);
  int r0 = g.relu(base + "/relu0", c0);
  int k1 = g.parameter(base + "/conv1/kernel",
                       he_normal(Shape{out_ch, out_ch, 3, 3}, out_ch * 9, rng));
  int b1 = g.parameter(base + "/conv1/bias", Tensor(Shape{out_ch}, 0.0));
  int c1 = g.conv2d(base + "/conv1", r0, k1, b1);
  return g.relu(base, c1);
}

inline Network build_with_heads(const ArchSpec& spec,
                                const std::vector<int>& head_stages, Rng& rng) {
  Network net;
  net.spec = spec;
  net.heads = head_stages;
  Graph& g = net.graph;

  const int d = spec.depth;
  const auto& w = spec.widths;
  // Spatial extents stay open so the same graph can run on patches and on
  // full frames; the pooling ops reject sizes the grid cannot halve.
  g.placeholder("input", Shape{0, spec.in_channels, 0, 0});

  std::map<std::pair<int, int>, int> block_of;

  for (int j = 0; j <= d; ++j) {
    for (int i = 0; i + j <= d; ++i) {
      if (!node_exists(spec.variant, d, i, j)) continue;
      const std::string base = node_name(i, j);
      ArchNodeInfo info;
      info.level = i;
      info.stage = j;
      int block;
      if (j == 0) {
        int src;
        std::size_t in_ch;
        if (i == 0) {
          src = g.must_find("input");
          in_ch = spec.in_channels;
        } else {
          src = g.maxpool2(base + "/pool", block_of.at({i - 1, 0}));
          in_ch = w[std::size_t(i - 1)];
          info.inputs.push_back(node_name(i - 1, 0));
        }
        block = conv_block(g, base, src, in_ch, w[std::size_t(i)], rng);
      } else {
        // Upsample of the node one level down, one stage back.
        const std::size_t up_in = w[std::size_t(i + 1)];
        const std::size_t up_out = w[std::size_t(i)];
        int uk = g.parameter(base + "/up/kernel",
                             he_normal(Shape{up_in, up_out, 2, 2}, up_in * 4, rng));
        int ub = g.parameter(base + "/up/bias", Tensor(Shape{up_out}, 0.0));
        int up = g.upconv2(base + "/up", block_of.at({i + 1, j - 1}), uk, ub);

        std::vector<int> parts;
        switch (spec.variant) {
          case Variant::UnetPp:
            for (int k = 0; k < j; ++k) {
              parts.push_back(block_of.at({i, k}));
              info.inputs.push_back(node_name(i, k));
            }
            break;
          case Variant::UnetPlus:
            parts.push_back(block_of.at({i, j - 1}));
            info.inputs.push_back(node_name(i, j - 1));
            break;
          case Variant::UnetE:
          case Variant::Unet:
            parts.push_back(block_of.at({i, 0}));
            info.inputs.push_back(node_name(i, 0));
            break;
        }
        parts.push_back(up);
        info.inputs.push_back(node_name(i + 1, j - 1));
        const std::size_t in_ch = w[std::size_t(i)] * parts.size();
        int cat = g.concat(base + "/cat", parts);
        block = conv_block(g, base, cat, in_ch, w[std::size_t(i)], rng);
      }
      block_of[{i, j}] = block;
      net.nodes.push_back(std::move(info));
    }
  }

  for (int j : head_stages) {
    require(block_of.count({0, j}) == 1, ErrorKind::Spec,
            "head stage " + std::to_string(j) + " has no node X^{0," +
                std::to_string(j) + "}");
    const std::string base = head_name(j);
    int hk = g.parameter(base + "/conv/kernel",
                         he_normal(Shape{spec.classes, w[0], 1, 1}, w[0], rng));
    int hb = g.parameter(base + "/conv/bias", Tensor(Shape{spec.classes}, 0.0));
    int hc = g.conv2d(base + "/conv", block_of.at({0, j}), hk, hb);
    int hs = g.sigmoid(base, hc);
    g.mark_output(hs);
  }
  return net;
}

}  // namespace detail

inline std::vector<int> default_head_stages(const ArchSpec& spec) {
  if (spec.variant == Variant::Unet || !spec.deep_supervision)
    return {spec.depth};
  std::vector<int> out;
  for (int j = 1; j <= spec.depth; ++j) out.push_back(j);
  return out;
}

inline Network build(const ArchSpec& spec, Rng& rng) {
  spec.validate();
  return detail::build_with_heads(spec, default_head_stages(spec), rng);
}

inline Network build(const ArchSpec& spec, std::uint64_t seed) {
  Rng rng = Rng(seed).split(stream::init);
  return build(spec, rng);
}

// Sub-graph that keeps exactly the nodes X^{i,j} with i+j <= keep_stage plus
// the head at X^{0,keep_stage}, with parameters copied from the source.
// Forward through the result matches the source's same-stage head bitwise,
// because every retained node sees identical inputs and runs identical code.
inline Network prune(const Network& full, int keep_stage) {
  const ArchSpec& spec = full.spec;
  require(spec.variant != Variant::Unet, ErrorKind::Contract,
          "pruning requires the nested variants (unet_e, unet_plus, unet_pp)");
  require(keep_stage >= 1 && keep_stage <= spec.depth, ErrorKind::Range,
          "keep_stage " + std::to_string(keep_stage) + " outside 1.." +
              std::to_string(spec.depth));
  bool has_head = false;
  for (int j : full.heads) has_head |= (j == keep_stage);
  require(has_head, ErrorKind::Contract,
          "source graph has no head at stage " + std::to_string(keep_stage) +
              "; build with deep supervision");

  ArchSpec sub = spec;
  sub.depth = keep_stage;
  sub.widths.assign(spec.widths.begin(), spec.widths.begin() + keep_stage + 1);
  Rng throwaway(0);
  Network out = detail::build_with_heads(sub, {keep_stage}, throwaway);
  for (int p : out.graph.params()) {
    const std::string& name = out.graph.node(p).id;
    out.graph.param_value(p) = full.graph.value(name);
  }
  return out;
}

inline std::size_t param_count(const Network& net) { return net.graph.param_count(); }

inline std::size_t params_with_prefix(const Graph& g, const std::string& prefix) {
  std::size_t n = 0;
  for (int p : g.params()) {
    const Node& node = g.node(p);
    if (node.id.rfind(prefix, 0) == 0) n += node.value.numel();
  }
  return n;
}

struct SummaryRow {
  std::string name;
  std::vector<std::string> inputs;
  std::size_t out_channels = 0, out_height = 0, out_width = 0;
  std::size_t params = 0;
};

inline std::vector<SummaryRow> summary_rows(const Network& net) {
  std::vector<SummaryRow> rows;
  for (const ArchNodeInfo& n : net.nodes) {
    SummaryRow r;
    r.name = node_name(n.level, n.stage);
    r.inputs = n.inputs;
    if (n.level == 0 && n.stage == 0) r.inputs = {net.input_name()};
    r.out_channels = net.spec.widths[std::size_t(n.level)];
    r.out_height = net.spec.in_height >> n.level;
    r.out_width = net.spec.in_width >> n.level;
    r.params = params_with_prefix(net.graph, r.name + "/");
    rows.push_back(std::move(r));
  }
  for (int j : net.heads) {
    SummaryRow r;
    r.name = head_name(j);
    r.inputs = {node_name(0, j)};
    r.out_channels = net.spec.classes;
    r.out_height = net.spec.in_height;
    r.out_width = net.spec.in_width;
    r.params = params_with_prefix(net.graph, r.name + "/");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline std::string summary_text(const Network& net) {
  std::vector<SummaryRow> rows = summary_rows(net);
  std::size_t name_w = 4, in_w = 6, shape_w = 6;
  std::vector<std::string> shapes;
  for (const SummaryRow& r : rows) {
    std::string sh = std::to_string(r.out_channels) + "x" +
                     std::to_string(r.out_height) + "x" +
                     std::to_string(r.out_width);
    shapes.push_back(sh);
    name_w = std::max(name_w, r.name.size());
    in_w = std::max(in_w, join(r.inputs, "+").size());
    shape_w = std::max(shape_w, sh.size());
  }
  std::ostringstream os;
  os << variant_name(net.spec.variant) << " depth " << net.spec.depth << ", input "
     << net.spec.in_channels << "x" << net.spec.in_height << "x"
     << net.spec.in_width << "\n";
  os << std::left << std::setw(int(name_w) + 2) << "node"
     << std::setw(int(in_w) + 2) << "inputs" << std::setw(int(shape_w) + 2)
     << "output" << "params" << "\n";
  std::size_t total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << std::left << std::setw(int(name_w) + 2) << rows[i].name
       << std::setw(int(in_w) + 2) << join(rows[i].inputs, "+")
       << std::setw(int(shape_w) + 2) << shapes[i] << rows[i].params << "\n";
    total += rows[i].params;
  }
  os << "total params " << total << "\n";
  return os.str();
}

inline std::string summary_csv(const Network& net) {
  std::ostringstream os;
  os << "node,inputs,out_channels,out_height,out_width,params\n";
  for (const SummaryRow& r : summary_rows(net)) {
    os << r.name << "," << join(r.inputs, "|") << "," << r.out_channels << ","
       << r.out_height << "," << r.out_width << "," << r.params << "\n";
  }
  os << "total,," << "," << "," << "," << param_count(net) << "\n";
  return os.str();
}

// Grid nodes and their data edges only; heads and loss plumbing stay out so
// the drawing matches the architecture diagrams this family is usually
// presented with.
inline std::string to_dot(const Network& net) {
  std::ostringstream os;
  os << "digraph arch {\n";
  os << "  rankdir=TB;\n";
  for (const ArchNodeInfo& n : net.nodes)
    os << "  \"" << node_name(n.level, n.stage) << "\";\n";
  for (const ArchNodeInfo& n : net.nodes)
    for (const std::string& src : n.inputs)
      os << "  \"" << src << "\" -> \"" << node_name(n.level, n.stage) << "\";\n";
  os << "}\n";
  return os.str();
}

}  // namespace seglab
