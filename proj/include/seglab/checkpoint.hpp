#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/arch.hpp"
#include "seglab/error.hpp"
#include "seglab/serialize.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

// Everything needed to either evaluate the best model seen so far or to
// resume training and reproduce the exact trajectory the uninterrupted run
// would have taken.
struct Checkpoint {
  ArchSpec spec;
  std::map<std::string, Tensor> best;     // parameters at the best epoch
  std::map<std::string, Tensor> current;  // parameters after the last epoch
  std::map<std::string, Tensor> m, v;     // optimiser moments
  std::int64_t adam_t = 0;
  std::uint64_t seed = 0;
  std::size_t epochs_done = 0;
  std::size_t best_epoch = 0;  // 1-based; 0 before any epoch finished
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_improve = 0;
};

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string widths_csv(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out;
}

inline std::vector<std::size_t> parse_widths_csv(const std::string& s,
                                                 const char* where) {
  std::vector<std::size_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      require(used == tok.size() && v >= 1, ErrorKind::Format, "");
      out.push_back(std::size_t(v));
    } catch (const std::exception&) {
      fail(ErrorKind::Format,
           std::string(where) + ": bad width entry '" + tok + "'");
    }
  }
  require(!out.empty(), ErrorKind::Format,
          std::string(where) + ": empty width list");
  return out;
}

}  // namespace detail

// Container layout: magic "NNCK", u32 version, a length-prefixed text block
// of sorted key=value lines, u32 tensor count, then name-sorted entries of
// (u32 name length, name bytes, tensor record).
inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  std::ostringstream meta;
  meta << "arch.classes=" << ck.spec.classes << "\n";
  meta << "arch.deep_supervision=" << (ck.spec.deep_supervision ? 1 : 0) << "\n";
  meta << "arch.depth=" << ck.spec.depth << "\n";
  meta << "arch.in_channels=" << ck.spec.in_channels << "\n";
  meta << "arch.in_height=" << ck.spec.in_height << "\n";
  meta << "arch.in_width=" << ck.spec.in_width << "\n";
  meta << "arch.variant=" << variant_name(ck.spec.variant) << "\n";
  meta << "arch.widths=" << detail::widths_csv(ck.spec.widths) << "\n";
  meta << "state.adam_t=" << ck.adam_t << "\n";
  meta << "state.best_epoch=" << ck.best_epoch << "\n";
  meta << "state.best_val_loss=" << detail::fmt_g17(ck.best_val_loss) << "\n";
  meta << "state.epochs_done=" << ck.epochs_done << "\n";
  meta << "state.seed=" << ck.seed << "\n";
  meta << "state.since_improve=" << ck.since_improve << "\n";
  const std::string meta_s = meta.str();

  os.write("NNCK", 4);
  detail::put_u32(os, 1);
  detail::put_u32(os, std::uint32_t(meta_s.size()));
  os.write(meta_s.data(), std::streamsize(meta_s.size()));

  std::map<std::string, const Tensor*> entries;
  for (const auto& [k, t] : ck.best) entries["best/" + k] = &t;
  for (const auto& [k, t] : ck.current) entries["cur/" + k] = &t;
  for (const auto& [k, t] : ck.m) entries["m/" + k] = &t;
  for (const auto& [k, t] : ck.v) entries["v/" + k] = &t;
  detail::put_u32(os, std::uint32_t(entries.size()));
  for (const auto& [name, t] : entries) {
    detail::put_u32(os, std::uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    write_tensor(os, *t);
  }
}

inline Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(is.gcount() == 4 && std::memcmp(magic, "NNCK", 4) == 0,
          ErrorKind::Format, "checkpoint stream lacks NNCK magic");
  const std::uint32_t version = detail::get_u32(is, "checkpoint version");
  require(version == 1, ErrorKind::Format,
          "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t meta_len = detail::get_u32(is, "metadata length");
  require(meta_len <= (1u << 20), ErrorKind::Format, "metadata implausibly large");
  std::string meta(meta_len, '\0');
  is.read(meta.data(), meta_len);
  require(std::size_t(is.gcount()) == meta_len, ErrorKind::Format,
          "truncated checkpoint metadata");

  Checkpoint ck;
  std::map<std::string, std::string> kv;
  std::istringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Format,
            "metadata line lacks '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto want = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    require(it != kv.end(), ErrorKind::Format,
            std::string("checkpoint metadata missing ") + key);
    return it->second;
  };
  try {
    ck.spec.classes = std::stoul(want("arch.classes"));
    ck.spec.deep_supervision = want("arch.deep_supervision") == "1";
    ck.spec.depth = std::stoi(want("arch.depth"));
    ck.spec.in_channels = std::stoul(want("arch.in_channels"));
    ck.spec.in_height = std::stoul(want("arch.in_height"));
    ck.spec.in_width = std::stoul(want("arch.in_width"));
    ck.spec.variant = parse_variant(want("arch.variant"));
    ck.spec.widths = detail::parse_widths_csv(want("arch.widths"), "arch.widths");
    ck.adam_t = std::stoll(want("state.adam_t"));
    ck.best_epoch = std::stoul(want("state.best_epoch"));
    ck.best_val_loss = std::stod(want("state.best_val_loss"));
    ck.epochs_done = std::stoul(want("state.epochs_done"));
    ck.seed = std::stoull(want("state.seed"));
    ck.since_improve = std::stoul(want("state.since_improve"));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::Format, std::string("bad checkpoint metadata value: ") + e.what());
  }

  const std::uint32_t count = detail::get_u32(is, "tensor count");
  require(count <= 100000, ErrorKind::Format, "tensor count implausible");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::get_u32(is, "tensor name length");
    require(name_len >= 1 && name_len <= 4096, ErrorKind::Format,
            "tensor name length implausible");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    require(std::size_t(is.gcount()) == name_len, ErrorKind::Format,
            "truncated tensor name");
    Tensor t = read_tensor(is);
    if (name.rfind("best/", 0) == 0)
      ck.best[name.substr(5)] = std::move(t);
    else if (name.rfind("cur/", 0) == 0)
      ck.current[name.substr(4)] = std::move(t);
    else if (name.rfind("m/", 0) == 0)
      ck.m[name.substr(2)] = std::move(t);
    else if (name.rfind("v/", 0) == 0)
      ck.v[name.substr(2)] = std::move(t);
    else
      fail(ErrorKind::Format, "tensor name with unknown prefix: " + name);
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  atomic_write(path, [&](std::ostream& os) { write_checkpoint(os, ck); });
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorKind::Io, "cannot open " + path.string());
  return read_checkpoint(is);
}

inline void check_same_spec(const ArchSpec& a, const ArchSpec& b,
                            const char* context) {
  const bool same = a.variant == b.variant && a.depth == b.depth &&
                    a.widths == b.widths && a.classes == b.classes &&
                    a.deep_supervision == b.deep_supervision &&
                    a.in_channels == b.in_channels &&
                    a.in_height == b.in_height && a.in_width == b.in_width;
  require(same, ErrorKind::Compat,
          std::string(context) + ": architecture in checkpoint (" +
              variant_name(a.variant) + " depth " + std::to_string(a.depth) +
              ") does not match the requested one (" + variant_name(b.variant) +
              " depth " + std::to_string(b.depth) + ")");
}

// Instantiate the architecture and load one of the stored parameter sets.
inline Network network_from_checkpoint(const Checkpoint& ck, bool use_best = true) {
  Network net = build(ck.spec, ck.seed);
  const std::map<std::string, Tensor>& source = use_best ? ck.best : ck.current;
  for (int p : net.graph.params()) {
    const std::string& name = net.graph.node(p).id;
    auto it = source.find(name);
    require(it != source.end(), ErrorKind::Compat,
            "checkpoint lacks parameter " + name);
    require(it->second.shape() == net.graph.value(p).shape(), ErrorKind::Compat,
            "checkpoint parameter " + name + " has shape " +
                shape_str(it->second.shape()) + ", expected " +
                shape_str(net.graph.value(p).shape()));
    net.graph.param_value(p) = it->second;
  }
  return net;
}

}  // namespace seglab
