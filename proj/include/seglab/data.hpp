#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/pgm.hpp"
#include "seglab/rng.hpp"
#include "seglab/serialize.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

struct SegSample {
  std::string id;
  Tensor image;  // [channels, H, W], values in [0,1]
  Tensor mask;   // [classes, H, W], values exactly 0 or 1
  std::string split;  // train | val | test
  int size_bucket = 0;
};

struct Dataset {
  std::vector<SegSample> samples;

  std::vector<std::size_t> split_indices(const std::string& split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].split == split) out.push_back(i);
    return out;
  }
};

// Blobby foreground shapes: rotated ellipses whose radius wobbles with a
// low-order sine around the perimeter, on a dark background with additive
// Gaussian pixel noise. The mask is the exact noise-free blob support.
struct SynthConfig {
  std::size_t count = 200;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t blobs_min = 1;
  std::size_t blobs_max = 4;
  double radius_min = 3.0;
  double radius_max = 12.0;
  double deform = 0.3;      // relative boundary wobble, 0..0.45
  double noise_std = 0.02;
  bool multi_scale = true;  // draw radii from the small/large ends only
  std::uint64_t seed = 7;

  void validate() const {
    require(count >= 1, ErrorKind::Generation, "count must be positive");
    require(height >= 8 && width >= 8, ErrorKind::Generation,
            "image sides must be at least 8");
    require(blobs_min >= 1 && blobs_min <= blobs_max, ErrorKind::Generation,
            "blob count range is empty");
    require(radius_min >= 1.0 && radius_min <= radius_max, ErrorKind::Generation,
            "radius range is empty or below 1");
    require(2.0 * radius_max + 2.0 <= double(std::min(height, width)),
            ErrorKind::Generation,
            "radius_max does not fit inside the image");
    require(deform >= 0.0 && deform <= 0.45, ErrorKind::Generation,
            "deform outside [0, 0.45]");
    require(noise_std >= 0.0 && noise_std <= 0.3, ErrorKind::Generation,
            "noise_std outside [0, 0.3]");
  }
};

namespace detail {

constexpr double BACKGROUND_LEVEL = 0.15;
constexpr double FOREGROUND_LEVEL = 0.75;

struct Blob {
  double cx, cy, rx, ry, cos_t, sin_t, amp, phase;
  int lobes;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = (dx * cos_t + dy * sin_t) / rx;
    const double v = (-dx * sin_t + dy * cos_t) / ry;
    const double rho = std::sqrt(u * u + v * v);
    const double phi = std::atan2(v, u);
    return rho <= 1.0 + amp * std::sin(lobes * phi + phase);
  }
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Stable id -> [0,1) used for split assignment, independent of sample order.
inline double split_coordinate(const std::string& id) {
  std::uint64_t z = fnv1a64(id);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return double(z >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Seven groups split at the 1/7..6/7 area quantiles of this dataset; group
// index = number of quantile thresholds at or below the sample's area.
inline void assign_size_buckets(Dataset& ds) {
  std::vector<double> areas;
  for (const SegSample& s : ds.samples) areas.push_back(sum_all(s.mask));
  std::vector<double> sorted = areas;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> thresholds;
  for (int k = 1; k <= 6; ++k) {
    std::size_t at = k * n / 7;
    if (at >= n) at = n - 1;
    thresholds.push_back(sorted[at]);
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    int b = 0;
    for (double t : thresholds)
      if (areas[i] >= t) ++b;
    ds.samples[i].size_bucket = b;
  }
}

// 60/20/20 split decided by a hash of the id alone, then repaired so no
// split is empty: a missing split steals the first sample of the largest.
inline void assign_splits(Dataset& ds) {
  for (SegSample& s : ds.samples) {
    const double u = detail::split_coordinate(s.id);
    s.split = u < 0.60 ? "train" : (u < 0.80 ? "val" : "test");
  }
  for (const char* split : {"train", "val", "test"}) {
    if (!ds.split_indices(split).empty()) continue;
    std::size_t best_size = 0;
    std::string donor;
    for (const char* other : {"train", "val", "test"}) {
      const std::size_t sz = ds.split_indices(other).size();
      if (sz > best_size) {
        best_size = sz;
        donor = other;
      }
    }
    require(best_size >= 2, ErrorKind::Generation,
            "dataset too small to populate train/val/test");
    ds.samples[ds.split_indices(donor).front()].split = split;
  }
}

inline Dataset gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  std::size_t digits = std::to_string(cfg.count - 1).size();
  if (digits < 4) digits = 4;
  const Rng root = Rng(cfg.seed).split(stream::data);
  for (std::size_t idx = 0; idx < cfg.count; ++idx) {
    Rng rng = root.split(idx);
    std::string num = std::to_string(idx);
    SegSample s;
    s.id = "img_" + std::string(digits - num.size(), '0') + num;

    const std::size_t n_blobs =
        cfg.blobs_min + rng.next_below(cfg.blobs_max - cfg.blobs_min + 1);
    std::vector<detail::Blob> blobs;
    for (std::size_t b = 0; b < n_blobs; ++b) {
      double r;
      if (cfg.multi_scale) {
        const double span = cfg.radius_max - cfg.radius_min;
        if (rng.next_below(2) == 0)
          r = cfg.radius_min + 0.35 * span * rng.next_unit();
        else
          r = cfg.radius_max - 0.35 * span * rng.next_unit();
      } else {
        r = rng.next_in(cfg.radius_min, cfg.radius_max);
      }
      detail::Blob blob;
      blob.rx = r;
      blob.ry = r * rng.next_in(0.6, 1.0);
      blob.cx = rng.next_in(r, double(cfg.width - 1) - r);
      blob.cy = rng.next_in(r, double(cfg.height - 1) - r);
      const double theta = rng.next_in(0.0, 3.141592653589793);
      blob.cos_t = std::cos(theta);
      blob.sin_t = std::sin(theta);
      blob.amp = cfg.deform * rng.next_in(0.5, 1.0);
      blob.lobes = int(2 + rng.next_below(4));
      blob.phase = rng.next_in(0.0, 6.283185307179586);
      blobs.push_back(blob);
    }

    s.mask = Tensor(Shape{1, cfg.height, cfg.width}, 0.0);
    s.image = Tensor(Shape{1, cfg.height, cfg.width}, 0.0);
    for (std::size_t y = 0; y < cfg.height; ++y)
      for (std::size_t x = 0; x < cfg.width; ++x) {
        bool inside = false;
        for (const detail::Blob& b : blobs)
          if (b.contains(double(x), double(y))) {
            inside = true;
            break;
          }
        const std::size_t at = y * cfg.width + x;
        s.mask[at] = inside ? 1.0 : 0.0;
        s.image[at] = inside ? detail::FOREGROUND_LEVEL : detail::BACKGROUND_LEVEL;
      }
    if (cfg.noise_std > 0.0)
      for (std::size_t at = 0; at < s.image.numel(); ++at) {
        double v = s.image[at] + rng.next_normal(0.0, cfg.noise_std);
        s.image[at] = std::min(1.0, std::max(0.0, v));
      }
    ds.samples.push_back(std::move(s));
  }
  assign_size_buckets(ds);
  assign_splits(ds);
  return ds;
}

// Regular grid of patch origins with the final row/column clamped flush to
// the border, so every pixel is covered. Split and id lineage come from the
// parent; size groups are re-derived over the patch set.
inline Dataset extract_patches(const Dataset& src, std::size_t patch_h,
                               std::size_t patch_w, std::size_t stride_h,
                               std::size_t stride_w) {
  require(patch_h >= 1 && patch_w >= 1, ErrorKind::Range, "empty patch");
  require(stride_h >= 1 && stride_w >= 1, ErrorKind::Range, "zero stride");
  Dataset out;
  for (const SegSample& s : src.samples) {
    const std::size_t H = s.image.extent(1), W = s.image.extent(2);
    require(patch_h <= H && patch_w <= W, ErrorKind::Range,
            "patch " + std::to_string(patch_h) + "x" + std::to_string(patch_w) +
                " larger than image " + std::to_string(H) + "x" + std::to_string(W));
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
    const std::size_t ch_img = s.image.extent(0), ch_mask = s.mask.extent(0);
    for (std::size_t yi = 0; yi < ys.size(); ++yi)
      for (std::size_t xi = 0; xi < xs.size(); ++xi) {
        SegSample p;
        p.id = s.id + "_p" + std::to_string(yi) + "_" + std::to_string(xi);
        p.split = s.split;
        p.image = Tensor(Shape{ch_img, patch_h, patch_w});
        p.mask = Tensor(Shape{ch_mask, patch_h, patch_w});
        for (std::size_t c = 0; c < ch_img; ++c)
          for (std::size_t y = 0; y < patch_h; ++y)
            for (std::size_t x = 0; x < patch_w; ++x)
              p.image[(c * patch_h + y) * patch_w + x] =
                  s.image[(c * H + ys[yi] + y) * W + xs[xi] + x];
        for (std::size_t c = 0; c < ch_mask; ++c)
          for (std::size_t y = 0; y < patch_h; ++y)
            for (std::size_t x = 0; x < patch_w; ++x)
              p.mask[(c * patch_h + y) * patch_w + x] =
                  s.mask[(c * H + ys[yi] + y) * W + xs[xi] + x];
        out.samples.push_back(std::move(p));
      }
  }
  assign_size_buckets(out);
  return out;
}

// On-disk layout: images/<id>.pgm, masks/<id>.pgm and a manifest.tsv with
// columns id, image_path, mask_path, split, size_bucket. Images quantise to
// 16 bits; masks stay exact because they only use 0 and maxval.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "masks", ec);
  std::ostringstream manifest;
  manifest << "id\timage_path\tmask_path\tsplit\tsize_bucket\n";
  for (const SegSample& s : ds.samples) {
    require(s.image.rank() == 3 && s.image.extent(0) == 1 && s.mask.rank() == 3 &&
                s.mask.extent(0) == 1,
            ErrorKind::Data, s.id + ": only single-channel samples serialise");
    const std::size_t H = s.image.extent(1), W = s.image.extent(2);
    PgmImage img{W, H, {}};
    img.samples.resize(H * W);
    for (std::size_t i = 0; i < H * W; ++i)
      img.samples[i] = std::uint16_t(std::lround(
          std::min(1.0, std::max(0.0, s.image[i])) * 65535.0));
    write_pgm(dir / "images" / (s.id + ".pgm"), img);
    PgmImage msk{W, H, {}};
    msk.samples.resize(H * W);
    for (std::size_t i = 0; i < H * W; ++i)
      msk.samples[i] = s.mask[i] != 0.0 ? 65535 : 0;
    write_pgm(dir / "masks" / (s.id + ".pgm"), msk);
    manifest << s.id << "\timages/" << s.id << ".pgm\tmasks/" << s.id
             << ".pgm\t" << s.split << "\t" << s.size_bucket << "\n";
  }
  write_text_atomic(dir / "manifest.tsv", manifest.str());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / "manifest.tsv";
  const std::string text = read_text(manifest_path);
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  auto die = [&](const std::string& msg) -> void {
    fail(ErrorKind::Data,
         manifest_path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  require(bool(std::getline(is, line)), ErrorKind::Data,
          manifest_path.string() + ": empty manifest");
  line_no = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id\timage_path\tmask_path\tsplit\tsize_bucket")
    die("bad header '" + line + "'");

  Dataset ds;
  std::map<std::string, bool> seen;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == '\t') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (cols.size() != 5) die("expected 5 tab-separated columns, got " +
                              std::to_string(cols.size()));
    if (cols[0].empty()) die("empty id");
    if (seen.count(cols[0])) die("duplicate id " + cols[0]);
    seen[cols[0]] = true;
    if (cols[3] != "train" && cols[3] != "val" && cols[3] != "test")
      die("unknown split '" + cols[3] + "'");
    int bucket = 0;
    try {
      std::size_t used = 0;
      bucket = std::stoi(cols[4], &used);
      if (used != cols[4].size()) throw std::invalid_argument("trail");
    } catch (const std::exception&) {
      die("size_bucket '" + cols[4] + "' is not an integer");
    }
    if (bucket < 0) die("negative size_bucket");

    SegSample s;
    s.id = cols[0];
    s.split = cols[3];
    s.size_bucket = bucket;
    const PgmImage img = read_pgm(dir / cols[1]);
    const PgmImage msk = read_pgm(dir / cols[2]);
    if (img.width != msk.width || img.height != msk.height)
      die(s.id + ": image " + std::to_string(img.width) + "x" +
          std::to_string(img.height) + " and mask " + std::to_string(msk.width) +
          "x" + std::to_string(msk.height) + " disagree");
    s.image = Tensor(Shape{1, img.height, img.width});
    for (std::size_t i = 0; i < img.samples.size(); ++i)
      s.image[i] = double(img.samples[i]) / 65535.0;
    s.mask = Tensor(Shape{1, msk.height, msk.width});
    for (std::size_t i = 0; i < msk.samples.size(); ++i) {
      if (msk.samples[i] != 0 && msk.samples[i] != 65535)
        die(s.id + ": mask sample " + std::to_string(msk.samples[i]) +
            " is neither 0 nor 65535");
      s.mask[i] = msk.samples[i] ? 1.0 : 0.0;
    }
    ds.samples.push_back(std::move(s));
  }
  require(!ds.samples.empty(), ErrorKind::Data,
          manifest_path.string() + ": manifest lists no samples");
  return ds;
}

// Stack samples into NCHW batches; all listed samples must share dimensions.
inline std::pair<Tensor, Tensor> make_batch(const Dataset& ds,
                                            const std::vector<std::size_t>& idx) {
  require(!idx.empty(), ErrorKind::Data, "empty batch");
  const SegSample& first = ds.samples[idx[0]];
  const std::size_t ci = first.image.extent(0), cm = first.mask.extent(0);
  const std::size_t H = first.image.extent(1), W = first.image.extent(2);
  Tensor input(Shape{idx.size(), ci, H, W});
  Tensor label(Shape{idx.size(), cm, H, W});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const SegSample& s = ds.samples[idx[b]];
    require(s.image.extent(1) == H && s.image.extent(2) == W, ErrorKind::Data,
            s.id + ": sample dimensions differ within a batch");
    std::copy(s.image.data(), s.image.data() + ci * H * W,
              input.data() + b * ci * H * W);
    std::copy(s.mask.data(), s.mask.data() + cm * H * W,
              label.data() + b * cm * H * W);
  }
  return {std::move(input), std::move(label)};
}

}  // namespace seglab
