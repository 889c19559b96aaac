#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/error.hpp"

namespace seglab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

inline void check_shape_valid(const Shape& s, const char* what) {
  for (std::size_t e : s)
    require(e >= 1, ErrorKind::Shape,
            std::string(what) + " has zero extent " + shape_str(s));
}

// Dense row-major f64 tensor. Rank 0 is not representable; scalars live in
// shape [1]. Values behave as immutable once an operation has produced them;
// mutation is confined to construction sites and optimiser updates.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)) {
    check_shape_valid(shape_, "tensor");
    data_.assign(shape_numel(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    check_shape_valid(shape_, "tensor");
    require(values.size() == shape_numel(shape_), ErrorKind::Shape,
            "value count " + std::to_string(values.size()) +
                " does not fill shape " + shape_str(shape_));
    data_ = std::move(values);
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const {
    require(axis < shape_.size(), ErrorKind::Axis,
            "axis " + std::to_string(axis) + " out of range for rank " +
                std::to_string(shape_.size()));
    return shape_[axis];
  }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessors for the rank-4 case that dominates this library.
  double& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.same_shape(b), ErrorKind::Shape,
          std::string(op) + ": operand shapes differ " + shape_str(a.shape()) +
              " vs " + shape_str(b.shape()));
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline Tensor emax(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = std::max(a[i], b[i]);
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
  return out;
}

template <class F>
Tensor map_unary(const Tensor& a, F&& f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
  return out;
}

inline double sum_all(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i];
  return s;
}

// Reduce over the given axes in fixed row-major visit order, so the floating
// point accumulation sequence is identical on every run.
inline Tensor reduce_sum(const Tensor& a, std::vector<std::size_t> axes,
                         bool keepdims = false) {
  const Shape& in = a.shape();
  std::vector<bool> reduced(in.size(), false);
  for (std::size_t ax : axes) {
    require(ax < in.size(), ErrorKind::Axis,
            "reduce axis " + std::to_string(ax) + " out of range for rank " +
                std::to_string(in.size()));
    reduced[ax] = true;
  }
  Shape out_shape;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!reduced[i])
      out_shape.push_back(in[i]);
    else if (keepdims)
      out_shape.push_back(1);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape, 0.0);

  std::vector<std::size_t> idx(in.size(), 0);
  std::vector<std::size_t> out_strides(in.size(), 0);
  {
    Shape kept = in;
    for (std::size_t i = 0; i < in.size(); ++i)
      if (reduced[i]) kept[i] = 1;
    std::size_t stride = 1;
    for (std::size_t i = in.size(); i-- > 0;) {
      out_strides[i] = reduced[i] ? 0 : stride;
      stride *= kept[i];
    }
  }
  for (std::size_t flat = 0; flat < a.numel(); ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < in.size(); ++i) off += idx[i] * out_strides[i];
    out[off] += a[flat];
    for (std::size_t i = in.size(); i-- > 0;) {
      if (++idx[i] < in[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

inline Tensor reduce_mean(const Tensor& a, std::vector<std::size_t> axes,
                          bool keepdims = false) {
  std::size_t count = 1;
  for (std::size_t ax : axes) count *= a.extent(ax);
  Tensor out = reduce_sum(a, std::move(axes), keepdims);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= double(count);
  return out;
}

// Per-axis (before, after) amounts. Pad inserts zeros, crop removes rows;
// crop amounts must leave at least one element per axis.
struct AxisTrim {
  std::size_t before = 0;
  std::size_t after = 0;
};

inline Tensor pad(const Tensor& a, const std::vector<AxisTrim>& spec) {
  require(spec.size() == a.rank(), ErrorKind::Axis,
          "pad spec rank " + std::to_string(spec.size()) +
              " does not match tensor rank " + std::to_string(a.rank()));
  Shape out_shape = a.shape();
  for (std::size_t i = 0; i < spec.size(); ++i)
    out_shape[i] += spec[i].before + spec[i].after;
  Tensor out(out_shape, 0.0);
  std::vector<std::size_t> idx(a.rank(), 0);
  std::vector<std::size_t> strides(a.rank(), 1);
  for (std::size_t i = a.rank() - 1; i-- > 0;)
    strides[i] = strides[i + 1] * out_shape[i + 1];
  for (std::size_t flat = 0; flat < a.numel(); ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < a.rank(); ++i)
      off += (idx[i] + spec[i].before) * strides[i];
    out[off] = a[flat];
    for (std::size_t i = a.rank(); i-- > 0;) {
      if (++idx[i] < a.shape()[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

inline Tensor crop(const Tensor& a, const std::vector<AxisTrim>& spec) {
  require(spec.size() == a.rank(), ErrorKind::Axis,
          "crop spec rank " + std::to_string(spec.size()) +
              " does not match tensor rank " + std::to_string(a.rank()));
  Shape out_shape = a.shape();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    require(spec[i].before + spec[i].after < a.shape()[i], ErrorKind::Shape,
            "crop removes entire axis " + std::to_string(i) + " of " +
                shape_str(a.shape()));
    out_shape[i] -= spec[i].before + spec[i].after;
  }
  Tensor out(out_shape);
  std::vector<std::size_t> idx(a.rank(), 0);
  std::vector<std::size_t> strides(a.rank(), 1);
  for (std::size_t i = a.rank() - 1; i-- > 0;)
    strides[i] = strides[i + 1] * a.shape()[i + 1];
  for (std::size_t flat = 0; flat < out.numel(); ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < a.rank(); ++i)
      off += (idx[i] + spec[i].before) * strides[i];
    out[flat] = a[off];
    for (std::size_t i = a.rank(); i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

// Concatenate rank-4 NCHW tensors along the channel axis. A single part is
// returned unchanged.
inline Tensor concat_channels(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorKind::Shape, "concat of zero tensors");
  for (const Tensor& p : parts)
    require(p.rank() == 4, ErrorKind::Shape,
            "concat expects rank-4 operands, got " + shape_str(p.shape()));
  const Shape& first = parts[0].shape();
  std::size_t channels = 0;
  for (const Tensor& p : parts) {
    require(p.shape()[0] == first[0] && p.shape()[2] == first[2] &&
                p.shape()[3] == first[3],
            ErrorKind::Shape,
            "concat operands disagree outside the channel axis: " +
                shape_str(first) + " vs " + shape_str(p.shape()));
    channels += p.shape()[1];
  }
  if (parts.size() == 1) return parts[0];
  Tensor out(Shape{first[0], channels, first[2], first[3]});
  const std::size_t hw = first[2] * first[3];
  for (std::size_t n = 0; n < first[0]; ++n) {
    std::size_t c_off = 0;
    for (const Tensor& p : parts) {
      const std::size_t pc = p.shape()[1];
      const double* src = p.data() + n * pc * hw;
      double* dst = out.data() + (n * channels + c_off) * hw;
      std::copy(src, src + pc * hw, dst);
      c_off += pc;
    }
  }
  return out;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    std::uint64_t ba, bb;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&ba, a.data() + i, 8);
    std::memcpy(&bb, b.data() + i, 8);
    if (ba != bb) return false;
  }
  return true;
}

}  // namespace seglab
