#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

// Dense kernels behind the graph ops. Every loop nest has a fixed iteration
// order, so repeated runs accumulate floating point in the same sequence.

namespace detail {

// C[M,N] += A[M,K] * B[K,N], all row-major.
inline void gemm_acc(double* C, const double* A, const double* B,
                     std::size_t M, std::size_t K, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    double* c = C + m * N;
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a[k];
      const double* b = B + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// C[M,N] += A[M,K] * B^T where B is [N,K] row-major.
inline void gemm_acc_bt(double* C, const double* A, const double* B,
                        std::size_t M, std::size_t K, std::size_t N) {
  for (std::size_t m = 0; m < M; ++m) {
    const double* a = A + m * K;
    double* c = C + m * N;
    for (std::size_t n = 0; n < N; ++n) {
      const double* b = B + n * K;
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
      c[n] += acc;
    }
  }
}

// C[M,N] += A^T * B where A is [K,M] row-major and B is [K,N] row-major.
inline void gemm_acc_at(double* C, const double* A, const double* B,
                        std::size_t M, std::size_t K, std::size_t N) {
  for (std::size_t k = 0; k < K; ++k) {
    const double* a = A + k * M;
    const double* b = B + k * N;
    for (std::size_t m = 0; m < M; ++m) {
      const double av = a[m];
      double* c = C + m * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += av * b[n];
    }
  }
}

// Unfold one sample [C,H,W] into columns [C*kh*kw, H*W] under zero padding
// that keeps the output the same size (pad = kernel/2, odd kernels only).
inline void im2col(const double* x, std::size_t C, std::size_t H, std::size_t W,
                   std::size_t kh, std::size_t kw, double* cols) {
  const std::size_t ph = kh / 2, pw = kw / 2;
  const std::size_t hw = H * W;
  std::size_t row = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t dh = 0; dh < kh; ++dh) {
      for (std::size_t dw = 0; dw < kw; ++dw, ++row) {
        double* out = cols + row * hw;
        const long oh = long(dh) - long(ph), ow = long(dw) - long(pw);
        for (std::size_t h = 0; h < H; ++h) {
          const long sh = long(h) + oh;
          double* orow = out + h * W;
          if (sh < 0 || sh >= long(H)) {
            std::fill(orow, orow + W, 0.0);
            continue;
          }
          const double* srow = x + (c * H + std::size_t(sh)) * W;
          for (std::size_t w = 0; w < W; ++w) {
            const long sw = long(w) + ow;
            orow[w] = (sw < 0 || sw >= long(W)) ? 0.0 : srow[sw];
          }
        }
      }
    }
  }
}

// Fold column gradients back onto one sample, accumulating where windows
// overlap. Iteration order mirrors im2col.
inline void col2im_acc(const double* cols, std::size_t C, std::size_t H,
                       std::size_t W, std::size_t kh, std::size_t kw,
                       double* dx) {
  const std::size_t ph = kh / 2, pw = kw / 2;
  const std::size_t hw = H * W;
  std::size_t row = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t dh = 0; dh < kh; ++dh) {
      for (std::size_t dw = 0; dw < kw; ++dw, ++row) {
        const double* in = cols + row * hw;
        const long oh = long(dh) - long(ph), ow = long(dw) - long(pw);
        for (std::size_t h = 0; h < H; ++h) {
          const long sh = long(h) + oh;
          if (sh < 0 || sh >= long(H)) continue;
          double* drow = dx + (c * H + std::size_t(sh)) * W;
          const double* irow = in + h * W;
          for (std::size_t w = 0; w < W; ++w) {
            const long sw = long(w) + ow;
            if (sw < 0 || sw >= long(W)) continue;
            drow[sw] += irow[w];
          }
        }
      }
    }
  }
}

}  // namespace detail

inline void check_conv_args(const Tensor& x, const Tensor& k, const Tensor& b,
                            const char* op) {
  require(x.rank() == 4, ErrorKind::Shape,
          std::string(op) + ": input must be rank 4, got " + shape_str(x.shape()));
  require(k.rank() == 4, ErrorKind::Shape,
          std::string(op) + ": kernel must be rank 4, got " + shape_str(k.shape()));
  require(b.rank() == 1, ErrorKind::Shape,
          std::string(op) + ": bias must be rank 1, got " + shape_str(b.shape()));
}

// kernel [Co,Ci,k,k] with odd square k, stride 1, zero padding that keeps
// the spatial size; bias [Co] added to every output pixel.
inline Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b) {
  check_conv_args(x, k, b, "conv2d");
  const std::size_t N = x.extent(0), Ci = x.extent(1), H = x.extent(2), W = x.extent(3);
  const std::size_t Co = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  require(k.extent(1) == Ci, ErrorKind::Shape,
          "conv2d: kernel expects " + std::to_string(k.extent(1)) +
              " input channels, input has " + std::to_string(Ci));
  require(kh == kw && kh % 2 == 1, ErrorKind::Shape,
          "conv2d: kernel must be square with odd side, got " + shape_str(k.shape()));
  require(b.extent(0) == Co, ErrorKind::Shape,
          "conv2d: bias length " + std::to_string(b.extent(0)) +
              " does not match " + std::to_string(Co) + " output channels");

  Tensor y(Shape{N, Co, H, W});
  const std::size_t hw = H * W, ckk = Ci * kh * kw;
  std::vector<double> cols(ckk * hw);
  for (std::size_t n = 0; n < N; ++n) {
    detail::im2col(x.data() + n * Ci * hw, Ci, H, W, kh, kw, cols.data());
    double* out = y.data() + n * Co * hw;
    for (std::size_t co = 0; co < Co; ++co)
      std::fill(out + co * hw, out + (co + 1) * hw, b[co]);
    detail::gemm_acc(out, k.data(), cols.data(), Co, ckk, hw);
  }
  return y;
}

struct ConvGrads {
  Tensor dx, dk, db;
};

inline ConvGrads conv2d_backward(const Tensor& x, const Tensor& k,
                                 const Tensor& dy) {
  const std::size_t N = x.extent(0), Ci = x.extent(1), H = x.extent(2), W = x.extent(3);
  const std::size_t Co = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const std::size_t hw = H * W, ckk = Ci * kh * kw;

  ConvGrads g{Tensor(x.shape()), Tensor(k.shape()), Tensor(Shape{Co})};
  std::vector<double> cols(ckk * hw), dcols(ckk * hw);
  for (std::size_t n = 0; n < N; ++n) {
    const double* dyn = dy.data() + n * Co * hw;
    detail::im2col(x.data() + n * Ci * hw, Ci, H, W, kh, kw, cols.data());
    // dk += dy * cols^T
    detail::gemm_acc_bt(g.dk.data(), dyn, cols.data(), Co, hw, ckk);
    // dcols = k^T * dy, folded back into dx
    std::fill(dcols.begin(), dcols.end(), 0.0);
    detail::gemm_acc_at(dcols.data(), k.data(), dyn, ckk, Co, hw);
    detail::col2im_acc(dcols.data(), Ci, H, W, kh, kw,
                       g.dx.data() + n * Ci * hw);
    for (std::size_t co = 0; co < Co; ++co) {
      const double* row = dyn + co * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += row[i];
      g.db[co] += acc;
    }
  }
  return g;
}

// 2x2 window, stride 2. Height and width must be even; ties resolve to the
// first maximal element in row-major window order, both here and in the
// backward routing.
inline Tensor maxpool2_forward(const Tensor& x) {
  require(x.rank() == 4, ErrorKind::Shape,
          "maxpool2: input must be rank 4, got " + shape_str(x.shape()));
  const std::size_t N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  require(H % 2 == 0 && W % 2 == 0, ErrorKind::Shape,
          "maxpool2: spatial extents must be even, got " + shape_str(x.shape()));
  Tensor y(Shape{N, C, H / 2, W / 2});
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const double* in = x.data() + nc * H * W;
    double* out = y.data() + nc * (H / 2) * (W / 2);
    for (std::size_t h = 0; h < H / 2; ++h)
      for (std::size_t w = 0; w < W / 2; ++w) {
        const double* p = in + 2 * h * W + 2 * w;
        double m = p[0];
        if (p[1] > m) m = p[1];
        if (p[W] > m) m = p[W];
        if (p[W + 1] > m) m = p[W + 1];
        out[h * (W / 2) + w] = m;
      }
  }
  return y;
}

inline Tensor maxpool2_backward(const Tensor& x, const Tensor& dy) {
  const std::size_t N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  Tensor dx(x.shape());
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const double* in = x.data() + nc * H * W;
    const double* g = dy.data() + nc * (H / 2) * (W / 2);
    double* out = dx.data() + nc * H * W;
    for (std::size_t h = 0; h < H / 2; ++h)
      for (std::size_t w = 0; w < W / 2; ++w) {
        const std::size_t base = 2 * h * W + 2 * w;
        const double v[4] = {in[base], in[base + 1], in[base + W], in[base + W + 1]};
        std::size_t arg = 0;
        for (std::size_t i = 1; i < 4; ++i)
          if (v[i] > v[arg]) arg = i;
        const std::size_t off[4] = {base, base + 1, base + W, base + W + 1};
        out[off[arg]] += g[h * (W / 2) + w];
      }
  }
  return dx;
}

// Learned 2x upsampling: kernel [Ci,Co,2,2], stride 2, so each output pixel
// receives exactly one input pixel and the windows never overlap.
inline Tensor upconv2_forward(const Tensor& x, const Tensor& k, const Tensor& b) {
  check_conv_args(x, k, b, "upconv2");
  const std::size_t N = x.extent(0), Ci = x.extent(1), H = x.extent(2), W = x.extent(3);
  require(k.extent(0) == Ci && k.extent(2) == 2 && k.extent(3) == 2,
          ErrorKind::Shape,
          "upconv2: kernel must be [in,out,2,2] with in=" + std::to_string(Ci) +
              ", got " + shape_str(k.shape()));
  const std::size_t Co = k.extent(1);
  require(b.extent(0) == Co, ErrorKind::Shape,
          "upconv2: bias length " + std::to_string(b.extent(0)) +
              " does not match " + std::to_string(Co) + " output channels");
  Tensor y(Shape{N, Co, 2 * H, 2 * W});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      double* out = y.data() + (n * Co + co) * 4 * H * W;
      std::fill(out, out + 4 * H * W, b[co]);
    }
    for (std::size_t ci = 0; ci < Ci; ++ci) {
      const double* in = x.data() + (n * Ci + ci) * H * W;
      for (std::size_t co = 0; co < Co; ++co) {
        const double* kk = k.data() + (ci * Co + co) * 4;
        double* out = y.data() + (n * Co + co) * 4 * H * W;
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < W; ++w) {
            const double v = in[h * W + w];
            double* o = out + 2 * h * 2 * W + 2 * w;
            o[0] += v * kk[0];
            o[1] += v * kk[1];
            o[2 * W] += v * kk[2];
            o[2 * W + 1] += v * kk[3];
          }
      }
    }
  }
  return y;
}

inline ConvGrads upconv2_backward(const Tensor& x, const Tensor& k,
                                  const Tensor& dy) {
  const std::size_t N = x.extent(0), Ci = x.extent(1), H = x.extent(2), W = x.extent(3);
  const std::size_t Co = k.extent(1);
  ConvGrads g{Tensor(x.shape()), Tensor(k.shape()), Tensor(Shape{Co})};
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t ci = 0; ci < Ci; ++ci) {
      const double* in = x.data() + (n * Ci + ci) * H * W;
      double* dxp = g.dx.data() + (n * Ci + ci) * H * W;
      for (std::size_t co = 0; co < Co; ++co) {
        const double* kk = k.data() + (ci * Co + co) * 4;
        double* dkk = g.dk.data() + (ci * Co + co) * 4;
        const double* dyp = dy.data() + (n * Co + co) * 4 * H * W;
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < W; ++w) {
            const double* d = dyp + 2 * h * 2 * W + 2 * w;
            const double d0 = d[0], d1 = d[1], d2 = d[2 * W], d3 = d[2 * W + 1];
            dxp[h * W + w] += d0 * kk[0] + d1 * kk[1] + d2 * kk[2] + d3 * kk[3];
            const double v = in[h * W + w];
            dkk[0] += v * d0;
            dkk[1] += v * d1;
            dkk[2] += v * d2;
            dkk[3] += v * d3;
          }
      }
    }
    for (std::size_t co = 0; co < Co; ++co) {
      const double* dyp = dy.data() + (n * Co + co) * 4 * H * W;
      double acc = 0.0;
      for (std::size_t i = 0; i < 4 * H * W; ++i) acc += dyp[i];
      g.db[co] += acc;
    }
  }
  return g;
}

// The derivative at exactly zero is taken as zero.
inline Tensor relu_forward(const Tensor& x) {
  return map_unary(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

inline Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i)
    dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

inline double sigmoid_scalar(double v) {
  if (v >= 0.0) {
    const double e = std::exp(-v);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Tensor sigmoid_forward(const Tensor& x) {
  return map_unary(x, sigmoid_scalar);
}

inline Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i)
    dx[i] = dy[i] * y[i] * (1.0 - y[i]);
  return dx;
}

}  // namespace seglab
