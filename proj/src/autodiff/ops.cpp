#include "acf/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "acf/resample.hpp"
#include "acf/simd/kernels.hpp"

namespace acf::ad {
namespace {

using simd::Trans;

template <class T>
void same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape != b.tape) throw ArgumentError(std::string(op) + ": operands live on different tapes");
}

template <class T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  simd::kernels<T>().axpy(src.size(), T(1), src.data(), dst.data());
}

struct ConvDims {
  int n, cin, h, w, cout, kh, kw, ho, wo;
  std::size_t col_rows() const { return static_cast<std::size_t>(cin) * kh * kw; }
  std::size_t col_cols() const { return static_cast<std::size_t>(ho) * wo; }
  bool pointwise(const ConvGeometry& g) const {
    return kh == 1 && kw == 1 && g.stride == 1 && g.padding == 0;
  }
};

template <class T>
void im2col(const T* x, const ConvDims& d, const ConvGeometry& g, T* col) {
  const std::size_t cols = d.col_cols();
  for (int c = 0; c < d.cin; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        T* row = col + ((static_cast<std::size_t>(c) * d.kh + ki) * d.kw + kj) * cols;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ki * g.dilation;
          T* out = row + static_cast<std::size_t>(oy) * d.wo;
          if (iy < 0 || iy >= d.h) {
            std::fill(out, out + d.wo, T(0));
            continue;
          }
          const T* in = plane + static_cast<std::size_t>(iy) * d.w;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kj * g.dilation;
            out[ox] = (ix >= 0 && ix < d.w) ? in[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, const ConvDims& d, const ConvGeometry& g, T* x) {
  const std::size_t cols = d.col_cols();
  for (int c = 0; c < d.cin; ++c) {
    T* plane = x + static_cast<std::size_t>(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const T* row = col + ((static_cast<std::size_t>(c) * d.kh + ki) * d.kw + kj) * cols;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ki * g.dilation;
          if (iy < 0 || iy >= d.h) continue;
          const T* in = row + static_cast<std::size_t>(oy) * d.wo;
          T* out = plane + static_cast<std::size_t>(iy) * d.w;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kj * g.dilation;
            if (ix >= 0 && ix < d.w) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

template <class T>
T activate(T v, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return v > T(0) ? v : T(0);
    case Activation::sigmoid:
      return sigmoid_value(v);
    case Activation::none:
      break;
  }
  return v;
}

// Strides of `b` when broadcast against a rank-4 `a`; zero on broadcast axes.
std::array<std::size_t, 4> broadcast_strides(const Shape& a, const Shape& b) {
  std::array<std::size_t, 4> bs{};
  std::size_t stride = 1;
  for (int ax = 3; ax >= 0; --ax) {
    const int bd = b[ax];
    if (bd != a[ax] && bd != 1)
      throw ShapeError("mul: cannot broadcast " + b.str() + " onto " + a.str());
    bs[static_cast<std::size_t>(ax)] = bd == 1 ? 0 : stride;
    stride *= static_cast<std::size_t>(bd);
  }
  return bs;
}

}  // namespace

int conv_output_size(int in, int kernel, const ConvGeometry& g) {
  if (g.stride < 1 || g.dilation < 1 || g.padding < 0)
    throw ArgumentError("conv2d: stride and dilation must be >= 1, padding >= 0");
  const int span = in + 2 * g.padding - g.dilation * (kernel - 1) - 1;
  if (span < 0)
    throw GeometryError("conv2d: output size < 1 (input " + std::to_string(in) + ", kernel " +
                        std::to_string(kernel) + ")");
  return span / g.stride + 1;
}

template <class T>
T sigmoid_value(T x) {
  T y;
  if (x >= T(0)) {
    y = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    y = e / (T(1) + e);
  }
  constexpr T lo = std::numeric_limits<T>::denorm_min();
  const T hi = std::nextafter(T(1), T(0));
  return std::clamp(y, lo, hi);
}

// ---------------------------------------------------------------------------
// convolution

template <class T>
Var<T> conv2d(Var<T> x, Var<T> kernel, std::optional<std::type_identity_t<Var<T>>> bias,
              ConvGeometry geometry) {
  same_tape(x, kernel, "conv2d");
  const Shape& xs = x.shape();
  const Shape& ks = kernel.shape();
  require_rank4(xs, "conv2d input");
  require_rank4(ks, "conv2d kernel");
  if (xs.c() != ks.c())
    throw ShapeError("conv2d: input has " + std::to_string(xs.c()) + " channels, kernel expects " +
                     std::to_string(ks.c()));
  if (bias && (bias->shape().numel() != static_cast<std::size_t>(ks.n())))
    throw ShapeError("conv2d: bias length must equal output channels");

  ConvDims d{xs.n(), xs.c(), xs.h(), xs.w(), ks.n(), ks.h(), ks.w(), 0, 0};
  d.ho = conv_output_size(d.h, d.kh, geometry);
  d.wo = conv_output_size(d.w, d.kw, geometry);

  const auto& kern = simd::kernels<T>();
  Tensor<T> out(Shape::nchw(d.n, d.cout, d.ho, d.wo));
  const std::size_t rows = d.col_rows(), cols = d.col_cols();
  const std::size_t in_plane = static_cast<std::size_t>(d.cin) * d.h * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.cout) * cols;
  const bool pw = d.pointwise(geometry);
  // Unfolded inputs are kept for the kernel gradient when it will be needed.
  const bool keep_cols = !pw && x.tape->recording() && x.tape->requires_grad(kernel.id);
  auto cols_cache = std::make_shared<std::vector<T>>();
  if (!pw) cols_cache->resize(rows * cols * (keep_cols ? static_cast<std::size_t>(d.n) : 1));

  const T* xv = x.value().data();
  const T* kv = kernel.value().data();
  for (int n = 0; n < d.n; ++n) {
    const T* src = xv + n * in_plane;
    if (!pw) {
      T* col = cols_cache->data() + (keep_cols ? n * rows * cols : 0);
      im2col(src, d, geometry, col);
      src = col;
    }
    T* dst = out.data() + n * out_plane;
    kern.gemm_nn(static_cast<std::size_t>(d.cout), cols, rows, kv, rows, src, cols, dst, cols, false);
    if (bias) {
      const T* bv = bias->value().data();
      for (int c = 0; c < d.cout; ++c) {
        T* p = dst + static_cast<std::size_t>(c) * cols;
        for (std::size_t i = 0; i < cols; ++i) p[i] += bv[c];
      }
    }
  }

  if (!keep_cols) cols_cache.reset();

  const std::size_t xid = x.id, kid = kernel.id;
  const std::optional<std::size_t> bid = bias ? std::optional<std::size_t>(bias->id) : std::nullopt;
  std::vector<std::size_t> inputs{xid, kid};
  if (bid) inputs.push_back(*bid);

  return x.tape->record(std::move(out), inputs, [=](Tape<T>& t, const Tensor<T>& g) {
    const auto& kern = simd::kernels<T>();
    const bool need_x = t.requires_grad(xid);
    const bool need_k = t.requires_grad(kid);
    const bool need_b = bid && t.requires_grad(*bid);
    const T* xv = t.value(xid).data();
    const T* kv = t.value(kid).data();
    std::vector<T> dcol;
    if (!pw && need_x) dcol.resize(rows * cols);
    for (int n = 0; n < d.n; ++n) {
      const T* gn = g.data() + n * out_plane;
      if (need_k) {
        const T* src = pw ? xv + n * in_plane : cols_cache->data() + n * rows * cols;
        // dK (cout×rows) += g (cout×cols) · colᵀ
        simd::gemm(kern, Trans::no, Trans::yes, static_cast<std::size_t>(d.cout), rows, cols, gn,
                   cols, src, cols, t.grad(kid).data(), rows, true);
      }
      if (need_x) {
        T* dx = t.grad(xid).data() + n * in_plane;
        if (pw) {
          simd::gemm(kern, Trans::yes, Trans::no, rows, cols, static_cast<std::size_t>(d.cout), kv,
                     rows, gn, cols, dx, cols, true);
        } else {
          simd::gemm(kern, Trans::yes, Trans::no, rows, cols, static_cast<std::size_t>(d.cout), kv,
                     rows, gn, cols, dcol.data(), cols, false);
          col2im_add(dcol.data(), d, geometry, dx);
        }
      }
      if (need_b) {
        T* db = t.grad(*bid).data();
        for (int c = 0; c < d.cout; ++c) {
          const T* p = gn + static_cast<std::size_t>(c) * cols;
          T s = 0;
          for (std::size_t i = 0; i < cols; ++i) s += p[i];
          db[c] += s;
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// batch normalisation

template <class T>
Var<T> batchnorm2d(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean,
                   Tensor<T>& running_var, BnMode mode, T eps, T momentum) {
  same_tape(x, gamma, "batchnorm2d");
  same_tape(x, beta, "batchnorm2d");
  const Shape& xs = x.shape();
  require_rank4(xs, "batchnorm2d input");
  const int n = xs.n(), c = xs.c();
  const std::size_t plane = static_cast<std::size_t>(xs.h()) * xs.w();
  const auto cn = static_cast<std::size_t>(c);
  if (gamma.value().size() != cn || beta.value().size() != cn || running_mean.size() != cn ||
      running_var.size() != cn)
    throw ShapeError("batchnorm2d: per-channel parameters must have " + std::to_string(c) +
                     " entries");
  if (!(eps > T(0))) throw ArgumentError("batchnorm2d: epsilon must be positive");
  const std::size_t count = static_cast<std::size_t>(n) * plane;
  if (count == 0) throw GeometryError("batchnorm2d: empty batch·spatial extent");

  std::vector<T> mean(cn), invstd(cn);
  const T* xv = x.value().data();
  if (mode == BnMode::train) {
    for (std::size_t ch = 0; ch < cn; ++ch) {
      double s = 0;
      for (int b = 0; b < n; ++b) {
        const T* p = xv + (static_cast<std::size_t>(b) * cn + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double sq = 0;
      for (int b = 0; b < n; ++b) {
        const T* p = xv + (static_cast<std::size_t>(b) * cn + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double dv = p[i] - mu;
          sq += dv * dv;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean[ch] = static_cast<T>(mu);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * static_cast<T>(mu);
      running_var[ch] = (T(1) - momentum) * running_var[ch] + momentum * static_cast<T>(unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < cn; ++ch) {
      mean[ch] = running_mean[ch];
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[ch]) + eps));
    }
  }

  Tensor<T> out(xs);
  const T* gv = gamma.value().data();
  const T* bv = beta.value().data();
  for (int b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < cn; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(b) * cn + ch) * plane;
      const T a = gv[ch] * invstd[ch];
      const T shift = bv[ch] - a * mean[ch];
      for (std::size_t i = 0; i < plane; ++i) out[off + i] = a * xv[off + i] + shift;
    }
  }

  const std::size_t xid = x.id, gid = gamma.id, bid = beta.id;
  return x.tape->record(std::move(out), {xid, gid, bid}, [=](Tape<T>& t, const Tensor<T>& g) {
    const T* xv = t.value(xid).data();
    const T* gv = t.value(gid).data();
    std::vector<double> sum_g(cn, 0.0), sum_gx(cn, 0.0);
    for (int b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < cn; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(b) * cn + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (xv[off + i] - mean[ch]) * invstd[ch];
          sum_g[ch] += g[off + i];
          sum_gx[ch] += g[off + i] * xhat;
        }
      }
    }
    if (t.requires_grad(gid)) {
      Tensor<T>& dg = t.grad(gid);
      for (std::size_t ch = 0; ch < cn; ++ch) dg[ch] += static_cast<T>(sum_gx[ch]);
    }
    if (t.requires_grad(bid)) {
      Tensor<T>& db = t.grad(bid);
      for (std::size_t ch = 0; ch < cn; ++ch) db[ch] += static_cast<T>(sum_g[ch]);
    }
    if (!t.requires_grad(xid)) return;
    Tensor<T>& dx = t.grad(xid);
    const double m = static_cast<double>(count);
    for (int b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < cn; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(b) * cn + ch) * plane;
        const double k = static_cast<double>(gv[ch]) * invstd[ch];
        if (mode == BnMode::eval) {
          for (std::size_t i = 0; i < plane; ++i) dx[off + i] += static_cast<T>(k * g[off + i]);
        } else {
          const double mg = sum_g[ch] / m, mgx = sum_gx[ch] / m;
          for (std::size_t i = 0; i < plane; ++i) {
            const double xhat = (xv[off + i] - mean[ch]) * invstd[ch];
            dx[off + i] += static_cast<T>(k * (g[off + i] - mg - xhat * mgx));
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise

template <class T>
Var<T> activation(Var<T> x, Activation kind) {
  if (kind == Activation::none) return x;
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = activate(xv[i], kind);
  const std::size_t xid = x.id;
  Tape<T>* tape = x.tape;
  const std::size_t yid = tape->size();
  return tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>& dx = t.grad(xid);
    const Tensor<T>& y = t.value(yid);
    if (kind == Activation::relu) {
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] > T(0)) dx[i] += g[i];
    } else {
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += g[i] * y[i] * (T(1) - y[i]);
    }
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  same_tape(a, b, "add");
  if (!(a.shape() == b.shape()))
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> out(a.shape());
  simd::kernels<T>().add(out.size(), a.value().data(), b.value().data(), out.data());
  const std::size_t aid = a.id, bid = b.id;
  return a.tape->record(std::move(out), {aid, bid}, [=](Tape<T>& t, const Tensor<T>& g) {
    if (t.requires_grad(aid)) accumulate(t.grad(aid), g);
    if (t.requires_grad(bid)) accumulate(t.grad(bid), g);
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  same_tape(a, b, "mul");
  const Shape as = a.shape(), bs = b.shape();
  const std::size_t aid = a.id, bid = b.id;
  if (as == bs) {
    Tensor<T> out(as);
    simd::kernels<T>().mul(out.size(), a.value().data(), b.value().data(), out.data());
    return a.tape->record(std::move(out), {aid, bid}, [=](Tape<T>& t, const Tensor<T>& g) {
      const auto& kern = simd::kernels<T>();
      std::vector<T> tmp(g.size());
      if (t.requires_grad(aid)) {
        kern.mul(g.size(), g.data(), t.value(bid).data(), tmp.data());
        kern.axpy(g.size(), T(1), tmp.data(), t.grad(aid).data());
      }
      if (t.requires_grad(bid)) {
        kern.mul(g.size(), g.data(), t.value(aid).data(), tmp.data());
        kern.axpy(g.size(), T(1), tmp.data(), t.grad(bid).data());
      }
    });
  }
  require_rank4(as, "mul (broadcast) lhs");
  require_rank4(bs, "mul (broadcast) rhs");
  const auto st = broadcast_strides(as, bs);
  const int dn = as.n(), dc = as.c(), dh = as.h(), dw = as.w();
  auto for_each = [=](auto&& fn) {
    std::size_t i = 0;
    for (int n = 0; n < dn; ++n)
      for (int c = 0; c < dc; ++c)
        for (int h = 0; h < dh; ++h)
          for (int w = 0; w < dw; ++w, ++i)
            fn(i, n * st[0] + c * st[1] + h * st[2] + w * st[3]);
  };
  Tensor<T> out(as);
  const T* av = a.value().data();
  const T* bv = b.value().data();
  for_each([&](std::size_t i, std::size_t j) { out[i] = av[i] * bv[j]; });
  return a.tape->record(std::move(out), {aid, bid}, [=](Tape<T>& t, const Tensor<T>& g) {
    const T* av = t.value(aid).data();
    const T* bv = t.value(bid).data();
    if (t.requires_grad(aid)) {
      T* da = t.grad(aid).data();
      for_each([&](std::size_t i, std::size_t j) { da[i] += g[i] * bv[j]; });
    }
    if (t.requires_grad(bid)) {
      T* db = t.grad(bid).data();
      for_each([&](std::size_t i, std::size_t j) { db[j] += g[i] * av[i]; });
    }
  });
}

template <class T>
Var<T> scale(Var<T> a, std::type_identity_t<T> factor) {
  Tensor<T> out(a.shape());
  simd::kernels<T>().scale(out.size(), factor, a.value().data(), out.data());
  const std::size_t aid = a.id;
  return a.tape->record(std::move(out), {aid}, [=](Tape<T>& t, const Tensor<T>& g) {
    simd::kernels<T>().axpy(g.size(), factor, g.data(), t.grad(aid).data());
  });
}

template <class T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshaped(shape);
  const std::size_t xid = x.id;
  return x.tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>& dx = t.grad(xid);
    simd::kernels<T>().axpy(g.size(), T(1), g.data(), dx.data());
  });
}

template <class T>
Var<T> sum(Var<T> x) {
  double s = 0;
  for (T v : x.value().values()) s += v;
  const std::size_t xid = x.id;
  return x.tape->record(Tensor<T>::scalar(static_cast<T>(s)), {xid},
                        [=](Tape<T>& t, const Tensor<T>& g) {
                          Tensor<T>& dx = t.grad(xid);
                          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
                        });
}

template <class T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T(1) / static_cast<T>(x.value().size()));
}

// ---------------------------------------------------------------------------
// pooling / resampling / channel plumbing

template <class T>
Var<T> pool(Var<T> x, PoolKind kind) {
  const Shape xs = x.shape();
  require_rank4(xs, "pool input");
  const int n = xs.n(), c = xs.c();
  const std::size_t plane = static_cast<std::size_t>(xs.h()) * xs.w();
  const T* xv = x.value().data();
  const std::size_t xid = x.id;

  if (kind == PoolKind::gap_spatial) {
    Tensor<T> out(Shape::nchw(n, c, 1, 1));
    for (std::size_t nc = 0; nc < static_cast<std::size_t>(n) * c; ++nc) {
      double s = 0;
      for (std::size_t i = 0; i < plane; ++i) s += xv[nc * plane + i];
      out[nc] = static_cast<T>(s / static_cast<double>(plane));
    }
    return x.tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
      Tensor<T>& dx = t.grad(xid);
      const T inv = T(1) / static_cast<T>(plane);
      for (std::size_t nc = 0; nc < static_cast<std::size_t>(n) * c; ++nc)
        for (std::size_t i = 0; i < plane; ++i) dx[nc * plane + i] += g[nc] * inv;
    });
  }

  Tensor<T> out(Shape::nchw(n, 1, xs.h(), xs.w()));
  std::vector<int> argmax;
  if (kind == PoolKind::gmp_channel) argmax.resize(static_cast<std::size_t>(n) * plane);
  for (int b = 0; b < n; ++b) {
    const T* base = xv + static_cast<std::size_t>(b) * c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (kind == PoolKind::gap_channel) {
        double s = 0;
        for (int ch = 0; ch < c; ++ch) s += base[ch * plane + i];
        out[b * plane + i] = static_cast<T>(s / c);
      } else {
        int best = 0;
        T bv = base[i];
        for (int ch = 1; ch < c; ++ch) {
          if (base[ch * plane + i] > bv) {
            bv = base[ch * plane + i];
            best = ch;
          }
        }
        out[b * plane + i] = bv;
        argmax[b * plane + i] = best;
      }
    }
  }
  return x.tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>& dx = t.grad(xid);
    for (int b = 0; b < n; ++b) {
      T* base = dx.data() + static_cast<std::size_t>(b) * c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T gi = g[b * plane + i];
        if (kind == PoolKind::gap_channel) {
          for (int ch = 0; ch < c; ++ch) base[ch * plane + i] += gi / static_cast<T>(c);
        } else {
          base[argmax[b * plane + i] * plane + i] += gi;
        }
      }
    }
  });
}

template <class T>
Var<T> resize_bilinear(Var<T> x, int out_h, int out_w) {
  const Shape xs = x.shape();
  require_rank4(xs, "resize_bilinear input");
  if (out_h < 1 || out_w < 1) throw GeometryError("resize_bilinear: target size must be >= 1");
  const int planes = xs.n() * xs.c(), ih = xs.h(), iw = xs.w();
  Tensor<T> out(Shape::nchw(xs.n(), xs.c(), out_h, out_w));
  const std::size_t in_plane = static_cast<std::size_t>(ih) * iw;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  for (int p = 0; p < planes; ++p)
    bilinear_resize_plane(x.value().data() + p * in_plane, ih, iw, out.data() + p * out_plane, out_h,
                          out_w);
  const std::size_t xid = x.id;
  return x.tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>& dx = t.grad(xid);
    for (int p = 0; p < planes; ++p)
      bilinear_resize_plane_adjoint(g.data() + p * out_plane, out_h, out_w, dx.data() + p * in_plane,
                                    ih, iw);
  });
}

template <class T>
Var<T> upsample_bilinear(Var<T> x, int factor) {
  if (factor < 1) throw ArgumentError("upsample_bilinear: factor must be >= 1");
  require_rank4(x.shape(), "upsample_bilinear input");
  if (factor == 1) return x;
  return resize_bilinear(x, x.shape().h() * factor, x.shape().w() * factor);
}

template <class T>
Var<T> concat_channels(std::span<const Var<T>> xs) {
  if (xs.empty()) throw ArgumentError("concat_channels: empty input list");
  const Shape first = xs[0].shape();
  require_rank4(first, "concat_channels input");
  int total = 0;
  std::vector<std::size_t> ids;
  std::vector<int> chans;
  for (const Var<T>& v : xs) {
    same_tape(xs[0], v, "concat_channels");
    const Shape& s = v.shape();
    require_rank4(s, "concat_channels input");
    if (s.n() != first.n() || s.h() != first.h() || s.w() != first.w())
      throw ShapeError("concat_channels: N/H/W mismatch " + first.str() + " vs " + s.str());
    total += s.c();
    ids.push_back(v.id);
    chans.push_back(s.c());
  }
  const int n = first.n();
  const std::size_t plane = static_cast<std::size_t>(first.h()) * first.w();
  Tensor<T> out(Shape::nchw(n, total, first.h(), first.w()));
  for (int b = 0; b < n; ++b) {
    T* dst = out.data() + static_cast<std::size_t>(b) * total * plane;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const std::size_t len = static_cast<std::size_t>(chans[k]) * plane;
      const T* src = xs[k].value().data() + b * len;
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  return xs[0].tape->record(std::move(out), ids, [=](Tape<T>& t, const Tensor<T>& g) {
    for (int b = 0; b < n; ++b) {
      const T* src = g.data() + static_cast<std::size_t>(b) * total * plane;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const std::size_t len = static_cast<std::size_t>(chans[k]) * plane;
        if (t.requires_grad(ids[k])) {
          T* dst = t.grad(ids[k]).data() + b * len;
          simd::kernels<T>().axpy(len, T(1), src, dst);
        }
        src += len;
      }
    }
  });
}

template <class T>
Var<T> slice_channels(Var<T> x, int begin, int count) {
  const Shape xs = x.shape();
  require_rank4(xs, "slice_channels input");
  if (begin < 0 || count < 1 || begin + count > xs.c())
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + xs.str());
  const int n = xs.n(), c = xs.c();
  const std::size_t plane = static_cast<std::size_t>(xs.h()) * xs.w();
  const std::size_t len = static_cast<std::size_t>(count) * plane;
  Tensor<T> out(Shape::nchw(n, count, xs.h(), xs.w()));
  for (int b = 0; b < n; ++b) {
    const T* src = x.value().data() + (static_cast<std::size_t>(b) * c + begin) * plane;
    std::copy(src, src + len, out.data() + b * len);
  }
  const std::size_t xid = x.id;
  return x.tape->record(std::move(out), {xid}, [=](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T>& dx = t.grad(xid);
    for (int b = 0; b < n; ++b)
      simd::kernels<T>().axpy(len, T(1), g.data() + b * len,
                              dx.data() + (static_cast<std::size_t>(b) * c + begin) * plane);
  });
}

template <class T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  same_tape(x, weight, "linear");
  same_tape(x, bias, "linear");
  const Shape xs = x.shape(), ws = weight.shape();
  if (ws.rank() != 2) throw ShapeError("linear: weight must be (out,in), got " + ws.str());
  const int out_f = ws[0], in_f = ws[1];
  int rows = 0;
  if (xs.rank() == 1) {
    rows = 1;
    if (xs[0] != in_f) throw ShapeError("linear: input length " + std::to_string(xs[0]) +
                                        " != weight input dim " + std::to_string(in_f));
  } else if (xs.rank() == 2) {
    rows = xs[0];
    if (xs[1] != in_f) throw ShapeError("linear: input width " + std::to_string(xs[1]) +
                                        " != weight input dim " + std::to_string(in_f));
  } else {
    throw ShapeError("linear: input must be flat (in) or (N,in), got " + xs.str());
  }
  if (bias.value().size() != static_cast<std::size_t>(out_f))
    throw ShapeError("linear: bias length must equal output dim");

  const auto m = static_cast<std::size_t>(rows), o = static_cast<std::size_t>(out_f),
             i = static_cast<std::size_t>(in_f);
  Tensor<T> out(xs.rank() == 1 ? Shape{out_f} : Shape{rows, out_f});
  simd::gemm(Trans::no, Trans::yes, m, o, i, x.value().data(), i, weight.value().data(), i,
             out.data(), o, false);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < o; ++k) out[r * o + k] += bias.value()[k];

  const std::size_t xid = x.id, wid = weight.id, bid = bias.id;
  return x.tape->record(std::move(out), {xid, wid, bid}, [=](Tape<T>& t, const Tensor<T>& g) {
    if (t.requires_grad(xid))
      simd::gemm(Trans::no, Trans::no, m, i, o, g.data(), o, t.value(wid).data(), i,
                 t.grad(xid).data(), i, true);
    if (t.requires_grad(wid))
      simd::gemm(Trans::yes, Trans::no, o, i, m, g.data(), o, t.value(xid).data(), i,
                 t.grad(wid).data(), i, true);
    if (t.requires_grad(bid)) {
      Tensor<T>& db = t.grad(bid);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t k = 0; k < o; ++k) db[k] += g[r * o + k];
    }
  });
}

// ---------------------------------------------------------------------------
// losses

template <class T>
Var<T> bce_loss(Var<T> p, const Tensor<T>& g, T eps) {
  if (!(p.shape() == g.shape()))
    throw ShapeError("bce_loss: prediction " + p.shape().str() + " vs target " + g.shape().str());
  const Tensor<T>& pv = p.value();
  const T lo = eps, hi = T(1) - eps;
  double s = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double pc = std::clamp(pv[i], lo, hi);
    s -= g[i] * std::log(pc) + (1.0 - g[i]) * std::log(1.0 - pc);
  }
  const double count = static_cast<double>(pv.size());
  const std::size_t pid = p.id;
  Tensor<T> target = g;
  return p.tape->record(
      Tensor<T>::scalar(static_cast<T>(s / count)), {pid},
      [=, target = std::move(target)](Tape<T>& t, const Tensor<T>& gout) {
        const Tensor<T>& pv = t.value(pid);
        Tensor<T>& dp = t.grad(pid);
        const double k = gout[0] / count;
        for (std::size_t i = 0; i < pv.size(); ++i) {
          if (pv[i] < lo || pv[i] > hi) continue;
          const double pc = pv[i];
          dp[i] += static_cast<T>(k * (-target[i] / pc + (1.0 - target[i]) / (1.0 - pc)));
        }
      });
}

template <class T>
Var<T> iou_loss(Var<T> p, const Tensor<T>& g) {
  if (!(p.shape() == g.shape()))
    throw ShapeError("iou_loss: prediction " + p.shape().str() + " vs target " + g.shape().str());
  const Shape ps = p.shape();
  const int items = ps.rank() == 4 ? ps.n() : 1;
  const std::size_t per = ps.numel() / static_cast<std::size_t>(items);
  const Tensor<T>& pv = p.value();
  std::vector<double> inter(items), uni(items);
  double loss = 0;
  for (int b = 0; b < items; ++b) {
    double in = 0, un = 0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      in += static_cast<double>(g[i]) * pv[i];
      un += static_cast<double>(pv[i]) + g[i] - static_cast<double>(g[i]) * pv[i];
    }
    inter[b] = in;
    uni[b] = un;
    if (un > 0) loss += 1.0 - in / un;
  }
  loss /= items;
  const std::size_t pid = p.id;
  Tensor<T> target = g;
  return p.tape->record(
      Tensor<T>::scalar(static_cast<T>(loss)), {pid},
      [=, target = std::move(target)](Tape<T>& t, const Tensor<T>& gout) {
        Tensor<T>& dp = t.grad(pid);
        for (int b = 0; b < items; ++b) {
          const double un = uni[b], in = inter[b];
          if (!(un > 0)) continue;
          const double k = gout[0] / items / (un * un);
          for (std::size_t i = b * per; i < (b + 1) * per; ++i)
            dp[i] -= static_cast<T>(k * (target[i] * un - in * (1.0 - target[i])));
        }
      });
}

#define ACF_INSTANTIATE_OPS(T)                                                                  \
  template T sigmoid_value<T>(T);                                                               \
  template Var<T> conv2d<T>(Var<T>, Var<T>, std::optional<Var<T>>, ConvGeometry);              \
  template Var<T> batchnorm2d<T>(Var<T>, Var<T>, Var<T>, Tensor<T>&, Tensor<T>&, BnMode, T, T); \
  template Var<T> activation<T>(Var<T>, Activation);                                            \
  template Var<T> pool<T>(Var<T>, PoolKind);                                                    \
  template Var<T> upsample_bilinear<T>(Var<T>, int);                                            \
  template Var<T> resize_bilinear<T>(Var<T>, int, int);                                         \
  template Var<T> concat_channels<T>(std::span<const Var<T>>);                                  \
  template Var<T> slice_channels<T>(Var<T>, int, int);                                          \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                            \
  template Var<T> add<T>(Var<T>, Var<T>);                                                       \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                       \
  template Var<T> scale<T>(Var<T>, T);                                                          \
  template Var<T> reshape<T>(Var<T>, Shape);                                                    \
  template Var<T> sum<T>(Var<T>);                                                               \
  template Var<T> mean<T>(Var<T>);                                                              \
  template Var<T> bce_loss<T>(Var<T>, const Tensor<T>&, T);                                     \
  template Var<T> iou_loss<T>(Var<T>, const Tensor<T>&);

ACF_INSTANTIATE_OPS(float)
ACF_INSTANTIATE_OPS(double)

#undef ACF_INSTANTIATE_OPS

}  // namespace acf::ad
