#pragma once

#include <optional>
#include <span>
#include <type_traits>

#include "acf/autodiff/tape.hpp"

namespace acf::ad {

enum class Activation { none, relu, sigmoid };
enum class PoolKind { gap_spatial, gap_channel, gmp_channel };
enum class BnMode { train, eval };

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

/// floor((in + 2·padding − dilation·(kernel−1) − 1)/stride) + 1; throws
/// GeometryError when the result is below one.
int conv_output_size(int in, int kernel, const ConvGeometry& g);

/// Zero-padded 2-D cross-correlation. kernel is Cout×Cin×Kh×Kw, bias Cout.
template <class T>
Var<T> conv2d(Var<T> x, Var<T> kernel, std::optional<std::type_identity_t<Var<T>>> bias,
              ConvGeometry geometry);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel batch normalisation. In train mode the batch statistics are
/// used and the running buffers are updated in place (running variance takes
/// the unbiased estimate); eval mode normalises with the running buffers.
template <class T>
Var<T> batchnorm2d(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean,
                   Tensor<T>& running_var, BnMode mode, T eps = T(kBatchNormEps),
                   T momentum = T(kBatchNormMomentum));

template <class T>
Var<T> activation(Var<T> x, Activation kind);
template <class T>
Var<T> relu(Var<T> x) {
  return activation(x, Activation::relu);
}
template <class T>
Var<T> sigmoid(Var<T> x) {
  return activation(x, Activation::sigmoid);
}

/// Numerically stable logistic function, kept strictly inside (0,1).
template <class T>
T sigmoid_value(T x);

/// gap_spatial → N×C×1×1, gap_channel / gmp_channel → N×1×H×W. Max ties go
/// to the lowest channel index.
template <class T>
Var<T> pool(Var<T> x, PoolKind kind);

/// Bilinear upsampling by an integer factor (half-pixel convention).
template <class T>
Var<T> upsample_bilinear(Var<T> x, int factor);

/// Bilinear resize of every N×C plane to out_h×out_w.
template <class T>
Var<T> resize_bilinear(Var<T> x, int out_h, int out_w);

template <class T>
Var<T> concat_channels(std::span<const Var<T>> xs);
template <class T>
Var<T> concat_channels(std::initializer_list<Var<T>> xs) {
  return concat_channels(std::span<const Var<T>>(xs.begin(), xs.size()));
}

template <class T>
Var<T> slice_channels(Var<T> x, int begin, int count);

/// y = x·Wᵀ + b for x of shape (in) or (N,in); weight (out,in), bias (out).
template <class T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);

template <class T>
Var<T> add(Var<T> a, Var<T> b);

/// Elementwise product. `b` may have extent 1 on any axis where `a` does
/// not, in which case it is broadcast along that axis.
template <class T>
Var<T> mul(Var<T> a, Var<T> b);

template <class T>
Var<T> scale(Var<T> a, std::type_identity_t<T> factor);

template <class T>
Var<T> reshape(Var<T> x, Shape shape);

template <class T>
Var<T> sum(Var<T> x);

template <class T>
Var<T> mean(Var<T> x);

inline constexpr double kBceClampEps = 1e-7;

/// Mean binary cross-entropy of probabilities P against targets G, with P
/// clamped to [eps, 1−eps]. Returns a scalar.
template <class T>
Var<T> bce_loss(Var<T> p, const Tensor<T>& g, T eps = T(kBceClampEps));

/// 1 − Σ(G·P)/Σ(P+G−G·P) per batch item (rank-4 inputs) or over the whole
/// tensor (other ranks), averaged over the batch. An item whose union is
/// zero contributes zero loss.
template <class T>
Var<T> iou_loss(Var<T> p, const Tensor<T>& g);

}  // namespace acf::ad
