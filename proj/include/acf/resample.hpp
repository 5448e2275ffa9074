#pragma once

#include <vector>

namespace acf {

/// Source taps for one output coordinate of a half-pixel (align_corners =
/// false) bilinear resize: value = (1-frac)·src[lo] + frac·src[hi].
struct BilinearTap {
  int lo;
  int hi;
  double frac;
};

/// Taps mapping `in_size` samples onto `out_size` samples. Source
/// coordinates below zero are clamped to the first sample.
std::vector<BilinearTap> bilinear_taps(int in_size, int out_size);

/// Resizes one row-major plane. Used by the upsampling op and by the
/// evaluator when predictions are brought to ground-truth size.
template <class T>
void bilinear_resize_plane(const T* src, int in_h, int in_w, T* dst, int out_h, int out_w);

/// Adjoint of bilinear_resize_plane: accumulates `grad_out` into `grad_in`.
template <class T>
void bilinear_resize_plane_adjoint(const T* grad_out, int out_h, int out_w, T* grad_in, int in_h,
                                   int in_w);

}  // namespace acf
