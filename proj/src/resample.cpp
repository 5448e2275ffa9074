#include "acf/resample.hpp"

#include <algorithm>
#include <cmath>

namespace acf {

std::vector<BilinearTap> bilinear_taps(int in_size, int out_size) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in_size - 1) lo = in_size - 1;
    const int hi = std::min(lo + 1, in_size - 1);
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - lo};
  }
  return taps;
}

template <class T>
void bilinear_resize_plane(const T* src, int in_h, int in_w, T* dst, int out_h, int out_w) {
  const auto ty = bilinear_taps(in_h, out_h);
  const auto tx = bilinear_taps(in_w, out_w);
  for (int y = 0; y < out_h; ++y) {
    const BilinearTap& vy = ty[static_cast<std::size_t>(y)];
    const T wy1 = static_cast<T>(vy.frac);
    const T wy0 = T(1) - wy1;
    const T* r0 = src + static_cast<std::size_t>(vy.lo) * in_w;
    const T* r1 = src + static_cast<std::size_t>(vy.hi) * in_w;
    T* out = dst + static_cast<std::size_t>(y) * out_w;
    for (int x = 0; x < out_w; ++x) {
      const BilinearTap& vx = tx[static_cast<std::size_t>(x)];
      const T wx1 = static_cast<T>(vx.frac);
      const T wx0 = T(1) - wx1;
      out[x] = wy0 * (wx0 * r0[vx.lo] + wx1 * r0[vx.hi]) + wy1 * (wx0 * r1[vx.lo] + wx1 * r1[vx.hi]);
    }
  }
}

template <class T>
void bilinear_resize_plane_adjoint(const T* grad_out, int out_h, int out_w, T* grad_in, int in_h,
                                   int in_w) {
  const auto ty = bilinear_taps(in_h, out_h);
  const auto tx = bilinear_taps(in_w, out_w);
  for (int y = 0; y < out_h; ++y) {
    const BilinearTap& vy = ty[static_cast<std::size_t>(y)];
    const T wy1 = static_cast<T>(vy.frac);
    const T wy0 = T(1) - wy1;
    T* r0 = grad_in + static_cast<std::size_t>(vy.lo) * in_w;
    T* r1 = grad_in + static_cast<std::size_t>(vy.hi) * in_w;
    const T* g = grad_out + static_cast<std::size_t>(y) * out_w;
    for (int x = 0; x < out_w; ++x) {
      const BilinearTap& vx = tx[static_cast<std::size_t>(x)];
      const T wx1 = static_cast<T>(vx.frac);
      const T wx0 = T(1) - wx1;
      r0[vx.lo] += g[x] * wy0 * wx0;
      r0[vx.hi] += g[x] * wy0 * wx1;
      r1[vx.lo] += g[x] * wy1 * wx0;
      r1[vx.hi] += g[x] * wy1 * wx1;
    }
  }
}

template void bilinear_resize_plane<float>(const float*, int, int, float*, int, int);
template void bilinear_resize_plane<double>(const double*, int, int, double*, int, int);
template void bilinear_resize_plane_adjoint<float>(const float*, int, int, float*, int, int);
template void bilinear_resize_plane_adjoint<double>(const double*, int, int, double*, int, int);

}  // namespace acf
