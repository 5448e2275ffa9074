#pragma once

#include "acf/nn/acg_fusion.hpp"

namespace acf::nn {

/// BCE and IoU terms for the three supervised saliency maps.
struct LossBreakdown {
  double bce_r = 0, iou_r = 0;
  double bce_d = 0, iou_d = 0;
  double bce_f = 0, iou_f = 0;
  double total = 0;
};

template <class T>
struct SupervisedLoss {
  Var<T> total;
  LossBreakdown breakdown;
};

/// L = Σ over {sal_r, sal_d, sal_f} of (BCE + IoU), every map supervised by
/// the same ground truth with equal weight.
template <class T>
SupervisedLoss<T> total_loss(const ResinResOutput<T>& outputs, const Tensor<T>& gt);

/// Value-only helpers on plain maps.
template <class T>
double bce_value(const Tensor<T>& p, const Tensor<T>& g);
template <class T>
double iou_value(const Tensor<T>& p, const Tensor<T>& g);

}  // namespace acf::nn
