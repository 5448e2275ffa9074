#include "acf/nn/supervision.hpp"

namespace acf::nn {

template <class T>
SupervisedLoss<T> total_loss(const ResinResOutput<T>& outputs, const Tensor<T>& gt) {
  SupervisedLoss<T> out;
  LossBreakdown& lb = out.breakdown;
  auto term = [&](Var<T> sal, double& bce, double& iou) {
    Var<T> b = ad::bce_loss(sal, gt);
    Var<T> i = ad::iou_loss(sal, gt);
    bce = b.value()[0];
    iou = i.value()[0];
    return ad::add(b, i);
  };
  Var<T> lr = term(outputs.sal_r, lb.bce_r, lb.iou_r);
  Var<T> ld = term(outputs.sal_d, lb.bce_d, lb.iou_d);
  Var<T> lf = term(outputs.sal_f, lb.bce_f, lb.iou_f);
  out.total = ad::add(ad::add(lr, ld), lf);
  lb.total = lb.bce_r + lb.iou_r + lb.bce_d + lb.iou_d + lb.bce_f + lb.iou_f;
  return out;
}

template <class T>
double bce_value(const Tensor<T>& p, const Tensor<T>& g) {
  ad::Tape<T> tape;
  tape.set_recording(false);
  return ad::bce_loss(tape.constant(p), g).value()[0];
}

template <class T>
double iou_value(const Tensor<T>& p, const Tensor<T>& g) {
  ad::Tape<T> tape;
  tape.set_recording(false);
  return ad::iou_loss(tape.constant(p), g).value()[0];
}

template SupervisedLoss<float> total_loss<float>(const ResinResOutput<float>&, const Tensor<float>&);
template SupervisedLoss<double> total_loss<double>(const ResinResOutput<double>&, const Tensor<double>&);
template double bce_value<float>(const Tensor<float>&, const Tensor<float>&);
template double bce_value<double>(const Tensor<double>&, const Tensor<double>&);
template double iou_value<float>(const Tensor<float>&, const Tensor<float>&);
template double iou_value<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace acf::nn
