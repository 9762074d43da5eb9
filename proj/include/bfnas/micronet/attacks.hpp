#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "bfnas/micronet/net.hpp"
#include "bfnas/micronet/tensor.hpp"
#include "bfnas/rng.hpp"

namespace bfnas::micronet {

enum class AttackKind { kFgsm, kPgd };

struct AttackSpec {
  AttackKind kind = AttackKind::kPgd;
  double epsilon = 8.0 / 255.0;
  double step_size = 2.0 / 255.0;
  int steps = 7;
  bool random_start = true;
  double clip_lo = 0.0;
  double clip_hi = 1.0;

  static AttackSpec fgsm(double eps = 8.0 / 255.0) {
    return {AttackKind::kFgsm, eps, eps, 1, false, 0.0, 1.0};
  }
  static AttackSpec pgd(int steps = 7, double eps = 8.0 / 255.0, double step = 2.0 / 255.0) {
    return {AttackKind::kPgd, eps, step, steps, true, 0.0, 1.0};
  }

  void validate() const {
    if (epsilon < 0.0 || step_size < 0.0 || steps < 1)
      throw std::invalid_argument("attack spec: need epsilon >= 0, step >= 0, steps >= 1");
  }
};

namespace detail {
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace detail

// Single-step sign attack: X* = clip(X + eps * sign(dJ/dX)). loss_grad_fn
// takes a batch and returns the input gradient as a Tensor.
template <typename LossGradFn>
Tensor fgsm_attack(LossGradFn&& loss_grad_fn, const Tensor& x, const AttackSpec& spec) {
  spec.validate();
  Tensor grad = loss_grad_fn(x);
  Tensor adv = x;
  for (std::size_t i = 0; i < adv.v.size(); ++i)
    adv.v[i] = std::clamp(adv.v[i] + spec.epsilon * detail::sign0(grad.v[i]), spec.clip_lo,
                          spec.clip_hi);
  return adv;
}

// Multi-step attack with uniform random start inside the eps-ball. Every
// iterate is projected back into the ball and the valid box.
template <typename LossGradFn>
Tensor pgd_attack(LossGradFn&& loss_grad_fn, const Tensor& x, const AttackSpec& spec,
                  RngStream& rng) {
  spec.validate();
  Tensor adv = x;
  if (spec.random_start)
    for (std::size_t i = 0; i < adv.v.size(); ++i)
      adv.v[i] = std::clamp(adv.v[i] + rng.uniform(-spec.epsilon, spec.epsilon), spec.clip_lo,
                            spec.clip_hi);
  for (int step = 0; step < spec.steps; ++step) {
    Tensor grad = loss_grad_fn(adv);
    for (std::size_t i = 0; i < adv.v.size(); ++i) {
      double v = adv.v[i] + spec.step_size * detail::sign0(grad.v[i]);
      v = std::clamp(v, x.v[i] - spec.epsilon, x.v[i] + spec.epsilon);
      adv.v[i] = std::clamp(v, spec.clip_lo, spec.clip_hi);
    }
  }
  return adv;
}

// Attack a labeled batch through a subnet view.
inline Tensor attack_batch(const SubnetView& view, const Tensor& x, std::span<const int> labels,
                           const AttackSpec& spec, RngStream& rng) {
  auto grad_fn = [&](const Tensor& xx) {
    return loss_and_grad(view, xx, labels, nullptr).input_grad;
  };
  if (spec.kind == AttackKind::kFgsm) return fgsm_attack(grad_fn, x, spec);
  return pgd_attack(grad_fn, x, spec, rng);
}

}  // namespace bfnas::micronet
