#pragma once

#include <stdexcept>
#include <vector>

#include "motionforge/model.hpp"
#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"
#include "motionforge/tensor.hpp"

namespace motionforge {

struct LossBreakdown {
  double critic = 0.0;
  double gp = 0.0;
  double gen_wasserstein = 0.0;
  double skel = 0.0;
  double blend = 0.0;
  double classification = 0.0;
  Tensor total;

  double component_sum() const {
    return gen_wasserstein + skel + blend + classification;
  }
};

// Mean over the batch of (|grad_mhat D(mhat)|_2 - 1)^2 with mhat = eps r +
// (1 - eps) f, fresh eps ~ U[0,1] per sample. The interpolate is a leaf so the
// tape yields its gradient; that gradient is itself differentiable, which the
// critic update relies on. Per-sample gradient norms are reported via `norms`.
template <typename ScoreFn>
Tensor gradient_penalty_interpolated(const ScoreFn& score, const Tensor& real,
                                     const Tensor& fake,
                                     const std::vector<double>& eps,
                                     std::vector<double>* norms = nullptr) {
  if (real.shape() != fake.shape())
    throw std::invalid_argument("gradient_penalty: real batch " +
                                shape_str(real.shape()) + " vs fake batch " +
                                shape_str(fake.shape()));
  const std::size_t B = real.shape()[0];
  if (eps.size() != B)
    throw std::invalid_argument("gradient_penalty: need one epsilon per sample");
  const std::size_t per = real.size() / B;
  std::vector<double> mix(real.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < per; ++i)
      mix[b * per + i] = eps[b] * real.values()[b * per + i] +
                         (1.0 - eps[b]) * fake.values()[b * per + i];
  Tensor mhat = Tensor::variable(real.shape(), std::move(mix));
  Tensor d = score(mhat);
  Tensor g = gradients(sum_all(d), {mhat})[0];
  Tensor per_sample = reshape(g, {B, per});
  Tensor norm = sqrt(clamp_min(sum_axis(square(per_sample), 1), 1e-24));  // [B,1]
  if (norms) *norms = norm.values();
  return mean_all(square(sub(norm, expand_scalar(Tensor::scalar(1.0), {B, 1}))));
}

template <typename ScoreFn>
Tensor gradient_penalty(const ScoreFn& score, const Tensor& real,
                        const Tensor& fake, Rng& rng,
                        std::vector<double>* norms = nullptr) {
  std::vector<double> eps(real.shape().empty() ? 0 : real.shape()[0]);
  for (auto& e : eps) e = rng.uniform();
  return gradient_penalty_interpolated(score, real, fake, eps, norms);
}

inline Tensor gradient_penalty(const Critic& critic, const Tensor& real,
                               const Tensor& fake, Rng& rng,
                               std::vector<double>* norms = nullptr) {
  return gradient_penalty([&](const Tensor& x) { return critic.forward(x); },
                          real, fake, rng, norms);
}

// mean D(fake) - mean D(real) + lambda * gp (minimization form)
inline Tensor critic_loss(const Tensor& scores_real, const Tensor& scores_fake,
                          const Tensor& gp, double lambda_gp = 10.0) {
  if (scores_real.size() != scores_fake.size())
    throw std::invalid_argument("critic_loss: score batches differ in length");
  return add(sub(mean_all(scores_fake), mean_all(scores_real)),
             scale(gp, lambda_gp));
}

// (1/T) sum over bones and frames of the Euclidean distance between each
// generated bone vector and the reference pose's bone vector, averaged over
// the batch. reference holds one pose per sample.
inline Tensor skeleton_loss(const std::vector<Pose>& reference,
                            const Tensor& future,
                            const SkeletonSpec& skeleton) {
  if (future.shape().size() != 3)
    throw std::invalid_argument("skeleton_loss: future must be [batch, 3J, T]");
  const std::size_t B = future.shape()[0], T = future.shape()[2];
  if (reference.size() != B)
    throw std::invalid_argument("skeleton_loss: need one reference pose per sample");
  Tensor acc = Tensor::scalar(0.0);
  for (const Bone& bone : skeleton.bones) {
    Tensor vj = slice_axis(future, 1, bone.j * 3, 3);
    Tensor vi = slice_axis(future, 1, bone.i * 3, 3);
    Tensor z = sub(vj, vi);  // [B, 3, T]
    std::vector<double> ref(B * 3);
    for (std::size_t b = 0; b < B; ++b) {
      const auto v = reference[b].bone_vector(bone);
      for (int k = 0; k < 3; ++k) ref[b * 3 + k] = v[k];
    }
    Tensor x0 = broadcast_axis(Tensor::constant({B, 3, 1}, std::move(ref)), 2, T);
    Tensor dist = sqrt(clamp_min(sum_axis(square(sub(x0, z)), 1), 1e-24));
    acc = add(acc, sum_all(dist));
  }
  return scale(acc, 1.0 / (static_cast<double>(T) * static_cast<double>(B)));
}

inline Tensor skeleton_loss(const Pose& reference, const Tensor& future,
                            const SkeletonSpec& skeleton) {
  return skeleton_loss(std::vector<Pose>(future.shape()[0], reference), future,
                       skeleton);
}

// mean over all coordinates of the squared gap between the last prior frame
// and the first generated frame
inline Tensor blend_loss(const Tensor& prior_last, const Tensor& future_first) {
  if (prior_last.shape() != future_first.shape())
    throw std::invalid_argument("blend_loss: frame shapes differ, " +
                                shape_str(prior_last.shape()) + " vs " +
                                shape_str(future_first.shape()));
  return mean_all(square(sub(future_first, prior_last)));
}

// cross-entropy with a probability floor; predicted rows are distributions,
// targets one-hot
inline Tensor classification_loss(const Tensor& predicted, const Tensor& target) {
  if (predicted.shape() != target.shape())
    throw std::invalid_argument("classification_loss: prediction batch " +
                                shape_str(predicted.shape()) + " vs targets " +
                                shape_str(target.shape()));
  const double m = static_cast<double>(predicted.shape()[0]);
  return scale(sum_all(mul(target, log(clamp_min(predicted, 1e-12)))), -1.0 / m);
}

// -mean D(fake) + skel + blend + class, unit weights
inline LossBreakdown generator_loss(const Tensor& scores_fake, const Tensor& skel,
                                    const Tensor& blend, const Tensor& class_loss) {
  LossBreakdown out;
  Tensor w = neg(mean_all(scores_fake));
  out.gen_wasserstein = w.item();
  out.skel = skel.item();
  out.blend = blend.item();
  out.classification = class_loss.item();
  out.total = add(add(add(w, skel), blend), class_loss);
  return out;
}

}  // namespace motionforge
