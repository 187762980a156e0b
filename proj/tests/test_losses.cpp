#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "motionforge/losses.hpp"
#include "motionforge/model.hpp"
#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"
#include "testutil.hpp"

using namespace motionforge;
using mftest::random_variable;

namespace {

// two straight bones along +x, joints at 0, 1, 2
SkeletonSpec chain_skeleton() {
  SkeletonSpec s;
  s.joint_names = {"a", "b", "c"};
  s.bones = {{0, 1, 1.0}, {1, 2, 1.0}};
  s.root = 0;
  s.left_hip = 0;
  s.right_hip = 1;
  s.left_heel = 2;
  s.right_heel = 2;
  return s;
}

Pose chain_pose() {
  Pose p;
  p.joints = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
  return p;
}

Tensor frames_tensor(const std::vector<Pose>& frames) {
  return windows_to_tensor({&frames});
}

}  // namespace

TEST_CASE("gradient penalty vanishes for a unit-slope linear critic") {
  Rng rng(1);
  Tensor w = random_variable({6}, rng);
  double n2 = 0.0;
  for (double v : w.values()) n2 += v * v;
  for (auto& v : w.mutable_values()) v /= std::sqrt(n2);
  auto score = [&](const Tensor& x) {  // [B, 6] -> [B, 1]
    return matmul(x, reshape(w, {6, 1}));
  };
  Tensor real = random_variable({4, 6}, rng);
  Tensor fake = random_variable({4, 6}, rng);
  std::vector<double> norms;
  Tensor gp = gradient_penalty(score, real, fake, rng, &norms);
  REQUIRE(gp.item() == Catch::Approx(0.0).margin(1e-9));
  for (double n : norms) REQUIRE(n == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("gradient penalty is one for a constant critic") {
  Rng rng(2);
  auto score = [](const Tensor& x) {
    return Tensor::constant({x.shape()[0], 1},
                            std::vector<double>(x.shape()[0], 3.5));
  };
  Tensor real = random_variable({3, 5}, rng);
  Tensor fake = random_variable({3, 5}, rng);
  Tensor gp = gradient_penalty(score, real, fake, rng);
  REQUIRE(gp.item() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("penalty gradient norm matches finite differences on a 2-layer critic") {
  Rng rng(3);
  Tensor w1 = random_variable({8, 6}, rng);
  Tensor b1 = random_variable({8}, rng, -0.1, 0.1);
  Tensor w2 = random_variable({1, 8}, rng);
  Tensor b2 = random_variable({1}, rng, -0.1, 0.1);
  auto score = [&](const Tensor& x) {
    return dense(leaky_relu(dense(x, w1, b1)), w2, b2);
  };
  // real == fake makes the interpolate equal x regardless of epsilon
  Tensor x = random_variable({3, 6}, rng);
  std::vector<double> norms;
  gradient_penalty(score, x, x, rng, &norms);

  const double h = 1e-6;
  for (std::size_t b = 0; b < 3; ++b) {
    double fd2 = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      auto up = x.values(), down = x.values();
      up[b * 6 + i] += h;
      down[b * 6 + i] -= h;
      const double su = score(Tensor::constant(x.shape(), up)).values()[b];
      const double sd = score(Tensor::constant(x.shape(), down)).values()[b];
      const double g = (su - sd) / (2.0 * h);
      fd2 += g * g;
    }
    const double fd_norm = std::sqrt(fd2);
    REQUIRE(std::fabs(norms[b] - fd_norm) / std::max(fd_norm, 1e-6) < 1e-3);
  }
}

TEST_CASE("gradient penalty is symmetric under swapping batches with 1-eps") {
  Rng rng(4);
  Tensor w1 = random_variable({8, 6}, rng);
  Tensor b1 = random_variable({8}, rng);
  Tensor w2 = random_variable({1, 8}, rng);
  Tensor b2 = random_variable({1}, rng);
  auto score = [&](const Tensor& x) {
    return dense(tanh(dense(x, w1, b1)), w2, b2);
  };
  Tensor real = random_variable({4, 6}, rng);
  Tensor fake = random_variable({4, 6}, rng);
  std::vector<double> eps = {0.1, 0.4, 0.75, 0.98};
  std::vector<double> flipped = {0.9, 0.6, 0.25, 0.02};
  Tensor a = gradient_penalty_interpolated(score, real, fake, eps);
  Tensor b = gradient_penalty_interpolated(score, fake, real, flipped);
  REQUIRE(a.item() == Catch::Approx(b.item()).margin(1e-12));
}

TEST_CASE("gradient penalty is non-negative and differentiable in the weights") {
  Rng rng(5);
  Tensor w1 = random_variable({8, 6}, rng);
  Tensor b1 = random_variable({8}, rng);
  Tensor w2 = random_variable({1, 8}, rng);
  Tensor b2 = random_variable({1}, rng);
  Tensor real = random_variable({3, 6}, rng);
  Tensor fake = random_variable({3, 6}, rng);
  std::vector<double> eps = {0.2, 0.5, 0.8};
  auto res = mftest::gradcheck(
      [&](const std::vector<Tensor>& p) {
        auto score = [&](const Tensor& x) {
          return dense(tanh(dense(x, p[0], p[1])), p[2], p[3]);
        };
        return gradient_penalty_interpolated(score, real, fake, eps);
      },
      {w1, b1, w2, b2});
  REQUIRE(res.ok(1e-3));
  auto score = [&](const Tensor& x) {
    return dense(tanh(dense(x, w1, b1)), w2, b2);
  };
  REQUIRE(gradient_penalty(score, real, fake, rng).item() >= 0.0);
}

TEST_CASE("critic loss follows the minimization convention") {
  Tensor same = Tensor::constant({4, 1}, {0.3, -0.2, 1.1, 0.0});
  Tensor zero_gp = Tensor::scalar(0.0);
  REQUIRE(critic_loss(same, same, zero_gp).item() == Catch::Approx(0.0).margin(1e-12));

  // default penalty coefficient is 10
  Tensor unit_gp = Tensor::scalar(1.0);
  REQUIRE(critic_loss(same, same, unit_gp).item() == Catch::Approx(10.0).margin(1e-12));

  // raising every fake score by delta raises the loss by delta
  const double delta = 0.37;
  std::vector<double> shifted = same.values();
  for (auto& v : shifted) v += delta;
  Tensor fake = Tensor::constant({4, 1}, shifted);
  REQUIRE(critic_loss(same, fake, zero_gp).item() ==
          Catch::Approx(delta).margin(1e-12));
}

TEST_CASE("skeleton loss is zero for repeated or translated reference poses") {
  const SkeletonSpec skel = chain_skeleton();
  const Pose ref = chain_pose();
  std::vector<Pose> frames(5, ref);
  REQUIRE(skeleton_loss(ref, frames_tensor(frames), skel).item() < 1e-9);

  for (std::size_t t = 0; t < frames.size(); ++t)
    for (auto& j : frames[t].joints) {
      j[0] += 0.3 * static_cast<double>(t);
      j[1] -= 1.7;
      j[2] += 0.01 * static_cast<double>(t * t);
    }
  REQUIRE(skeleton_loss(ref, frames_tensor(frames), skel).item() < 1e-9);
}

TEST_CASE("skeleton loss matches uniform-offset algebra") {
  const SkeletonSpec skel = chain_skeleton();
  const Pose ref = chain_pose();
  const double d = 0.25;
  // every bone vector offset by (0, d, 0)
  Pose shifted;
  shifted.joints = {{0.0, 0.0, 0.0}, {1.0, d, 0.0}, {2.0, 2.0 * d, 0.0}};
  const std::size_t F = 7;
  std::vector<Pose> frames(F, shifted);
  // loss = |S| * F * d / T with T = F frames
  REQUIRE(skeleton_loss(ref, frames_tensor(frames), skel).item() ==
          Catch::Approx(2.0 * d).margin(1e-9));
}

TEST_CASE("blend loss is the per-coordinate mean squared gap") {
  const std::size_t C = 9;  // 3 joints
  Tensor a = Tensor::constant({1, C}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  REQUIRE(blend_loss(a, a).item() == 0.0);

  std::vector<double> v = a.values();
  v[4] += 1.0;
  Tensor b = Tensor::constant({1, C}, v);
  REQUIRE(blend_loss(a, b).item() == Catch::Approx(1.0 / 9.0).margin(1e-12));

  v = a.values();
  v[4] += 2.0;
  Tensor c = Tensor::constant({1, C}, v);
  REQUIRE(blend_loss(a, c).item() == Catch::Approx(4.0 / 9.0).margin(1e-12));
}

TEST_CASE("classification loss reproduces cross-entropy landmarks") {
  Tensor perfect = Tensor::constant({2, 4}, {1, 0, 0, 0, 0, 0, 1, 0});
  REQUIRE(classification_loss(perfect, perfect).item() ==
          Catch::Approx(0.0).margin(1e-12));

  Tensor uniform = Tensor::constant({1, 4}, {0.25, 0.25, 0.25, 0.25});
  Tensor target = Tensor::constant({1, 4}, {0, 1, 0, 0});
  REQUIRE(classification_loss(uniform, target).item() ==
          Catch::Approx(std::log(4.0)).margin(1e-9));

  // batch loss is the mean of per-sample losses
  Rng rng(6);
  Tensor p = softmax(random_variable({3, 4}, rng), 1);
  Tensor t = Tensor::constant({3, 4}, {1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0});
  double acc = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor pb = Tensor::constant({1, 4}, {p.values()[b * 4], p.values()[b * 4 + 1],
                                          p.values()[b * 4 + 2], p.values()[b * 4 + 3]});
    Tensor tb = Tensor::constant({1, 4}, {t.values()[b * 4], t.values()[b * 4 + 1],
                                          t.values()[b * 4 + 2], t.values()[b * 4 + 3]});
    acc += classification_loss(pb, tb).item();
  }
  REQUIRE(classification_loss(p, t).item() == Catch::Approx(acc / 3.0).margin(1e-12));
  REQUIRE(classification_loss(p, t).item() >= 0.0);
}

TEST_CASE("generator loss combines components with unit weights") {
  Tensor zero_scores = Tensor::constant({3, 1}, {0.0, 0.0, 0.0});
  Tensor z = Tensor::scalar(0.0);
  LossBreakdown all_zero = generator_loss(zero_scores, z, z, z);
  REQUIRE(all_zero.total.item() == Catch::Approx(0.0).margin(1e-12));

  Tensor scores = Tensor::constant({3, 1}, {0.5, -0.1, 0.2});
  Tensor skel = Tensor::scalar(0.7);
  Tensor blend = Tensor::scalar(0.05);
  Tensor cls = Tensor::scalar(1.3);
  LossBreakdown lb = generator_loss(scores, skel, blend, cls);
  REQUIRE(lb.total.item() == Catch::Approx(lb.component_sum()).margin(1e-12));
  REQUIRE(lb.skel == 0.7);
  REQUIRE(lb.blend == 0.05);
  REQUIRE(lb.classification == 1.3);

  const double delta = 0.41;
  std::vector<double> shifted = scores.values();
  for (auto& v : shifted) v += delta;
  LossBreakdown lb2 =
      generator_loss(Tensor::constant({3, 1}, shifted), skel, blend, cls);
  REQUIRE(lb2.total.item() == Catch::Approx(lb.total.item() - delta).margin(1e-12));
}

TEST_CASE("losses reject mismatched shapes") {
  Tensor a = Tensor::constant({1, 4}, {1, 0, 0, 0});
  Tensor b = Tensor::constant({1, 3}, {1, 0, 0});
  REQUIRE_THROWS_AS(classification_loss(a, b), std::invalid_argument);
  REQUIRE_THROWS_AS(blend_loss(a, b), std::invalid_argument);
  Rng rng(7);
  auto score = [](const Tensor& x) {
    return Tensor::constant({x.shape()[0], 1}, std::vector<double>(x.shape()[0], 0.0));
  };
  Tensor r = random_variable({2, 5}, rng);
  Tensor f = random_variable({3, 5}, rng);
  REQUIRE_THROWS_AS(gradient_penalty(score, r, f, rng), std::invalid_argument);
}

TEST_CASE("gradient penalty works end to end on the real critic") {
  ModelConfig cfg;
  cfg.joints = 4;
  cfg.window_T = 25;
  cfg.classes = 4;
  cfg.enc_channels = {6, 8, 10};
  cfg.critic_channels = {6, 8, 10, 10};
  cfg.classifier_channels = {4, 6, 6};
  Critic critic(cfg, Rng(8));
  Rng rng(9);
  Tensor real = random_variable({2, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  Tensor fake = random_variable({2, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  std::vector<double> norms;
  Tensor gp = gradient_penalty(critic, real, fake, rng, &norms);
  REQUIRE(gp.item() >= 0.0);
  REQUIRE(std::isfinite(gp.item()));
  REQUIRE(norms.size() == 2);
  Tensor loss = critic_loss(critic.forward(real), critic.forward(fake), gp);
  auto grads = gradients(loss, critic.params());
  for (const auto& g : grads) REQUIRE(all_finite(g));
}
