#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "motionforge/adam.hpp"
#include "motionforge/checkpoint.hpp"
#include "motionforge/model.hpp"
#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "testutil.hpp"

using namespace motionforge;
using mftest::random_variable;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.joints = 5;
  cfg.window_T = 25;
  cfg.classes = 4;
  cfg.enc_channels = {8, 12, 16};
  cfg.critic_channels = {8, 12, 16, 16};
  cfg.classifier_channels = {6, 8, 8};
  return cfg;
}

}  // namespace

TEST_CASE("self-attention with zero gate is the identity") {
  Rng rng(11);
  ParamSet ps;
  SelfAttentionLayer attn(16, rng, ps, "attn");
  Tensor x = random_variable({2, 16, 7}, rng);
  Tensor y = attn.forward(x);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    REQUIRE(std::fabs(y.values()[i] - x.values()[i]) < 1e-12);
}

TEST_CASE("attention weights form a distribution per output location") {
  Rng rng(12);
  ParamSet ps;
  SelfAttentionLayer attn(16, rng, ps, "attn");
  Tensor x = random_variable({16, 9}, rng, -2.0, 2.0);
  Tensor beta = attn.attention_map(x);
  REQUIRE(beta.shape() == Shape{9, 9});
  for (std::size_t j = 0; j < 9; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      const double b = beta.values()[i * 9 + j];
      REQUIRE(b >= 0.0);
      col += b;
    }
    REQUIRE(std::fabs(col - 1.0) < 1e-9);
  }
}

TEST_CASE("single-location attention reduces to Wv Wh x") {
  Rng rng(13);
  ParamSet ps;
  SelfAttentionLayer attn(2, rng, ps, "attn");
  REQUIRE(attn.reduced == 1);
  attn.gamma.mutable_values()[0] = 0.7;
  const double x0 = 0.4, x1 = -1.1;
  Tensor x = Tensor::variable({1, 2, 1}, {x0, x1});
  Tensor y = attn.forward(x);

  const double wh0 = attn.wh.values()[0], wh1 = attn.wh.values()[1];
  const double wv0 = attn.wv.values()[0], wv1 = attn.wv.values()[1];
  const double h = wh0 * x0 + wh1 * x1;  // beta = 1 for a single location
  REQUIRE(y.values()[0] == Catch::Approx(x0 + 0.7 * wv0 * h).margin(1e-12));
  REQUIRE(y.values()[1] == Catch::Approx(x1 + 0.7 * wv1 * h).margin(1e-12));
}

TEST_CASE("attention layer passes gradcheck") {
  Rng rng(14);
  ParamSet ps;
  SelfAttentionLayer attn(8, rng, ps, "attn");
  attn.gamma.mutable_values()[0] = 0.5;
  Tensor x = random_variable({1, 8, 5}, rng);
  std::vector<Tensor> params = ps.params();
  params.push_back(x);
  auto res = mftest::gradcheck(
      [&](const std::vector<Tensor>& p) {
        return sum_all(square(attn.forward(p.back())));
      },
      params);
  REQUIRE(res.ok(1e-4));
}

TEST_CASE("generator produces a deterministic finite future window") {
  const ModelConfig cfg = small_config();
  Generator gen(cfg, Rng(21));
  Rng rng(22);
  Tensor x = random_variable({3, cfg.seed_channels(), cfg.window_T}, rng);
  Tensor y = gen.forward(x);
  REQUIRE(y.shape() == Shape{3, cfg.pose_channels(), cfg.window_T});
  REQUIRE(all_finite(y));
  Tensor y2 = gen.forward(x);
  REQUIRE(y.values() == y2.values());
  REQUIRE(gen.forward_calls() == 2);
}

TEST_CASE("generator output is invariant under batch composition") {
  const ModelConfig cfg = small_config();
  Generator gen(cfg, Rng(23));
  Rng rng(24);
  Tensor batch = random_variable({3, cfg.seed_channels(), cfg.window_T}, rng);
  Tensor y_batch = gen.forward(batch);
  const std::size_t per = cfg.seed_channels() * cfg.window_T;
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> one(batch.values().begin() + b * per,
                            batch.values().begin() + (b + 1) * per);
    Tensor y1 = gen.forward(
        Tensor::constant({1, cfg.seed_channels(), cfg.window_T}, one));
    const std::size_t out_per = cfg.pose_channels() * cfg.window_T;
    for (std::size_t i = 0; i < out_per; ++i)
      REQUIRE(y1.values()[i] ==
              Catch::Approx(y_batch.values()[b * out_per + i]).margin(1e-12));
  }
}

TEST_CASE("generator rejects malformed seeds") {
  const ModelConfig cfg = small_config();
  Generator gen(cfg, Rng(25));
  REQUIRE_THROWS_AS(
      gen.forward(Tensor::constant({1, cfg.seed_channels(), 24},
                                   std::vector<double>(cfg.seed_channels() * 24, 0.0))),
      std::invalid_argument);
}

TEST_CASE("critic scores each sample once, deterministically") {
  const ModelConfig cfg = small_config();
  Critic critic(cfg, Rng(31));
  Rng rng(32);
  const std::size_t per = cfg.seed_channels() * 2 * cfg.window_T;
  Tensor batch = random_variable({4, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  // duplicate sample 0 into slot 3
  auto vals = batch.values();
  std::copy_n(vals.begin(), per, vals.begin() + 3 * per);
  Tensor x = Tensor::constant(batch.shape(), vals);
  Tensor scores = critic.forward(x);
  REQUIRE(scores.shape() == Shape{4, 1});
  REQUIRE(all_finite(scores));
  REQUIRE(scores.values()[0] == scores.values()[3]);
}

TEST_CASE("critic is sensitive to single-sample perturbations") {
  const ModelConfig cfg = small_config();
  Critic critic(cfg, Rng(33));
  Rng rng(34);
  Tensor x = random_variable({2, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  const std::vector<double> base = critic.forward(x).values();
  const std::size_t per = cfg.seed_channels() * 2 * cfg.window_T;
  for (int trial = 0; trial < 100; ++trial) {
    auto vals = x.values();
    const std::size_t b = rng.uniform_int(2);
    const std::size_t i = rng.uniform_int(per);
    vals[b * per + i] += rng.uniform(0.5, 1.5);
    const auto scores =
        critic.forward(Tensor::constant(x.shape(), std::move(vals))).values();
    REQUIRE(scores[b] != base[b]);
  }
}

TEST_CASE("classifier emits a probability vector per sample") {
  const ModelConfig cfg = small_config();
  Classifier cls(cfg, Rng(41));
  Rng rng(42);
  Tensor x = random_variable({3, cfg.pose_channels(), 25}, rng);
  Tensor p = cls.forward(x);
  REQUIRE(p.shape() == Shape{3, 4});
  for (std::size_t b = 0; b < 3; ++b) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      REQUIRE(p.values()[b * 4 + c] >= 0.0);
      sum += p.values()[b * 4 + c];
    }
    REQUIRE(std::fabs(sum - 1.0) < 1e-9);
  }
  REQUIRE(cls.forward(x).values() == p.values());

  // the same network accepts longer windows
  Tensor x100 = random_variable({2, cfg.pose_channels(), 100}, rng);
  REQUIRE(cls.forward(x100).shape() == Shape{2, 4});
}

TEST_CASE("classifier overfits an 8-window toy set to 100% accuracy") {
  ModelConfig cfg = small_config();
  Classifier cls(cfg, Rng(43));
  Rng rng(44);
  Tensor x = random_variable({8, cfg.pose_channels(), 25}, rng);
  std::vector<Action> labels = {Action::Knock, Action::Lift, Action::Throw,
                                Action::Walk,  Action::Knock, Action::Lift,
                                Action::Throw, Action::Walk};
  Tensor targets = one_hot_labels(labels, cfg.classes);

  AdamState opt(cls.params(), AdamConfig{.alpha = 0.01});
  auto accuracy = [&] {
    Tensor p = cls.forward(x);
    std::size_t correct = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < 4; ++c)
        if (p.values()[b * 4 + c] > p.values()[b * 4 + best]) best = c;
      if (best == static_cast<std::size_t>(labels[b])) ++correct;
    }
    return correct;
  };
  for (int step = 0; step < 400 && accuracy() < 8; ++step) {
    Tensor p = cls.forward(x);
    Tensor loss =
        neg(mean_all(sum_axis(mul(targets, log(clamp_min(p, 1e-12))), 1)));
    opt.step(cls.params(), gradients(loss, cls.params()));
  }
  REQUIRE(accuracy() == 8);
}

TEST_CASE("all networks apply layer normalization") {
  const ModelConfig cfg = small_config();
  Generator gen(cfg, Rng(51));
  Critic critic(cfg, Rng(52));
  Classifier cls(cfg, Rng(53));
  Rng rng(54);
  const auto count_during = [&](auto&& fn) {
    const std::size_t before = detail::layer_norm_calls();
    fn();
    return detail::layer_norm_calls() - before;
  };
  Tensor seed = random_variable({1, cfg.seed_channels(), cfg.window_T}, rng);
  Tensor pair = random_variable({1, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  Tensor win = random_variable({1, cfg.pose_channels(), cfg.window_T}, rng);
  REQUIRE(count_during([&] { gen.forward(seed); }) >= cfg.enc_channels.size());
  REQUIRE(count_during([&] { critic.forward(pair); }) >= cfg.critic_channels.size());
  REQUIRE(count_during([&] { cls.forward(win); }) >= cfg.classifier_channels.size());
}

TEST_CASE("checkpoint round-trips all parameters bit-exactly") {
  const ModelConfig cfg = small_config();
  Generator gen(cfg, Rng(61));
  Critic critic(cfg, Rng(62));
  Classifier cls(cfg, Rng(63));

  Checkpoint ck;
  put_model_config(ck, cfg);
  ck.meta["epoch"] = "7";
  put_params(ck, gen.param_set());
  put_params(ck, critic.param_set());
  put_params(ck, cls.param_set());

  const auto path = std::filesystem::temp_directory_path() / "mf_ckpt_test.bin";
  save_checkpoint(path.string(), ck);
  Checkpoint loaded = load_checkpoint(path.string());
  REQUIRE(loaded.meta.at("epoch") == "7");
  const ModelConfig cfg2 = get_model_config(loaded);
  REQUIRE(cfg2.enc_channels == cfg.enc_channels);
  REQUIRE(cfg2.joints == cfg.joints);

  // fresh networks with different init converge to the stored weights
  Generator gen2(cfg2, Rng(71));
  Critic critic2(cfg2, Rng(72));
  Classifier cls2(cfg2, Rng(73));
  restore_params(loaded, gen2.param_set());
  restore_params(loaded, critic2.param_set());
  restore_params(loaded, cls2.param_set());
  REQUIRE(gen2.param_set().checksum() == gen.param_set().checksum());

  Rng rng(74);
  Tensor seed = random_variable({2, cfg.seed_channels(), cfg.window_T}, rng);
  REQUIRE(gen2.forward(seed).values() == gen.forward(seed).values());
  Tensor pair = random_variable({2, cfg.seed_channels(), 2 * cfg.window_T}, rng);
  REQUIRE(critic2.forward(pair).values() == critic.forward(pair).values());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects corrupt files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "mf_ckpt_bad.bin").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "not a checkpoint";
  }
  REQUIRE_THROWS_WITH(load_checkpoint(path),
                      Catch::Matchers::ContainsSubstring("magic"));
  REQUIRE_THROWS_WITH(load_checkpoint((dir / "mf_ckpt_missing.bin").string()),
                      Catch::Matchers::ContainsSubstring("cannot open"));
  std::filesystem::remove(path);

  Checkpoint ck;
  ck.tensors.emplace_back("gen.head.w", Tensor::variable({2, 2}, {1, 2, 3, 4}));
  ParamSet ps;
  ps.add("gen.head.w", Tensor::variable({3, 3}, std::vector<double>(9, 0.0)));
  REQUIRE_THROWS_WITH(restore_params(ck, ps),
                      Catch::Matchers::ContainsSubstring("shape"));
  ParamSet ps2;
  ps2.add("gen.other", Tensor::variable({1}, {0.0}));
  REQUIRE_THROWS_WITH(restore_params(ck, ps2),
                      Catch::Matchers::ContainsSubstring("not found"));
}

TEST_CASE("window tensor conversion round-trips and appends controls") {
  Rng rng(81);
  std::vector<Pose> w1(4), w2(4);
  for (std::size_t t = 0; t < 4; ++t) {
    w1[t].joints.resize(3);
    w2[t].joints.resize(3);
    for (std::size_t j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        w1[t].joints[j][k] = rng.normal();
        w2[t].joints[j][k] = rng.normal();
      }
  }
  Tensor x = windows_to_tensor({&w1, &w2});
  REQUIRE(x.shape() == Shape{2, 9, 4});
  auto back = tensor_to_frames(x, 1);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        REQUIRE(back[t].joints[j][k] == w2[t].joints[j][k]);

  Tensor xc = append_control_channels(x, {Action::Lift, Action::Walk}, 4);
  REQUIRE(xc.shape() == Shape{2, 13, 4});
  for (std::size_t t = 0; t < 4; ++t) {
    REQUIRE(xc.values()[(0 * 13 + 9 + 1) * 4 + t] == 1.0);  // Lift channel, sample 0
    REQUIRE(xc.values()[(1 * 13 + 9 + 3) * 4 + t] == 1.0);  // Walk channel, sample 1
    REQUIRE(xc.values()[(0 * 13 + 9 + 0) * 4 + t] == 0.0);
  }
}
