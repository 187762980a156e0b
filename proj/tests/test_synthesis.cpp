#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "motionforge/preprocess.hpp"
#include "motionforge/procedural.hpp"
#include "motionforge/svg.hpp"
#include "motionforge/synthesis.hpp"
#include "testutil.hpp"

using namespace motionforge;

namespace {

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.joints = 4;
  cfg.window_T = 25;
  cfg.classes = 4;
  cfg.enc_channels = {6, 8, 10};
  cfg.critic_channels = {6, 8, 10, 10};
  cfg.classifier_channels = {4, 6, 6};
  return cfg;
}

std::vector<Pose> random_seed(std::size_t T, std::size_t J, std::uint64_t s) {
  Rng rng(s);
  std::vector<Pose> frames(T);
  for (auto& f : frames) {
    f.joints.resize(J);
    for (auto& j : f.joints)
      for (int k = 0; k < 3; ++k) j[k] = 0.5 * rng.normal();
  }
  return frames;
}

}  // namespace

TEST_CASE("rollout frame counts follow the config arithmetic") {
  Generator gen(tiny_model(), Rng(5));
  const auto seed = random_seed(25, 4, 1);

  RolloutConfig rc;
  rc.iterations = 4;
  REQUIRE(rollout(gen, seed, Action::Walk, rc).clip.frames.size() == 125);
  rc.drop_seed = true;
  REQUIRE(rollout(gen, seed, Action::Walk, rc).clip.frames.size() == 100);

  rc.drop_seed = false;
  rc.iterations = 0;
  RolloutResult echo = rollout(gen, seed, Action::Walk, rc);
  REQUIRE(echo.clip.frames.size() == 25);
  for (std::size_t t = 0; t < 25; ++t)
    for (std::size_t j = 0; j < 4; ++j)
      for (int k = 0; k < 3; ++k)
        REQUIRE(echo.clip.frames[t].joints[j][k] == seed[t].joints[j][k]);
  REQUIRE(echo.seam_blend.empty());
}

TEST_CASE("long rollouts from random parameters stay finite") {
  Generator gen(tiny_model(), Rng(6));
  const auto seed = random_seed(25, 4, 2);
  RolloutConfig rc;
  rc.iterations = 40;
  RolloutResult res = rollout(gen, seed, Action::Throw, rc);
  REQUIRE_FALSE(res.truncated);
  REQUIRE(res.clip.frames.size() == 25 * 41);
  for (const auto& f : res.clip.frames)
    for (const auto& j : f.joints)
      for (int k = 0; k < 3; ++k) REQUIRE(std::isfinite(j[k]));
  REQUIRE(res.seam_blend.size() == 40);
  for (double s : res.seam_blend) REQUIRE(std::isfinite(s));
}

TEST_CASE("rollout is deterministic and validates the seed") {
  Generator gen(tiny_model(), Rng(7));
  const auto seed = random_seed(25, 4, 3);
  RolloutConfig rc;
  rc.iterations = 3;
  const auto a = rollout(gen, seed, Action::Lift, rc);
  const auto b = rollout(gen, seed, Action::Lift, rc);
  REQUIRE(a.clip.frames.size() == b.clip.frames.size());
  for (std::size_t t = 0; t < a.clip.frames.size(); ++t)
    for (std::size_t j = 0; j < 4; ++j)
      for (int k = 0; k < 3; ++k)
        REQUIRE(a.clip.frames[t].joints[j][k] == b.clip.frames[t].joints[j][k]);

  REQUIRE_THROWS_AS(rollout(gen, random_seed(24, 4, 4), Action::Walk, rc),
                    std::invalid_argument);
}

TEST_CASE("non-finite generator output truncates the rollout") {
  Generator gen(tiny_model(), Rng(8));
  Tensor* w = gen.param_set().find("gen.head.w");
  REQUIRE(w != nullptr);
  w->mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  const auto seed = random_seed(25, 4, 5);
  RolloutConfig rc;
  rc.iterations = 4;
  RolloutResult res = rollout(gen, seed, Action::Walk, rc);
  REQUIRE(res.truncated);
  REQUIRE(res.error.find("iteration 1") != std::string::npos);
  REQUIRE(res.clip.frames.size() == 25);  // seed retained, nothing appended
}

TEST_CASE("denormalize inverts normalization") {
  const SkeletonSpec skel = default_skeleton();
  Rng style_rng(9);
  const auto style = draw_subject_style(style_rng);
  MotionClip clip = synth_procedural(Action::Walk, style, 10, skel, 200);
  NormalizationStats st = compute_stats({clip});
  MotionClip norm = normalize_clip(clip, st);
  MotionClip back = denormalize_motion(norm, st);
  for (std::size_t t = 0; t < clip.frames.size(); ++t)
    for (std::size_t j = 0; j < clip.joint_count(); ++j)
      for (int k = 0; k < 3; ++k)
        REQUIRE(std::fabs(back.frames[t].joints[j][k] -
                          clip.frames[t].joints[j][k]) < 1e-9);

  // zero-valued normalized channel maps back to the channel mean
  MotionClip zeros = norm;
  for (auto& f : zeros.frames)
    for (auto& j : f.joints) j = {0.0, 0.0, 0.0};
  MotionClip means = denormalize_motion(zeros, st);
  for (std::size_t j = 0; j < means.joint_count(); ++j)
    for (int k = 0; k < 3; ++k)
      REQUIRE(means.frames[0].joints[j][k] ==
              Catch::Approx(st.mean[j * 3 + k]).margin(1e-12));
}

TEST_CASE("std-floored constant channels survive the round trip") {
  MotionClip clip;
  clip.fps = 30;
  clip.frames.resize(10);
  for (auto& f : clip.frames) f.joints = {{1.5, 2.5, -3.0}};
  NormalizationStats st = compute_stats({clip});
  MotionClip back = denormalize_motion(normalize_clip(clip, st), st);
  for (const auto& f : back.frames) {
    REQUIRE(f.joints[0][0] == Catch::Approx(1.5).margin(1e-9));
    REQUIRE(f.joints[0][1] == Catch::Approx(2.5).margin(1e-9));
    REQUIRE(f.joints[0][2] == Catch::Approx(-3.0).margin(1e-9));
  }
}

TEST_CASE("bone length deviation is zero on exact skeletons") {
  const SkeletonSpec skel = default_skeleton();
  Rng style_rng(11);
  const auto style = draw_subject_style(style_rng);
  const SkeletonSpec scaled = scale_skeleton(skel, style.scale);
  MotionClip clip = synth_procedural(Action::Lift, style, 12, skel, 100);
  REQUIRE(bone_length_deviation(clip, scaled) < 1e-9);

  // stretching every frame doubles bone lengths: deviation 1.0
  MotionClip stretched = clip;
  for (auto& f : stretched.frames)
    for (auto& j : f.joints)
      for (int k = 0; k < 3; ++k) j[k] *= 2.0;
  REQUIRE(bone_length_deviation(stretched, scaled) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("svg outputs are written and well formed") {
  const SkeletonSpec skel = default_skeleton();
  Rng style_rng(13);
  MotionClip clip = synth_procedural(Action::Walk, draw_subject_style(style_rng),
                                     14, skel, 60);
  const auto dir = std::filesystem::temp_directory_path();
  const auto strip = (dir / "mf_strip.svg").string();
  write_pose_strip_svg(strip, clip, skel, 10);
  std::ifstream is(strip);
  std::string content((std::istreambuf_iterator<char>(is)),
                      std::istreambuf_iterator<char>());
  REQUIRE(content.find("<svg") == 0);
  REQUIRE(content.find("<line") != std::string::npos);
  std::filesystem::remove(strip);

  const auto plot = (dir / "mf_plot.svg").string();
  write_line_plot_svg(plot, {{"a", {0.0, 1.0, 0.5}}, {"b", {1.0, 0.2, 0.4}}},
                      "curves");
  std::ifstream ip(plot);
  std::string pc((std::istreambuf_iterator<char>(ip)),
                 std::istreambuf_iterator<char>());
  REQUIRE(pc.find("polyline") != std::string::npos);
  REQUIRE(pc.find("curves") != std::string::npos);
  std::filesystem::remove(plot);
}
