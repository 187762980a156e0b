#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "motionforge/motion_io.hpp"
#include "motionforge/preprocess.hpp"
#include "motionforge/procedural.hpp"

using namespace motionforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mf_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

MotionClip flat_clip(std::size_t frames, std::size_t joints) {
  MotionClip c;
  c.fps = 30;
  c.subject = "S0";
  c.action = Action::Walk;
  for (std::size_t t = 0; t < frames; ++t) {
    Pose p;
    p.joints.assign(joints, {0.0, 1.0, 0.0});
    c.frames.push_back(p);
  }
  return c;
}

double max_bone_dev(const MotionClip& clip, const SkeletonSpec& sk) {
  double dev = 0.0;
  for (const auto& f : clip.frames)
    for (const auto& b : sk.bones)
      dev = std::max(dev, std::fabs(bone_length(f, b) - b.length));
  return dev;
}

}  // namespace

TEST_CASE("motion CSV round trips through save/load") {
  TempDir dir;
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = synth_procedural(Action::Knock, {}, 7, sk, 125);
  clip.subject = "S3";
  save_clip(clip, (dir.path / "a.csv").string());
  auto clips = load_clips(dir.path.string(), sk);
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].subject == "S3");
  CHECK(clips[0].action == Action::Knock);
  CHECK(clips[0].frames.size() == 125);
  for (std::size_t t = 0; t < 125; ++t)
    for (std::size_t j = 0; j < sk.joint_count(); ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(clips[0].frames[t].joints[j][k] == clip.frames[t].joints[j][k]);
}

TEST_CASE("malformed row is rejected with its line number") {
  TempDir dir;
  SkeletonSpec sk = default_skeleton();
  std::ofstream out(dir.path / "bad.csv");
  out << "# subject=S0 action=walk fps=30 joints=" << sk.joint_count() << "\n";
  for (std::size_t i = 0; i < sk.joint_count() * 3; ++i) out << (i ? ",0" : "0");
  out << "\n0,1,2\n";
  out.close();
  CHECK_THROWS_WITH(load_clips(dir.path.string(), sk),
                    Catch::Matchers::ContainsSubstring(":3:"));
}

TEST_CASE("empty directory yields an empty list") {
  TempDir dir;
  CHECK(load_clips(dir.path.string(), default_skeleton()).empty());
}

TEST_CASE("unknown action label is rejected") {
  TempDir dir;
  SkeletonSpec sk = default_skeleton();
  std::ofstream out(dir.path / "bad.csv");
  out << "# subject=S0 action=jump fps=30 joints=" << sk.joint_count() << "\n";
  out.close();
  CHECK_THROWS_WITH(load_clips(dir.path.string(), sk),
                    Catch::Matchers::ContainsSubstring("jump"));
}

TEST_CASE("skeleton spec file round trips") {
  TempDir dir;
  SkeletonSpec sk = default_skeleton();
  const std::string path = (dir.path / "skeleton.txt").string();
  save_skeleton(sk, path);
  SkeletonSpec back = load_skeleton(path);
  CHECK(back.joint_names == sk.joint_names);
  REQUIRE(back.bones.size() == sk.bones.size());
  CHECK(back.left_heel == sk.left_heel);
  CHECK(back.root == sk.root);
}

TEST_CASE("remove_global_motion puts the root at the origin") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = synth_procedural(Action::Walk, {}, 3, sk, 60);
  for (std::size_t t = 0; t < clip.frames.size(); ++t)
    for (int k = 0; k < 3; ++k)
      clip.frames[t].joints[sk.root][k] += static_cast<double>(t);  // extra drift
  MotionClip out = remove_global_motion(clip, sk);
  for (const auto& f : out.frames)
    for (int k = 0; k < 3; ++k)
      CHECK(std::fabs(f.joints[sk.root][k]) < 1e-12);
}

TEST_CASE("remove_global_motion is rigid: bone lengths preserved") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = synth_procedural(Action::Walk, {}, 5, sk, 90);
  MotionClip out = remove_global_motion(clip, sk);
  for (std::size_t t = 0; t < clip.frames.size(); ++t)
    for (const auto& b : sk.bones)
      CHECK(std::fabs(bone_length(out.frames[t], b) -
                      bone_length(clip.frames[t], b)) < 1e-9);
}

TEST_CASE("a pose rotated 90 degrees about vertical canonicalizes identically") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = synth_procedural(Action::Knock, {}, 9, sk, 10);
  MotionClip rotated = clip;
  for (auto& f : rotated.frames)
    for (auto& j : f.joints) {
      const double x = j[0], z = j[2];
      j[0] = z;
      j[2] = -x;
    }
  MotionClip a = remove_global_motion(clip, sk);
  MotionClip b = remove_global_motion(rotated, sk);
  for (std::size_t t = 0; t < a.frames.size(); ++t)
    for (std::size_t j = 0; j < sk.joint_count(); ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(std::fabs(a.frames[t].joints[j][k] - b.frames[t].joints[j][k]) <
              1e-9);
}

TEST_CASE("normalize: constant channel becomes zero, round trip is identity") {
  SkeletonSpec sk = default_skeleton();
  std::vector<MotionClip> clips{synth_procedural(Action::Lift, {}, 4, sk, 100),
                                synth_procedural(Action::Walk, {}, 5, sk, 100)};
  // pin one channel constant
  for (auto& c : clips)
    for (auto& f : c.frames) f.joints[4][0] = 0.77;
  auto [normed, stats] = normalize(clips);
  for (const auto& c : normed)
    for (const auto& f : c.frames) CHECK(std::fabs(f.joints[4][0]) < 1e-9);
  // corpus channel means ~ 0
  std::vector<double> mean(sk.joint_count() * 3, 0.0);
  std::size_t n = 0;
  for (const auto& c : normed)
    for (const auto& f : c.frames) {
      ++n;
      for (std::size_t j = 0; j < sk.joint_count(); ++j)
        for (int k = 0; k < 3; ++k) mean[j * 3 + k] += f.joints[j][k];
    }
  for (double m : mean) CHECK(std::fabs(m / static_cast<double>(n)) < 1e-9);
  // inverse
  for (std::size_t i = 0; i < clips.size(); ++i) {
    MotionClip back = denormalize_clip(normed[i], stats);
    for (std::size_t t = 0; t < back.frames.size(); ++t)
      for (std::size_t j = 0; j < sk.joint_count(); ++j)
        for (int k = 0; k < 3; ++k)
          CHECK(std::fabs(back.frames[t].joints[j][k] -
                          clips[i].frames[t].joints[j][k]) < 1e-9);
  }
}

TEST_CASE("segment_gait splits crafted strikes {10, 70, 130} into 2 windows") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = flat_clip(150, sk.joint_count());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    // deep dips at t = 10, 70, 130
    double h = 0.2;
    for (std::size_t s : {std::size_t{10}, std::size_t{70}, std::size_t{130}}) {
      const double d = static_cast<double>(t) - static_cast<double>(s);
      h -= 0.2 * std::exp(-d * d / 50.0);
    }
    clip.frames[t].joints[sk.left_heel][1] = h;
  }
  auto windows = segment_gait(clip, sk, 125);
  REQUIRE(windows.size() == 2);
  for (const auto& w : windows) CHECK(w.frames.size() == 125);
}

TEST_CASE("segment_gait with fewer than two strikes yields an empty list") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = flat_clip(100, sk.joint_count());
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    const double d = static_cast<double>(t) - 50.0;
    clip.frames[t].joints[sk.left_heel][1] = 0.2 - 0.2 * std::exp(-d * d / 50.0);
  }
  std::vector<std::string> warnings;
  CHECK(segment_gait(clip, sk, 125, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("a span of exactly 125 frames resamples to itself") {
  SkeletonSpec sk = default_skeleton();
  MotionClip clip = synth_procedural(Action::Walk, {}, 6, sk, 300);
  std::vector<Pose> span(clip.frames.begin() + 3, clip.frames.begin() + 128);
  auto out = resample_frames(span, 125);
  REQUIRE(out.size() == 125);
  for (std::size_t t = 0; t < 125; ++t)
    for (std::size_t j = 0; j < sk.joint_count(); ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(std::fabs(out[t].joints[j][k] - span[t].joints[j][k]) < 1e-9);
}

TEST_CASE("segment_gait on procedural walk matches ground-truth strikes") {
  SkeletonSpec sk = default_skeleton();
  Rng rng(123);
  SubjectStyle style = draw_subject_style(rng);
  MotionClip clip = synth_procedural(Action::Walk, style, 42, sk, 400);
  REQUIRE(clip.heel_strikes.size() >= 3);
  auto detected = detect_heel_strikes(clip, sk);
  REQUIRE(detected.size() == clip.heel_strikes.size());
  for (std::size_t i = 0; i < detected.size(); ++i) {
    const auto a = static_cast<std::ptrdiff_t>(detected[i]);
    const auto b = static_cast<std::ptrdiff_t>(clip.heel_strikes[i]);
    CHECK(std::abs(a - b) <= 2);
  }
  auto windows = segment_gait(clip, sk, 125);
  CHECK(windows.size() == detected.size() - 1);
  for (const auto& w : windows) CHECK(w.frames.size() == 125);
}

TEST_CASE("window_actions arithmetic") {
  SkeletonSpec sk = default_skeleton();
  CHECK(window_actions(flat_clip(260, sk.joint_count())).size() == 2);
  CHECK(window_actions(flat_clip(125, sk.joint_count())).size() == 1);
  std::vector<std::string> warnings;
  CHECK(window_actions(flat_clip(124, sk.joint_count()), 125, 0, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("procedural clips keep bone lengths exactly at reference") {
  SkeletonSpec sk = default_skeleton();
  for (Action a : {Action::Knock, Action::Lift, Action::Throw, Action::Walk}) {
    MotionClip clip = synth_procedural(a, {}, 42, sk, 120);
    CHECK(max_bone_dev(clip, sk) < 1e-9);
  }
  // scaled subject against its scaled skeleton
  SubjectStyle style;
  style.scale = 1.07;
  SkeletonSpec scaled = scale_skeleton(sk, style.scale);
  MotionClip clip = synth_procedural(Action::Walk, style, 42, sk, 120);
  CHECK(max_bone_dev(clip, scaled) < 1e-6);
}

TEST_CASE("synth_procedural is deterministic in its arguments") {
  SkeletonSpec sk = default_skeleton();
  SubjectStyle style{1.02, 0.95, 1.1, 0.3};
  MotionClip a = synth_procedural(Action::Throw, style, 99, sk, 80);
  MotionClip b = synth_procedural(Action::Throw, style, 99, sk, 80);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t t = 0; t < a.frames.size(); ++t)
    for (std::size_t j = 0; j < sk.joint_count(); ++j)
      CHECK(a.frames[t].joints[j] == b.frames[t].joints[j]);
}

TEST_CASE("dataset builder hits the per-subject window quota") {
  SkeletonSpec sk = default_skeleton();
  DatasetConfig cfg;
  cfg.subjects = 2;
  cfg.seed = 11;
  auto clips = build_dataset(cfg, sk);
  auto windows = assemble_windows(clips, sk, cfg);
  std::map<std::pair<std::string, Action>, std::size_t> counts;
  for (const auto& w : windows) ++counts[{w.subject, w.action}];
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    const std::string id = "S" + std::to_string(s);
    CHECK(counts[{id, Action::Knock}] == 64);
    CHECK(counts[{id, Action::Lift}] == 88);
    CHECK(counts[{id, Action::Throw}] == 64);
    CHECK(counts[{id, Action::Walk}] == 80);
  }
}

TEST_CASE("build_dataset rejects zero subjects") {
  DatasetConfig cfg;
  cfg.subjects = 0;
  CHECK_THROWS_AS(build_dataset(cfg, default_skeleton()), std::invalid_argument);
}
