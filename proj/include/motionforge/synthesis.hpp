#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "motionforge/losses.hpp"
#include "motionforge/model.hpp"
#include "motionforge/preprocess.hpp"
#include "motionforge/skeleton.hpp"

namespace motionforge {

struct RolloutConfig {
  std::size_t seed_T = 25;
  std::size_t iterations = 4;
  bool drop_seed = false;
};

struct RolloutResult {
  MotionClip clip;
  bool truncated = false;
  std::string error;
  std::vector<double> seam_blend;  // blend loss at each window seam
};

// Autoregressive rollout: each iteration conditions on the immediately
// preceding window; the control vector stays fixed. Non-finite output stops
// the rollout at the last finite window.
inline RolloutResult rollout(const Generator& generator,
                             const std::vector<Pose>& seed, Action action,
                             const RolloutConfig& cfg) {
  if (seed.size() != cfg.seed_T)
    throw std::invalid_argument("rollout: seed has " +
                                std::to_string(seed.size()) + " frames, need " +
                                std::to_string(cfg.seed_T));
  const std::size_t classes = generator.config().classes;
  RolloutResult res;
  res.clip.fps = 30;
  res.clip.action = action;
  if (!cfg.drop_seed)
    res.clip.frames.insert(res.clip.frames.end(), seed.begin(), seed.end());

  std::vector<Pose> window = seed;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Tensor x = append_control_channels(windows_to_tensor({&window}), {action},
                                       classes);
    Tensor y = generator.forward(x);
    if (!all_finite(y)) {
      res.truncated = true;
      res.error = "non-finite output at iteration " + std::to_string(it + 1);
      break;
    }
    std::vector<Pose> next = tensor_to_frames(y, 0);
    double seam = 0.0;
    const std::size_t J = window.front().joint_count();
    for (std::size_t j = 0; j < J; ++j)
      for (int k = 0; k < 3; ++k) {
        const double d = next.front().joints[j][k] - window.back().joints[j][k];
        seam += d * d;
      }
    res.seam_blend.push_back(seam / static_cast<double>(3 * J));
    res.clip.frames.insert(res.clip.frames.end(), next.begin(), next.end());
    window = std::move(next);
  }
  return res;
}

inline MotionClip denormalize_motion(const MotionClip& clip,
                                     const NormalizationStats& stats) {
  return denormalize_clip(clip, stats);
}

// Mean relative deviation of bone lengths from the skeleton's rest lengths
// over every frame and bone.
inline double bone_length_deviation(const MotionClip& clip,
                                    const SkeletonSpec& skeleton) {
  if (clip.frames.empty() || skeleton.bones.empty()) return 0.0;
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& f : clip.frames)
    for (const auto& b : skeleton.bones) {
      acc += std::fabs(bone_length(f, b) - b.length) / b.length;
      ++n;
    }
  return acc / static_cast<double>(n);
}

}  // namespace motionforge
