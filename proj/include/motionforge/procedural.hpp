#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "motionforge/preprocess.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"

// Procedural stand-in for a mocap corpus: kinematically consistent clips are
// produced by forward kinematics from joint-angle trajectories, so bone
// lengths are exact by construction and all style/noise lives in angle space.

namespace motionforge {

struct SubjectStyle {
  double scale = 1.0;        // uniform limb scaling
  double freq_jitter = 1.0;  // tempo multiplier
  double amp_jitter = 1.0;   // amplitude multiplier
  double phase0 = 0.0;
};

inline SubjectStyle draw_subject_style(Rng& rng) {
  SubjectStyle st;
  st.scale = rng.uniform(0.92, 1.08);
  st.freq_jitter = rng.uniform(0.85, 1.15);
  st.amp_jitter = rng.uniform(0.8, 1.2);
  st.phase0 = rng.uniform(0.0, 6.2831853);
  return st;
}

inline SkeletonSpec scale_skeleton(const SkeletonSpec& base, double s) {
  SkeletonSpec out = base;
  for (auto& b : out.bones) b.length *= s;
  return out;
}

namespace detail {

// Smooth angle-space noise: a small sum of incommensurate sinusoids.
struct AngleNoise {
  std::array<double, 3> amp, freq, phase;
  static AngleNoise draw(Rng& rng, double magnitude) {
    AngleNoise n;
    for (int k = 0; k < 3; ++k) {
      n.amp[k] = magnitude * rng.uniform(0.3, 1.0);
      n.freq[k] = rng.uniform(0.1, 0.9);
      n.phase[k] = rng.uniform(0.0, 6.2831853);
    }
    return n;
  }
  double at(double t) const {
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      v += amp[k] * std::sin(6.2831853 * freq[k] * t + phase[k]);
    return v;
  }
};

struct BodyAngles {
  double torso_pitch = 0.0;
  double hip_l = 0.0, knee_l = 0.0, hip_r = 0.0, knee_r = 0.0;
  double sho_l = 0.0, elb_l = 0.4, sho_r = 0.0, elb_r = 0.4;
  double pelvis_x = 0.0, pelvis_y = 0.0, pelvis_z = 0.0;  // world offsets
  double heading = 0.0;                                   // yaw about +y
};

// Limb direction for a sagittal-plane pitch: 0 points straight down,
// positive swings forward (+z).
inline std::array<double, 3> limb_dir(double pitch) {
  return {0.0, -std::cos(pitch), std::sin(pitch)};
}

inline Pose pose_from_angles(const BodyAngles& a, const SkeletonSpec& sk,
                             double base_height) {
  auto len = [&](std::size_t bone) { return sk.bones[bone].length; };
  Pose p;
  p.joints.resize(sk.joint_count());
  auto set = [&](std::size_t j, double x, double y, double z) {
    p.joints[j] = {x, y, z};
  };
  const double tp = a.torso_pitch;
  // canonical frame: pelvis at origin height base_height, facing +z
  std::array<double, 3> pelvis{0.0, base_height, 0.0};
  set(0, pelvis[0], pelvis[1], pelvis[2]);
  auto up_dir = std::array<double, 3>{0.0, std::cos(tp), std::sin(tp)};
  auto chain_up = [&](std::size_t from, std::size_t joint, std::size_t bone) {
    const auto& f = p.joints[from];
    set(joint, f[0] + len(bone) * up_dir[0], f[1] + len(bone) * up_dir[1],
        f[2] + len(bone) * up_dir[2]);
  };
  chain_up(0, 1, 0);   // spine
  chain_up(1, 2, 1);   // chest
  chain_up(2, 3, 2);   // neck
  chain_up(3, 4, 3);   // head
  // shoulders lateral off the chest
  const auto& chest = p.joints[2];
  set(5, chest[0] - len(4), chest[1], chest[2]);
  set(8, chest[0] + len(7), chest[1], chest[2]);
  auto limb2 = [&](std::size_t top, std::size_t mid, std::size_t end,
                   std::size_t bone1, std::size_t bone2, double pitch1,
                   double pitch2) {
    const auto d1 = limb_dir(pitch1);
    const auto& tj = p.joints[top];
    set(mid, tj[0] + len(bone1) * d1[0], tj[1] + len(bone1) * d1[1],
        tj[2] + len(bone1) * d1[2]);
    const auto d2 = limb_dir(pitch2);
    const auto& mj = p.joints[mid];
    set(end, mj[0] + len(bone2) * d2[0], mj[1] + len(bone2) * d2[1],
        mj[2] + len(bone2) * d2[2]);
  };
  limb2(5, 6, 7, 5, 6, a.sho_l, a.sho_l + a.elb_l);    // left arm
  limb2(8, 9, 10, 8, 9, a.sho_r, a.sho_r + a.elb_r);   // right arm
  // hips lateral off the pelvis
  set(11, pelvis[0] - len(10), pelvis[1], pelvis[2]);
  set(15, pelvis[0] + len(14), pelvis[1], pelvis[2]);
  limb2(11, 12, 13, 11, 12, a.hip_l, a.hip_l - a.knee_l);  // left leg
  limb2(15, 16, 17, 15, 16, a.hip_r, a.hip_r - a.knee_r);  // right leg
  // feet point forward, flat
  const auto& lheel = p.joints[13];
  set(14, lheel[0], lheel[1], lheel[2] + len(13));
  const auto& rheel = p.joints[17];
  set(18, rheel[0], rheel[1], rheel[2] + len(17));
  // heading rotation + world translation
  const double c = std::cos(a.heading), s = std::sin(a.heading);
  for (auto& j : p.joints) {
    const double x = j[0], z = j[2];
    j[0] = c * x + s * z + a.pelvis_x;
    j[1] += a.pelvis_y;
    j[2] = -s * x + c * z + a.pelvis_z;
  }
  return p;
}

}  // namespace detail

// Deterministic in all arguments. Walking clips carry ground-truth left-foot
// heel-strike frames.
inline MotionClip synth_procedural(Action action, const SubjectStyle& style,
                                   std::uint64_t rng_seed,
                                   const SkeletonSpec& base_skeleton,
                                   std::size_t num_frames = 400,
                                   double fps = 30.0) {
  const SkeletonSpec sk = scale_skeleton(base_skeleton, style.scale);
  const double leg = sk.bones[11].length + sk.bones[12].length;
  const double base_height = leg * 1.02;
  Rng rng(rng_seed ^ 0x5bd1e995u);
  // per-clip smooth style noise on every angle channel
  detail::AngleNoise n_torso = detail::AngleNoise::draw(rng, 0.03);
  detail::AngleNoise n_hip_l = detail::AngleNoise::draw(rng, 0.05);
  detail::AngleNoise n_hip_r = detail::AngleNoise::draw(rng, 0.05);
  detail::AngleNoise n_knee_l = detail::AngleNoise::draw(rng, 0.05);
  detail::AngleNoise n_knee_r = detail::AngleNoise::draw(rng, 0.05);
  detail::AngleNoise n_sho_l = detail::AngleNoise::draw(rng, 0.06);
  detail::AngleNoise n_sho_r = detail::AngleNoise::draw(rng, 0.06);
  detail::AngleNoise n_elb_l = detail::AngleNoise::draw(rng, 0.06);
  detail::AngleNoise n_elb_r = detail::AngleNoise::draw(rng, 0.06);
  const double clip_phase = rng.uniform(0.0, 6.2831853);

  MotionClip clip;
  clip.fps = fps;
  clip.action = action;
  clip.frames.reserve(num_frames);

  const double amp = style.amp_jitter;
  const double two_pi = 6.283185307179586;

  // walking tempo and stride
  const double period_s = 1.15 / style.freq_jitter;
  const double hip_amp = 0.45 * amp;
  const double speed = 2.0 * leg * std::sin(hip_amp) / period_s;

  std::vector<double> heel_heights(num_frames);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const double time = static_cast<double>(t) / fps;
    detail::BodyAngles a;
    a.torso_pitch = 0.04 + n_torso.at(time);
    a.elb_l = 0.35 + n_elb_l.at(time);
    a.elb_r = 0.35 + n_elb_r.at(time);
    a.sho_l = n_sho_l.at(time);
    a.sho_r = n_sho_r.at(time);
    a.hip_l = n_hip_l.at(time);
    a.hip_r = n_hip_r.at(time);
    a.knee_l = 0.06 + n_knee_l.at(time);
    a.knee_r = 0.06 + n_knee_r.at(time);
    a.pelvis_y = 0.0;

    switch (action) {
      case Action::Walk: {
        const double phi = two_pi * time / period_s + style.phase0 + clip_phase;
        a.hip_l += hip_amp * std::sin(phi);
        a.hip_r += hip_amp * std::sin(phi + 3.14159265);
        // swing-phase knee flexion lifts the heel so its height has a single
        // minimum per cycle (at phi = pi for the left foot)
        a.knee_l += 0.7 * amp * std::pow(std::max(0.0, std::cos(phi)), 2.0);
        a.knee_r += 0.7 * amp * std::pow(std::max(0.0, -std::cos(phi)), 2.0);
        a.sho_l += 0.25 * amp * std::sin(phi + 3.14159265);
        a.sho_r += 0.25 * amp * std::sin(phi);
        a.pelvis_y = 0.02 * std::sin(2.0 * phi);
        a.pelvis_x = 0.02 * std::sin(phi);
        a.pelvis_z = speed * time;
        a.heading = 0.08 * std::sin(two_pi * time / (8.0 * period_s));
        break;
      }
      case Action::Knock: {
        // fast small oscillation of the raised right forearm, in bursts
        const double f_knock = 2.6 * style.freq_jitter;
        const double envelope =
            0.5 * (1.0 + std::sin(two_pi * time / 2.8 + style.phase0));
        a.sho_r += 0.85 + 0.06 * std::sin(two_pi * f_knock * time);
        a.elb_r = 1.15 + 0.45 * amp * envelope *
                             std::sin(two_pi * f_knock * time + clip_phase);
        a.pelvis_z = 0.03 * std::sin(two_pi * time / 6.0);
        break;
      }
      case Action::Lift: {
        // slow two-armed raise with knee dip
        const double phi = two_pi * time / 3.8 * style.freq_jitter + style.phase0;
        const double lift = 0.5 * (1.0 - std::cos(phi));
        a.sho_l += 0.15 + 1.1 * amp * lift;
        a.sho_r += 0.15 + 1.1 * amp * lift;
        a.elb_l = 0.5 - 0.25 * lift;
        a.elb_r = 0.5 - 0.25 * lift;
        a.torso_pitch += 0.18 * amp * (1.0 - lift);
        a.knee_l += 0.30 * amp * (1.0 - lift);
        a.knee_r += 0.30 * amp * (1.0 - lift);
        a.pelvis_y = -0.05 * amp * (1.0 - lift);
        break;
      }
      case Action::Throw: {
        // windup then fast release, right arm; phase warp gives asymmetry
        const double theta = two_pi * time / 2.6 * style.freq_jitter + style.phase0;
        const double warped = theta + 0.9 * std::sin(theta);
        a.sho_r += 0.5 + 1.1 * amp * std::sin(warped);
        a.elb_r = 0.5 + 0.55 * amp * (1.0 + std::cos(warped)) * 0.5;
        a.sho_l += 0.1 * std::sin(theta);
        a.torso_pitch += 0.10 * amp * std::sin(warped + 0.5);
        a.pelvis_z = 0.05 * std::sin(theta);
        break;
      }
    }
    Pose pose = detail::pose_from_angles(a, sk, base_height + a.pelvis_y);
    heel_heights[t] = 0.0;  // filled below from the final pose
    clip.frames.push_back(std::move(pose));
  }
  for (std::size_t t = 0; t < num_frames; ++t)
    heel_heights[t] = clip.frames[t].joints[base_skeleton.left_heel][1];

  if (action == Action::Walk) {
    // ground-truth strikes: per-cycle argmin of the left heel height
    const double period_frames = period_s * fps;
    const std::size_t half = static_cast<std::size_t>(period_frames / 2.0);
    for (std::size_t t = 1; t + 1 < num_frames; ++t) {
      if (heel_heights[t] > heel_heights[t - 1] ||
          heel_heights[t] > heel_heights[t + 1])
        continue;
      std::size_t lo = t > half ? t - half : 0;
      std::size_t hi = std::min(num_frames, t + half);
      bool is_min = true;
      for (std::size_t u = lo; u < hi; ++u)
        if (heel_heights[u] < heel_heights[t]) is_min = false;
      if (is_min &&
          (clip.heel_strikes.empty() ||
           static_cast<double>(t - clip.heel_strikes.back()) > 0.5 * period_frames))
        clip.heel_strikes.push_back(t);
    }
  }
  return clip;
}

// ---------------------------------------------------------------------------
// dataset builder
// ---------------------------------------------------------------------------

struct DatasetConfig {
  std::size_t subjects = 6;
  std::uint64_t seed = 1;
  // windows per subject for knock, lift, throw, walk
  std::array<std::size_t, 4> windows_per_action{64, 88, 64, 80};
  std::size_t window_len = 125;
  double fps = 30.0;
};

inline std::vector<MotionClip> build_dataset(const DatasetConfig& cfg,
                                             const SkeletonSpec& skeleton) {
  if (cfg.subjects == 0)
    throw std::invalid_argument("build_dataset: subject count must be positive");
  std::vector<MotionClip> clips;
  Rng top(cfg.seed);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    Rng srng = top.fork(s);
    SubjectStyle style = draw_subject_style(srng);
    const std::string subject = "S" + std::to_string(s);
    const std::array<Action, 4> actions{Action::Knock, Action::Lift,
                                        Action::Throw, Action::Walk};
    for (std::size_t ai = 0; ai < actions.size(); ++ai) {
      const Action action = actions[ai];
      const std::size_t want = cfg.windows_per_action[ai];
      const std::size_t clips_per_action = 4;
      const std::size_t windows_per_clip =
          (want + clips_per_action - 1) / clips_per_action;
      for (std::size_t c = 0; c < clips_per_action; ++c) {
        std::size_t frames;
        if (action == Action::Walk) {
          const double period_frames = cfg.fps * 1.15 / style.freq_jitter;
          frames = static_cast<std::size_t>(
              period_frames * static_cast<double>(windows_per_clip + 2));
        } else {
          frames = cfg.window_len * windows_per_clip;
        }
        MotionClip clip = synth_procedural(action, style, srng.next_u64(),
                                           skeleton, frames, cfg.fps);
        clip.subject = subject;
        clips.push_back(std::move(clip));
      }
    }
  }
  return clips;
}

// Windows grouped per subject/action with the configured counts enforced:
// walking clips are gait-segmented, other actions windowed non-overlapping.
inline std::vector<MotionWindow> assemble_windows(
    const std::vector<MotionClip>& clips, const SkeletonSpec& skeleton,
    const DatasetConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  std::map<std::pair<std::string, Action>, std::vector<MotionWindow>> grouped;
  for (const auto& clip : clips) {
    auto ws = clip.action == Action::Walk
                  ? segment_gait(clip, skeleton, cfg.window_len, warnings)
                  : window_actions(clip, cfg.window_len, 0, warnings);
    auto& bucket = grouped[{clip.subject, clip.action}];
    for (auto& w : ws) bucket.push_back(std::move(w));
  }
  std::vector<MotionWindow> out;
  for (auto& [key, bucket] : grouped) {
    const std::size_t want =
        cfg.windows_per_action[static_cast<std::size_t>(key.second)];
    if (bucket.size() < want)
      throw std::runtime_error(
          "assemble_windows: subject " + key.first + " action " +
          action_name(key.second) + " produced " + std::to_string(bucket.size()) +
          " windows, need " + std::to_string(want));
    bucket.resize(want);
    for (auto& w : bucket) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace motionforge
