#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "motionforge/skeleton.hpp"

namespace motionforge {

inline constexpr double kStdFloor = 1e-6;

// Per frame: root joint to origin, heading about the vertical (y) axis removed
// so the hip axis points along +x. Rigid transforms only.
inline MotionClip remove_global_motion(const MotionClip& clip,
                                       const SkeletonSpec& skeleton,
                                       std::vector<std::size_t>* flagged = nullptr) {
  MotionClip out = clip;
  double prev_cos = 1.0, prev_sin = 0.0;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    Pose& pose = out.frames[t];
    const auto root = pose.joints[skeleton.root];
    for (auto& j : pose.joints) {
      j[0] -= root[0];
      j[1] -= root[1];
      j[2] -= root[2];
    }
    const auto& lh = pose.joints[skeleton.left_hip];
    const auto& rh = pose.joints[skeleton.right_hip];
    const double ax = rh[0] - lh[0], az = rh[2] - lh[2];
    const double len = std::sqrt(ax * ax + az * az);
    double c, s;
    if (len < 1e-9) {
      if (flagged) flagged->push_back(t);
      c = prev_cos;
      s = prev_sin;
    } else {
      // rotate so the hip axis (ax, az) maps to (+len, 0)
      c = ax / len;
      s = az / len;
      prev_cos = c;
      prev_sin = s;
    }
    for (auto& j : pose.joints) {
      const double x = j[0], z = j[2];
      j[0] = c * x + s * z;
      j[2] = -s * x + c * z;
    }
  }
  return out;
}

inline NormalizationStats compute_stats(const std::vector<MotionClip>& clips) {
  if (clips.empty()) throw std::invalid_argument("normalize: no clips");
  const std::size_t C = clips.front().joint_count() * 3;
  NormalizationStats st;
  st.mean.assign(C, 0.0);
  st.stddev.assign(C, 0.0);
  std::size_t n = 0;
  for (const auto& clip : clips)
    for (const auto& f : clip.frames) {
      ++n;
      for (std::size_t j = 0; j < f.joint_count(); ++j)
        for (int k = 0; k < 3; ++k) st.mean[j * 3 + k] += f.joints[j][k];
    }
  for (auto& m : st.mean) m /= static_cast<double>(n);
  for (const auto& clip : clips)
    for (const auto& f : clip.frames)
      for (std::size_t j = 0; j < f.joint_count(); ++j)
        for (int k = 0; k < 3; ++k) {
          const double d = f.joints[j][k] - st.mean[j * 3 + k];
          st.stddev[j * 3 + k] += d * d;
        }
  for (auto& s : st.stddev)
    s = std::max(std::sqrt(s / static_cast<double>(n)), kStdFloor);
  return st;
}

inline MotionClip normalize_clip(const MotionClip& clip,
                                 const NormalizationStats& st) {
  MotionClip out = clip;
  for (auto& f : out.frames)
    for (std::size_t j = 0; j < f.joint_count(); ++j)
      for (int k = 0; k < 3; ++k) {
        const std::size_t c = j * 3 + k;
        f.joints[j][k] = (f.joints[j][k] - st.mean[c]) / st.stddev[c];
      }
  return out;
}

inline MotionClip denormalize_clip(const MotionClip& clip,
                                   const NormalizationStats& st) {
  MotionClip out = clip;
  for (auto& f : out.frames)
    for (std::size_t j = 0; j < f.joint_count(); ++j)
      for (int k = 0; k < 3; ++k) {
        const std::size_t c = j * 3 + k;
        f.joints[j][k] = f.joints[j][k] * st.stddev[c] + st.mean[c];
      }
  return out;
}

inline std::pair<std::vector<MotionClip>, NormalizationStats> normalize(
    const std::vector<MotionClip>& clips) {
  NormalizationStats st = compute_stats(clips);
  std::vector<MotionClip> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(normalize_clip(c, st));
  return {std::move(out), std::move(st)};
}

inline void save_stats(const NormalizationStats& st, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("stats: cannot open '" + path + "'");
  os.precision(17);
  os << st.mean.size() << "\n";
  for (std::size_t i = 0; i < st.mean.size(); ++i)
    os << st.mean[i] << ' ' << st.stddev[i] << "\n";
  if (!os) throw std::runtime_error("stats: write to '" + path + "' failed");
}

inline NormalizationStats load_stats(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("stats: cannot open '" + path + "'");
  std::size_t n = 0;
  is >> n;
  NormalizationStats st;
  st.mean.resize(n);
  st.stddev.resize(n);
  for (std::size_t i = 0; i < n; ++i) is >> st.mean[i] >> st.stddev[i];
  if (!is) throw std::runtime_error("stats: '" + path + "' is malformed");
  return st;
}

// Linear time-resampling of a frame span to exactly target_len frames.
inline std::vector<Pose> resample_frames(const std::vector<Pose>& frames,
                                         std::size_t target_len) {
  if (frames.empty() || target_len == 0) return {};
  std::vector<Pose> out(target_len);
  const std::size_t J = frames.front().joint_count();
  for (std::size_t t = 0; t < target_len; ++t) {
    const double u = target_len == 1
                         ? 0.0
                         : static_cast<double>(t) *
                               static_cast<double>(frames.size() - 1) /
                               static_cast<double>(target_len - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(u), frames.size() - 1);
    const std::size_t hi = std::min(lo + 1, frames.size() - 1);
    const double w = u - static_cast<double>(lo);
    out[t].joints.resize(J);
    for (std::size_t j = 0; j < J; ++j)
      for (int k = 0; k < 3; ++k)
        out[t].joints[j][k] = (1.0 - w) * frames[lo].joints[j][k] +
                              w * frames[hi].joints[j][k];
  }
  return out;
}

// Heel strikes: local minima of the left heel height, below an adaptive
// threshold, separated by a refractory period of 0.4x the estimated period.
inline std::vector<std::size_t> detect_heel_strikes(const MotionClip& clip,
                                                    const SkeletonSpec& skeleton) {
  const std::size_t n = clip.frames.size();
  if (n < 3) return {};
  std::vector<double> h(n);
  double hmin = 1e300, hmax = -1e300;
  for (std::size_t t = 0; t < n; ++t) {
    h[t] = clip.frames[t].joints[skeleton.left_heel][1];
    hmin = std::min(hmin, h[t]);
    hmax = std::max(hmax, h[t]);
  }
  const double threshold = hmin + 0.3 * (hmax - hmin);
  std::vector<std::size_t> minima;
  for (std::size_t t = 1; t + 1 < n; ++t)
    if (h[t] <= h[t - 1] && h[t] <= h[t + 1] && h[t] <= threshold)
      minima.push_back(t);
  if (minima.size() < 2) return minima;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < minima.size(); ++i)
    gaps.push_back(static_cast<double>(minima[i] - minima[i - 1]));
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double refractory = 0.4 * std::max(gaps[gaps.size() / 2], 1.0);
  std::vector<std::size_t> strikes;
  for (std::size_t m : minima)
    if (strikes.empty() ||
        static_cast<double>(m - strikes.back()) >= refractory)
      strikes.push_back(m);
  return strikes;
}

// Gait cycles between consecutive same-foot heel strikes, each resampled to
// target_len frames.
inline std::vector<MotionWindow> segment_gait(const MotionClip& clip,
                                              const SkeletonSpec& skeleton,
                                              std::size_t target_len = 125,
                                              std::vector<std::string>* warnings = nullptr) {
  const auto strikes = detect_heel_strikes(clip, skeleton);
  if (strikes.size() < 2) {
    if (warnings)
      warnings->push_back("clip '" + clip.subject + "/" +
                          action_name(clip.action) + "': fewer than 2 heel strikes");
    return {};
  }
  std::vector<MotionWindow> windows;
  for (std::size_t i = 1; i < strikes.size(); ++i) {
    std::vector<Pose> span(clip.frames.begin() + strikes[i - 1],
                           clip.frames.begin() + strikes[i] + 1);
    MotionWindow w;
    w.frames = resample_frames(span, target_len);
    w.fps = clip.fps;
    w.subject = clip.subject;
    w.action = clip.action;
    windows.push_back(std::move(w));
  }
  return windows;
}

// Fixed-length windows; stride defaults to target_len (non-overlapping),
// trailing remainder discarded.
inline std::vector<MotionWindow> window_actions(const MotionClip& clip,
                                                std::size_t target_len = 125,
                                                std::size_t stride = 0,
                                                std::vector<std::string>* warnings = nullptr) {
  if (target_len == 0) throw std::invalid_argument("window_actions: target_len == 0");
  if (stride == 0) stride = target_len;
  if (clip.frames.size() < target_len) {
    if (warnings)
      warnings->push_back("clip '" + clip.subject + "/" +
                          action_name(clip.action) + "': shorter than window");
    return {};
  }
  std::vector<MotionWindow> windows;
  for (std::size_t start = 0; start + target_len <= clip.frames.size();
       start += stride) {
    MotionWindow w;
    w.frames.assign(clip.frames.begin() + start,
                    clip.frames.begin() + start + target_len);
    w.fps = clip.fps;
    w.subject = clip.subject;
    w.action = clip.action;
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace motionforge
