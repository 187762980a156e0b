#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace motionforge {

enum class Action { Knock, Lift, Throw, Walk };
inline constexpr std::size_t kNumActions = 4;

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Knock: return "knock";
    case Action::Lift: return "lift";
    case Action::Throw: return "throw";
    case Action::Walk: return "walk";
  }
  return "?";
}

inline Action action_from_name(const std::string& s) {
  if (s == "knock") return Action::Knock;
  if (s == "lift") return Action::Lift;
  if (s == "throw") return Action::Throw;
  if (s == "walk") return Action::Walk;
  throw std::invalid_argument("unknown action '" + s +
                              "'; valid actions: knock, lift, throw, walk");
}

struct Bone {
  std::size_t i, j;   // joint indices, bone vector points i -> j
  double length;      // reference length in meters
};

struct SkeletonSpec {
  std::vector<std::string> joint_names;
  std::vector<Bone> bones;
  std::size_t root = 0;        // pelvis
  std::size_t left_hip = 0, right_hip = 0;
  std::size_t left_heel = 0, right_heel = 0;

  std::size_t joint_count() const { return joint_names.size(); }

  void validate() const {
    const std::size_t J = joint_count();
    if (J == 0) throw std::invalid_argument("skeleton: no joints");
    std::vector<std::size_t> parent(J);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (const auto& b : bones) {
      if (b.i >= J || b.j >= J)
        throw std::invalid_argument("skeleton: bone index out of range");
      if (b.i == b.j) throw std::invalid_argument("skeleton: self-pair bone");
      if (!(b.length > 0.0))
        throw std::invalid_argument("skeleton: non-positive bone length");
      parent[find(b.i)] = find(b.j);
    }
    for (std::size_t j = 1; j < J; ++j)
      if (find(j) != find(0))
        throw std::invalid_argument("skeleton: bone set is not connected");
  }
};

struct Pose {
  std::vector<std::array<double, 3>> joints;

  std::size_t joint_count() const { return joints.size(); }

  std::array<double, 3> bone_vector(const Bone& b) const {
    const auto &a = joints[b.i], &c = joints[b.j];
    return {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  }
};

inline double bone_length(const Pose& p, const Bone& b) {
  const auto v = p.bone_vector(b);
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

struct MotionClip {
  std::vector<Pose> frames;
  double fps = 30.0;
  std::string subject;
  Action action = Action::Walk;
  // Ground-truth heel-strike frames of the left foot; procedural walk only.
  std::vector<std::size_t> heel_strikes;

  std::size_t joint_count() const {
    return frames.empty() ? 0 : frames.front().joint_count();
  }
};

struct MotionWindow {
  std::vector<Pose> frames;
  double fps = 30.0;
  std::string subject;
  Action action = Action::Walk;
};

struct NormalizationStats {
  std::vector<double> mean, stddev;  // 3J channels
};

// Flat row-major [frame][3J] view helpers.
inline std::vector<double> flatten_frames(const std::vector<Pose>& frames) {
  std::vector<double> out;
  if (frames.empty()) return out;
  out.reserve(frames.size() * frames[0].joint_count() * 3);
  for (const auto& f : frames)
    for (const auto& j : f.joints) out.insert(out.end(), j.begin(), j.end());
  return out;
}

inline std::vector<Pose> unflatten_frames(const std::vector<double>& flat,
                                          std::size_t joints) {
  const std::size_t stride = joints * 3;
  if (stride == 0 || flat.size() % stride != 0)
    throw std::invalid_argument("unflatten_frames: bad value count");
  std::vector<Pose> frames(flat.size() / stride);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    frames[t].joints.resize(joints);
    for (std::size_t j = 0; j < joints; ++j)
      for (int k = 0; k < 3; ++k)
        frames[t].joints[j][k] = flat[t * stride + j * 3 + k];
  }
  return frames;
}

// ---------------------------------------------------------------------------
// skeleton spec file: "<index> <name>" lines, BONES sentinel, "<i> <j> <len>"
// ---------------------------------------------------------------------------

inline void save_skeleton(const SkeletonSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write skeleton file " + path);
  for (std::size_t j = 0; j < spec.joint_count(); ++j)
    out << j << " " << spec.joint_names[j] << "\n";
  out << "BONES\n";
  out.precision(17);
  for (const auto& b : spec.bones)
    out << b.i << " " << b.j << " " << b.length << "\n";
}

inline SkeletonSpec load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read skeleton file " + path);
  SkeletonSpec spec;
  std::string line;
  bool in_bones = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "BONES") {
      in_bones = true;
      continue;
    }
    std::istringstream is(line);
    if (!in_bones) {
      std::size_t idx;
      std::string name;
      if (!(is >> idx >> name) || idx != spec.joint_names.size())
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed joint line");
      spec.joint_names.push_back(name);
    } else {
      Bone b;
      if (!(is >> b.i >> b.j >> b.length))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed bone line");
      spec.bones.push_back(b);
    }
  }
  auto idx_of = [&](const std::string& n) -> std::size_t {
    for (std::size_t j = 0; j < spec.joint_names.size(); ++j)
      if (spec.joint_names[j] == n) return j;
    return 0;
  };
  spec.root = idx_of("pelvis");
  spec.left_hip = idx_of("l_hip");
  spec.right_hip = idx_of("r_hip");
  spec.left_heel = idx_of("l_heel");
  spec.right_heel = idx_of("r_heel");
  spec.validate();
  return spec;
}

// The body model used throughout: 19 joints, y up, z forward.
inline SkeletonSpec default_skeleton() {
  SkeletonSpec s;
  s.joint_names = {"pelvis", "spine",   "chest",   "neck",    "head",
                   "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow",
                   "r_wrist", "l_hip",   "l_knee",  "l_heel",  "l_toe",
                   "r_hip",   "r_knee",  "r_heel",  "r_toe"};
  s.bones = {{0, 1, 0.15},  {1, 2, 0.15},  {2, 3, 0.15},  {3, 4, 0.12},
             {2, 5, 0.20},  {5, 6, 0.28},  {6, 7, 0.25},  {2, 8, 0.20},
             {8, 9, 0.28},  {9, 10, 0.25}, {0, 11, 0.10}, {11, 12, 0.42},
             {12, 13, 0.42}, {13, 14, 0.15}, {0, 15, 0.10}, {15, 16, 0.42},
             {16, 17, 0.42}, {17, 18, 0.15}};
  s.root = 0;
  s.left_hip = 11;
  s.right_hip = 15;
  s.left_heel = 13;
  s.right_heel = 17;
  s.validate();
  return s;
}

}  // namespace motionforge
