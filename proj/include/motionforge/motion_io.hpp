#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "motionforge/skeleton.hpp"

namespace motionforge {

// Motion CSV: one file per clip.
//   # subject=<id> action=<label> fps=<int> joints=<J>
//   x0,y0,z0,...   (3J values per frame row, full round-trip precision)

inline void save_clip(const MotionClip& clip, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write motion file " + path);
  const std::size_t J = clip.joint_count();
  out << "# subject=" << clip.subject << " action=" << action_name(clip.action)
      << " fps=" << static_cast<int>(clip.fps) << " joints=" << J << "\n";
  out.precision(17);
  for (const auto& f : clip.frames) {
    bool first = true;
    for (const auto& j : f.joints)
      for (int k = 0; k < 3; ++k) {
        if (!first) out << ",";
        out << j[k];
        first = false;
      }
    out << "\n";
  }
}

namespace detail {

inline std::string header_field(const std::string& header, const std::string& key,
                                const std::string& path) {
  const std::string pat = key + "=";
  const auto pos = header.find(pat);
  if (pos == std::string::npos)
    throw std::runtime_error(path + ":1: header missing '" + key + "='");
  const auto start = pos + pat.size();
  auto end = header.find(' ', start);
  if (end == std::string::npos) end = header.size();
  return header.substr(start, end - start);
}

}  // namespace detail

inline MotionClip load_clip(const std::string& path, const SkeletonSpec& skeleton) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read motion file " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
    throw std::runtime_error(path + ":1: missing '# subject=... action=...' header");
  MotionClip clip;
  clip.subject = detail::header_field(header, "subject", path);
  clip.action = action_from_name(detail::header_field(header, "action", path));
  clip.fps = std::stod(detail::header_field(header, "fps", path));
  const std::size_t J = std::stoul(detail::header_field(header, "joints", path));
  if (J != skeleton.joint_count())
    throw std::runtime_error(path + ": joint count " + std::to_string(J) +
                             " does not match skeleton (" +
                             std::to_string(skeleton.joint_count()) + ")");
  if (!(clip.fps > 0)) throw std::runtime_error(path + ": fps must be positive");

  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Pose pose;
    pose.joints.resize(J);
    const char* p = line.data();
    const char* end = p + line.size();
    std::size_t count = 0;
    while (p < end) {
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{})
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed numeric value");
      if (count < 3 * J) pose.joints[count / 3][count % 3] = v;
      ++count;
      p = next;
      if (p < end && *p == ',') ++p;
    }
    if (count != 3 * J)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(3 * J) + " values, got " +
                               std::to_string(count));
    clip.frames.push_back(std::move(pose));
  }
  if (clip.frames.empty())
    throw std::runtime_error(path + ": clip has no frames");
  return clip;
}

// Loads every *.csv under path in name order. An empty directory is fine.
inline std::vector<MotionClip> load_clips(const std::string& path,
                                          const SkeletonSpec& skeleton) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path))
    throw std::runtime_error("not a directory: " + path);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::vector<MotionClip> clips;
  clips.reserve(files.size());
  for (const auto& f : files) clips.push_back(load_clip(f, skeleton));
  return clips;
}

}  // namespace motionforge
