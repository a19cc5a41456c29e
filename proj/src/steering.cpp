// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/steering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "cfocus/error.hpp"

namespace cfocus {

const Pose& pose_at(const PoseTrack& track, double t) {
  if (track.samples.empty())
    throw RangeError("pose_at: track '" + track.participant_id + "' is empty");
  auto it = std::upper_bound(track.samples.begin(), track.samples.end(), t,
                             [](double v, const Pose& p) { return v < p.time; });
  if (it == track.samples.begin())
    throw RangeError("pose_at: no pose yet for '" + track.participant_id + "' at t=" +
                     std::to_string(t) + " s (first sample at " +
                     std::to_string(track.samples.front().time) + " s)");
  return *std::prev(it);
}

Direction relative_direction(const Pose& wearer, const Eigen::Vector3d& target_position,
                             const Eigen::Vector3d& marker_offset) {
  const Eigen::Vector3d world = target_position - wearer.position;
  const Eigen::Vector3d device = wearer.orientation.conjugate() * world - marker_offset;
  if (!(device.norm() > 1e-6))
    throw NumericalError("relative_direction: target coincides with the wearer");
  return Direction::from_vector(device);
}

std::size_t steer(const AtfSet& set, const Pose& wearer, const Eigen::Vector3d& target_position,
                  const Eigen::Vector3d& marker_offset) {
  return nearest_direction(set, relative_direction(wearer, target_position, marker_offset));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kPoseHeader = "time_s,participant_id,px,py,pz,qw,qx,qy,qz";

double parse_double(const std::string& field, std::size_t line, const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw LoadError("pose file line " + std::to_string(line) + ": bad " + name + " '" + field +
                    "'");
  return v;
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

PoseTracks parse_pose_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != kPoseHeader)
    throw LoadError(std::string("pose file: header must be '") + kPoseHeader + "'");
  PoseTracks tracks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9)
      throw LoadError("pose file line " + std::to_string(line_no) + ": expected 9 fields, got " +
                      std::to_string(f.size()));
    if (f[1].empty())
      throw LoadError("pose file line " + std::to_string(line_no) + ": empty participant_id");
    Pose p;
    p.time = parse_double(f[0], line_no, "time_s");
    p.position = {parse_double(f[2], line_no, "px"), parse_double(f[3], line_no, "py"),
                  parse_double(f[4], line_no, "pz")};
    Eigen::Quaterniond q(parse_double(f[5], line_no, "qw"), parse_double(f[6], line_no, "qx"),
                         parse_double(f[7], line_no, "qy"), parse_double(f[8], line_no, "qz"));
    // Text export loses a few digits; renormalize small deviations only.
    if (std::abs(q.norm() - 1.0) > 1e-3)
      throw LoadError("pose file line " + std::to_string(line_no) +
                      ": quaternion is not unit length");
    q.normalize();
    p.orientation = q;
    PoseTrack& track = tracks[f[1]];
    track.participant_id = f[1];
    if (!track.samples.empty() && !(p.time > track.samples.back().time))
      throw LoadError("pose file line " + std::to_string(line_no) +
                      ": timestamps not strictly increasing for '" + f[1] + "'");
    track.samples.push_back(p);
  }
  return tracks;
}

PoseTracks load_pose_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("pose file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pose_csv(ss.str());
}

std::string format_pose_csv(const PoseTracks& tracks) {
  std::vector<std::tuple<double, std::string, const Pose*>> rows;
  for (const auto& [id, track] : tracks)
    for (const auto& p : track.samples) rows.emplace_back(p.time, id, &p);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::ostringstream out;
  out.precision(17);
  out << kPoseHeader << '\n';
  for (const auto& [t, id, p] : rows) {
    const auto& q = p->orientation;
    out << t << ',' << id << ',' << p->position.x() << ',' << p->position.y() << ','
        << p->position.z() << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z()
        << '\n';
  }
  return out.str();
}

}  // namespace cfocus
