// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Pose tracks and the conversion of wearer/target positions into a
// device-frame direction and a steering ATF index.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cfocus/atf.hpp"

namespace cfocus {

struct Pose {
  double time = 0.0;                       // seconds
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world frame, meters
  // world-from-device rotation
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct PoseTrack {
  std::string participant_id;
  std::vector<Pose> samples;  // strictly increasing time
};

using PoseTracks = std::map<std::string, PoseTrack>;

// Zero-order hold: the latest sample with time <= t.
const Pose& pose_at(const PoseTrack& track, double t);

// Direction of target_position as seen from the wearer's device frame.
// marker_offset is the device reference point relative to the tracked
// position, expressed in the device frame.
Direction relative_direction(const Pose& wearer, const Eigen::Vector3d& target_position,
                             const Eigen::Vector3d& marker_offset = Eigen::Vector3d::Zero());

std::size_t steer(const AtfSet& set, const Pose& wearer, const Eigen::Vector3d& target_position,
                  const Eigen::Vector3d& marker_offset = Eigen::Vector3d::Zero());

// CSV with header time_s,participant_id,px,py,pz,qw,qx,qy,qz. Rows may
// interleave participants but must be time-ordered per participant.
PoseTracks load_pose_file(const std::filesystem::path& path);
PoseTracks parse_pose_csv(const std::string& text);
std::string format_pose_csv(const PoseTracks& tracks);

}  // namespace cfocus
