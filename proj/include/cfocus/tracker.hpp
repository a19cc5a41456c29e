// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Head-tracklet association. Each frame, trajectories are matched to head
// detections by minimizing sum (c_ij - t) x_ij over one-to-one assignments,
// with c_ij = |p_j - H(p_i)| + alpha |b_j - b_i|. Matched trajectories are
// refreshed, unmatched ones coast on the motion model until their life runs
// out, and the survivors are named by a majority vote of overlapping face
// IDs.

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cfocus {

// (x1, y1, x2, y2) in pixels, x1 < x2, y1 < y2.
struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  bool valid() const { return x1 < x2 && y1 < y2; }
  double area() const { return (x2 - x1) * (y2 - y1); }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

struct Detection {
  std::int64_t frame = 0;
  Box box;
  std::vector<double> feature;
};

// 2-D affine map p -> A p + t, applied to box corners.
class MotionTransform {
 public:
  MotionTransform() = default;  // identity
  MotionTransform(const Eigen::Matrix2d& linear, const Eigen::Vector2d& translation);
  // Row-major [a11, a12, tx, a21, a22, ty].
  static MotionTransform from_coefficients(const std::array<double, 6>& c);
  // Least-squares fit to point correspondences (at least 3, not collinear).
  static MotionTransform fit(const std::vector<Eigen::Vector2d>& from,
                             const std::vector<Eigen::Vector2d>& to);

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return linear_ * p + translation_; }
  // Transforms both corners and re-sorts them so the result is well ordered.
  Box apply(const Box& b) const;
  MotionTransform inverse() const;

  const Eigen::Matrix2d& linear() const { return linear_; }
  const Eigen::Vector2d& translation() const { return translation_; }

 private:
  Eigen::Matrix2d linear_ = Eigen::Matrix2d::Identity();
  Eigen::Vector2d translation_ = Eigen::Vector2d::Zero();
};

struct TrackerConfig {
  double threshold_t = 100.0;  // px
  double alpha = 50.0;         // px per unit feature distance
  int max_life = 20;
  int min_track_len = 5;

  void validate() const;
};

struct TrackPoint {
  std::int64_t frame = 0;
  Box box;
  bool predicted = false;  // coasted on the motion model, no detection
  std::optional<int> face_id;
};

struct Trajectory {
  std::int64_t track_id = 0;
  Box last_box;
  std::vector<double> last_feature;
  int age = 0;
  int life = 0;
  std::vector<TrackPoint> history;
  std::optional<int> label;  // set by finalize()
};

double match_cost(const Trajectory& traj, const Detection& det, const MotionTransform& motion,
                  double alpha);

using CostMatrix = Eigen::MatrixXd;  // trajectories x detections

// Optimal matching for min sum (c_ij - t) x_ij, row/column sums <= 1.
// Every returned pair has c_ij < t. Pairs come back sorted by row.
std::vector<std::pair<int, int>> assign(const CostMatrix& costs, double threshold_t);

// Value of the objective for a given matching.
double assignment_objective(const CostMatrix& costs, double threshold_t,
                            const std::vector<std::pair<int, int>>& matches);

class Tracker {
 public:
  explicit Tracker(TrackerConfig config = {});

  // Advances to frame_index, which must be exactly one past the previous
  // call (any value for the first call). All detections must carry it.
  void step(std::int64_t frame_index, const std::vector<Detection>& detections,
            const MotionTransform& motion = {});

  // Live trajectories.
  const std::vector<Trajectory>& trajectories() const { return live_; }
  // Every trajectory created so far, including removed ones, in creation
  // order.
  std::vector<Trajectory> all_trajectories() const;
  const TrackerConfig& config() const { return config_; }
  std::optional<std::int64_t> last_frame() const { return last_frame_; }

 private:
  TrackerConfig config_;
  std::vector<Trajectory> live_;
  std::vector<Trajectory> retired_;
  std::int64_t next_id_ = 0;
  std::optional<std::int64_t> last_frame_;
};

struct FaceBox {
  std::int64_t frame = 0;
  Box box;
  int face_id = 0;
};

// Length counted by finalize(): history up to the last detected point.
std::size_t detected_length(const Trajectory& traj);

// Drops trajectories shorter than min_track_len (trailing coasted points are
// trimmed first), matches each detected head box to the face box of maximum
// positive IoU in its frame and labels the trajectory with the modal face ID
// (lowest ID on ties). Trajectories without any face match keep no label.
std::vector<Trajectory> finalize(const std::vector<Trajectory>& trajectories,
                                 const std::vector<FaceBox>& faces, const TrackerConfig& config);

// JSON-lines readers and the tracks JSON writer.
std::vector<Detection> parse_detections_jsonl(const std::string& text);
std::vector<FaceBox> parse_faces_jsonl(const std::string& text);
std::string format_tracks_json(const std::vector<Trajectory>& tracks);

}  // namespace cfocus
