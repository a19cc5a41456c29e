// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/tracker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cfocus/error.hpp"
#include "json.hpp"

namespace cfocus {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

// ---------------------------------------------------------------------------
// MotionTransform

MotionTransform::MotionTransform(const Eigen::Matrix2d& linear, const Eigen::Vector2d& translation)
    : linear_(linear), translation_(translation) {
  if (!(std::abs(linear_.determinant()) > 1e-9) || !linear_.allFinite() ||
      !translation_.allFinite())
    throw NumericalError("MotionTransform: transform is not invertible");
}

MotionTransform MotionTransform::from_coefficients(const std::array<double, 6>& c) {
  Eigen::Matrix2d a;
  a << c[0], c[1], c[3], c[4];
  return MotionTransform(a, Eigen::Vector2d(c[2], c[5]));
}

MotionTransform MotionTransform::fit(const std::vector<Eigen::Vector2d>& from,
                                     const std::vector<Eigen::Vector2d>& to) {
  if (from.size() != to.size() || from.size() < 3)
    throw DimensionError("MotionTransform::fit: need at least 3 matching point pairs");
  const auto n = static_cast<Eigen::Index>(from.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd b(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << from[static_cast<std::size_t>(i)].x(), from[static_cast<std::size_t>(i)].y(), 1.0;
    b.row(i) = to[static_cast<std::size_t>(i)].transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw NumericalError("MotionTransform::fit: degenerate (collinear) points");
  const Eigen::MatrixXd x = qr.solve(b);  // 3 x 2
  Eigen::Matrix2d lin;
  lin << x(0, 0), x(1, 0), x(0, 1), x(1, 1);
  return MotionTransform(lin, Eigen::Vector2d(x(2, 0), x(2, 1)));
}

Box MotionTransform::apply(const Box& b) const {
  const Eigen::Vector2d p = apply(Eigen::Vector2d(b.x1, b.y1));
  const Eigen::Vector2d q = apply(Eigen::Vector2d(b.x2, b.y2));
  return {std::min(p.x(), q.x()), std::min(p.y(), q.y()), std::max(p.x(), q.x()),
          std::max(p.y(), q.y())};
}

MotionTransform MotionTransform::inverse() const {
  const Eigen::Matrix2d inv = linear_.inverse();
  return MotionTransform(inv, -inv * translation_);
}

void TrackerConfig::validate() const {
  if (!(threshold_t > 0.0)) throw RangeError("TrackerConfig: threshold_t must be > 0");
  if (!(alpha >= 0.0)) throw RangeError("TrackerConfig: alpha must be >= 0");
  if (max_life < 1) throw RangeError("TrackerConfig: max_life must be >= 1");
  if (min_track_len < 1) throw RangeError("TrackerConfig: min_track_len must be >= 1");
}

// ---------------------------------------------------------------------------
// Costs and assignment

double match_cost(const Trajectory& traj, const Detection& det, const MotionTransform& motion,
                  double alpha) {
  if (traj.last_feature.size() != det.feature.size())
    throw DimensionError("match_cost: feature dimensions differ (" +
                         std::to_string(traj.last_feature.size()) + " vs " +
                         std::to_string(det.feature.size()) + ")");
  const Box moved = motion.apply(traj.last_box);
  const double dx1 = det.box.x1 - moved.x1, dy1 = det.box.y1 - moved.y1;
  const double dx2 = det.box.x2 - moved.x2, dy2 = det.box.y2 - moved.y2;
  const double position = std::sqrt(dx1 * dx1 + dy1 * dy1 + dx2 * dx2 + dy2 * dy2);
  double feat = 0.0;
  for (std::size_t k = 0; k < det.feature.size(); ++k) {
    const double d = det.feature[k] - traj.last_feature[k];
    feat += d * d;
  }
  return position + alpha * std::sqrt(feat);
}

namespace {

// Hungarian method (shortest augmenting paths with dual potentials) for a
// rows <= cols cost matrix; returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<std::pair<int, int>> assign(const CostMatrix& costs, double threshold_t) {
  std::vector<std::pair<int, int>> out;
  if (costs.rows() == 0 || costs.cols() == 0) return out;
  if (!costs.allFinite()) throw NumericalError("assign: non-finite cost");
  // Pairs at or above the threshold carry weight 0, the same as leaving both
  // ends unmatched, so a complete assignment of the shorter side is optimal
  // for the original problem once those pairs are dropped.
  const Eigen::MatrixXd reduced = (costs.array() - threshold_t).min(0.0).matrix();
  const bool transpose = costs.rows() > costs.cols();
  const std::vector<int> assignment = hungarian(transpose ? Eigen::MatrixXd(reduced.transpose())
                                                          : reduced);
  for (int r = 0; r < static_cast<int>(assignment.size()); ++r) {
    const int c = assignment[static_cast<std::size_t>(r)];
    if (c < 0) continue;
    const int i = transpose ? c : r;
    const int j = transpose ? r : c;
    if (costs(i, j) < threshold_t) out.emplace_back(i, j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double assignment_objective(const CostMatrix& costs, double threshold_t,
                            const std::vector<std::pair<int, int>>& matches) {
  double obj = 0.0;
  for (const auto& [i, j] : matches) obj += costs(i, j) - threshold_t;
  return obj;
}

// ---------------------------------------------------------------------------
// Tracker

Tracker::Tracker(TrackerConfig config) : config_(config) { config_.validate(); }

void Tracker::step(std::int64_t frame_index, const std::vector<Detection>& detections,
                   const MotionTransform& motion) {
  if (last_frame_ && frame_index != *last_frame_ + 1)
    throw RangeError("Tracker::step: frame " + std::to_string(frame_index) +
                     " does not follow frame " + std::to_string(*last_frame_));
  for (const auto& d : detections) {
    if (d.frame != frame_index)
      throw RangeError("Tracker::step: detection from frame " + std::to_string(d.frame) +
                       " passed at frame " + std::to_string(frame_index));
    if (!d.box.valid()) throw RangeError("Tracker::step: detection box is not well ordered");
  }
  last_frame_ = frame_index;

  CostMatrix costs(static_cast<Eigen::Index>(live_.size()),
                   static_cast<Eigen::Index>(detections.size()));
  for (std::size_t i = 0; i < live_.size(); ++i)
    for (std::size_t j = 0; j < detections.size(); ++j)
      costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          match_cost(live_[i], detections[j], motion, config_.alpha);
  const auto matches = assign(costs, config_.threshold_t);

  std::vector<int> det_for_traj(live_.size(), -1);
  std::vector<char> det_used(detections.size(), 0);
  for (const auto& [i, j] : matches) {
    det_for_traj[static_cast<std::size_t>(i)] = j;
    det_used[static_cast<std::size_t>(j)] = 1;
  }

  std::vector<Trajectory> next;
  next.reserve(live_.size() + detections.size());
  for (std::size_t i = 0; i < live_.size(); ++i) {
    Trajectory& tr = live_[i];
    const int j = det_for_traj[i];
    if (j >= 0) {
      const Detection& d = detections[static_cast<std::size_t>(j)];
      tr.last_box = d.box;
      tr.last_feature = d.feature;
      tr.history.push_back({frame_index, d.box, false, std::nullopt});
      tr.age += 1;
      tr.life = config_.max_life;
      next.push_back(std::move(tr));
    } else if (tr.life > 0) {
      tr.last_box = motion.apply(tr.last_box);
      tr.history.push_back({frame_index, tr.last_box, true, std::nullopt});
      tr.age += 1;
      tr.life -= 1;
      next.push_back(std::move(tr));
    } else {
      // Decrementing would take life below zero.
      retired_.push_back(std::move(tr));
    }
  }
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (det_used[j]) continue;
    Trajectory tr;
    tr.track_id = next_id_++;
    tr.last_box = detections[j].box;
    tr.last_feature = detections[j].feature;
    tr.age = 1;
    tr.life = config_.max_life;
    tr.history.push_back({frame_index, detections[j].box, false, std::nullopt});
    next.push_back(std::move(tr));
  }
  live_ = std::move(next);
}

std::vector<Trajectory> Tracker::all_trajectories() const {
  std::vector<Trajectory> all = retired_;
  all.insert(all.end(), live_.begin(), live_.end());
  std::sort(all.begin(), all.end(),
            [](const Trajectory& a, const Trajectory& b) { return a.track_id < b.track_id; });
  return all;
}

// ---------------------------------------------------------------------------
// Finalization

std::size_t detected_length(const Trajectory& traj) {
  std::size_t n = traj.history.size();
  while (n > 0 && traj.history[n - 1].predicted) --n;
  return n;
}

std::vector<Trajectory> finalize(const std::vector<Trajectory>& trajectories,
                                 const std::vector<FaceBox>& faces, const TrackerConfig& config) {
  std::map<std::int64_t, std::vector<const FaceBox*>> by_frame;
  for (const auto& f : faces) by_frame[f.frame].push_back(&f);

  std::vector<Trajectory> out;
  for (const auto& src : trajectories) {
    const std::size_t len = detected_length(src);
    if (len < static_cast<std::size_t>(config.min_track_len)) continue;
    Trajectory tr = src;
    tr.history.resize(len);
    std::map<int, int> votes;
    for (auto& pt : tr.history) {
      pt.face_id.reset();
      if (pt.predicted) continue;
      auto it = by_frame.find(pt.frame);
      if (it == by_frame.end()) continue;
      double best = 0.0;
      std::optional<int> best_id;
      for (const FaceBox* f : it->second) {
        const double v = iou(pt.box, f->box);
        if (v <= 0.0) continue;
        if (v > best || (v == best && f->face_id < *best_id)) {
          best = v;
          best_id = f->face_id;
        }
      }
      if (best_id) {
        pt.face_id = best_id;
        ++votes[*best_id];
      }
    }
    tr.label.reset();
    int best_count = 0;
    for (const auto& [id, count] : votes)  // ascending id: ties keep the lowest
      if (count > best_count) {
        best_count = count;
        tr.label = id;
      }
    out.push_back(std::move(tr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// I/O

namespace {

template <typename Fn>
void for_each_json_line(const std::string& text, const char* what, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw LoadError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw LoadError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

Box read_box(const json& j) {
  Box b{j.at("x1").get<double>(), j.at("y1").get<double>(), j.at("x2").get<double>(),
        j.at("y2").get<double>()};
  if (!b.valid()) throw RangeError("box is not well ordered (x1<x2, y1<y2)");
  return b;
}

}  // namespace

std::vector<Detection> parse_detections_jsonl(const std::string& text) {
  std::vector<Detection> out;
  for_each_json_line(text, "detections", [&](const json& j) {
    Detection d;
    d.frame = j.at("frame").get<std::int64_t>();
    d.box = read_box(j);
    if (j.contains("feature")) d.feature = j.at("feature").get<std::vector<double>>();
    for (double v : d.feature)
      if (!std::isfinite(v)) throw NumericalError("non-finite feature value");
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<FaceBox> parse_faces_jsonl(const std::string& text) {
  std::vector<FaceBox> out;
  for_each_json_line(text, "faces", [&](const json& j) {
    FaceBox f;
    f.frame = j.at("frame").get<std::int64_t>();
    f.box = read_box(j);
    f.face_id = j.at("face_id").get<int>();
    out.push_back(f);
  });
  return out;
}

std::string format_tracks_json(const std::vector<Trajectory>& tracks) {
  json doc = json::array();
  for (const auto& tr : tracks) {
    json frames = json::array();
    for (const auto& pt : tr.history)
      frames.push_back({{"frame", pt.frame},
                        {"box", {pt.box.x1, pt.box.y1, pt.box.x2, pt.box.y2}},
                        {"predicted", pt.predicted}});
    doc.push_back({{"track_id", tr.track_id},
                   {"face_id", tr.label ? json(*tr.label) : json(nullptr)},
                   {"frames", std::move(frames)}});
  }
  return doc.dump(2);
}

}  // namespace cfocus
