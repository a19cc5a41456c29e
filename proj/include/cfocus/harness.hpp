// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command implementations behind the cfocus CLI: enhance, evaluate,
// simulate, track and ATF utilities. Each command reads its inputs fully,
// computes in memory and only then writes outputs (temp file + rename).

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfocus/atf.hpp"
#include "cfocus/audio_io.hpp"
#include "cfocus/beamformer.hpp"
#include "cfocus/metrics.hpp"
#include "cfocus/simscene.hpp"
#include "cfocus/steering.hpp"
#include "cfocus/tracker.hpp"
#include "json.hpp"

namespace cfocus {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path atf_path;
  fs::path input_path;
  fs::path output_path;
  fs::path poses_path;
  fs::path va_path;  // not used by enhance; kept so one config serves both
  std::optional<fs::path> report_path;
  std::string target_id;
  std::string wearer_id;
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  double loading = kDefaultLoading;
  std::size_t ref_channel = 0;
  double speed_of_sound = kSpeedOfSound;
  Eigen::Vector3d marker_offset = Eigen::Vector3d::Zero();
  bool flat_gain = false;
  bool bypass = false;         // output the reference channel through WOLA
  bool cache_weights = true;   // reuse weights while the ATF index is unchanged

  // Flat JSON object; unknown keys are rejected. Relative paths resolve
  // against base_dir.
  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {});
  nlohmann::json to_json() const;
};

struct EnhanceResult {
  Signal output;  // zero-padded to the input length
  std::vector<std::size_t> direction_indices;  // per frame
  std::size_t weight_solves = 0;
  double elapsed_s = 0.0;
  nlohmann::json report;
};

// In-memory pipeline: steer per frame at the frame center, compute
// max-DI weights for the selected ATF and filter with WOLA.
EnhanceResult run_enhance(const PipelineConfig& config, const Audio& input, const AtfSet& atf,
                          const PoseTracks& poses);
// File-level wrapper: loads inputs, runs, writes the output WAV and returns
// the run report.
nlohmann::json cmd_enhance(const PipelineConfig& config);

struct EvaluateConfig {
  fs::path enhanced_path;
  fs::path reference_path;
  std::size_t reference_channel = 0;
  fs::path mixture_path;
  std::size_t mixture_channel = 0;
  fs::path va_path;
  std::string target_id;
  std::string wearer_id;
  TestCase test_case = TestCase::kNoise;
  std::int64_t coarse_offset = 0;
  std::int64_t max_lag = 2400;
  double seg_frame_s = kSegSnrFrameSeconds;
  std::optional<fs::path> external_path;  // JSON object merged into "external"

  static EvaluateConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {});
};

struct MetricRow {
  std::optional<double> snr_db;
  std::optional<double> seg_snr_db;
  std::optional<double> si_sdr_db;
};

// Metrics of one degraded signal against an aligned reference over the
// selected segments. Undefined metrics are left empty.
MetricRow evaluate_row(const Signal& degraded, const Signal& reference, const VaSegments& segments,
                       double sample_rate, double seg_frame_s = kSegSnrFrameSeconds);

nlohmann::json evaluate_signals(const EvaluateConfig& config, const Signal& enhanced,
                                const Signal& reference, const Signal& mixture_ref,
                                double sample_rate, const VaTable& va,
                                const nlohmann::json& external = nlohmann::json::object());
nlohmann::json cmd_evaluate(const EvaluateConfig& config);

// Everything a manifest describes, rendered in memory.
struct SimulationOutput {
  SceneRender scene;
  AtfSet atf;
  PoseTracks poses;
  VaTable va;
  nlohmann::json manifest;  // echo with resolved defaults
};

SimulationOutput run_simulation(const nlohmann::json& manifest, const fs::path& base_dir = {},
                                std::optional<std::uint64_t> seed_override = std::nullopt);
// Writes mixture.wav, target.wav, noise.wav, [interferer.wav], poses.csv,
// va.json, atf.bin and manifest.json into out_dir.
nlohmann::json cmd_simulate(const fs::path& manifest_path, const fs::path& out_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

struct TrackInputs {
  std::vector<Detection> detections;
  std::vector<FaceBox> faces;
  std::map<std::int64_t, MotionTransform> motion;  // frame -> previous-to-current
};

// Motion JSON lines: {frame, affine:[a11,a12,tx,a21,a22,ty]} or
// {frame, src:[[x,y],...], dst:[[x,y],...]} fitted by least squares.
std::map<std::int64_t, MotionTransform> parse_motion_jsonl(const std::string& text);

std::vector<Trajectory> run_tracker(const TrackInputs& inputs, const TrackerConfig& config);
nlohmann::json cmd_track(const fs::path& detections_path, const std::optional<fs::path>& faces_path,
                         const std::optional<fs::path>& motion_path, const TrackerConfig& config);

nlohmann::json atf_info(const AtfSet& set);
nlohmann::json atf_to_json(const AtfSet& set);
AtfSet atf_from_json(const nlohmann::json& j);
// Converts between the binary format and the JSON representation, choosing
// the direction from the input's content.
void cmd_atf_convert(const fs::path& in, const fs::path& out);

ArrayGeometry geometry_from_json(const nlohmann::json& j);

}  // namespace cfocus
