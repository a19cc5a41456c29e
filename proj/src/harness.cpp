// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "cfocus/error.hpp"
#include "cfocus/wola.hpp"

namespace cfocus {

using nlohmann::json;

namespace {

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(std::string(what) + ": cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(what + ": malformed JSON: " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw LoadError(what + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw LoadError(what + ": unknown field '" + key + "'");
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(what + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// enhance

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
  static const std::set<std::string> kKnown = {
      "atf_path", "input_path", "output_path", "poses_path", "va_path", "report_path",
      "target_id", "wearer_id", "frame_len", "hop", "loading", "ref_channel",
      "speed_of_sound", "marker_offset", "flat_gain", "bypass", "cache_weights"};
  const std::string what = "pipeline config";
  reject_unknown(j, kKnown, what);
  PipelineConfig c;
  auto path = [&](const char* key, fs::path& dst) {
    if (j.contains(key)) dst = resolve(base, get_field<std::string>(j, key, what));
  };
  path("atf_path", c.atf_path);
  path("input_path", c.input_path);
  path("output_path", c.output_path);
  path("poses_path", c.poses_path);
  path("va_path", c.va_path);
  if (j.contains("report_path")) c.report_path = resolve(base, get_field<std::string>(j, "report_path", what));
  if (j.contains("target_id")) c.target_id = get_field<std::string>(j, "target_id", what);
  if (j.contains("wearer_id")) c.wearer_id = get_field<std::string>(j, "wearer_id", what);
  if (j.contains("frame_len")) c.frame_len = get_field<std::size_t>(j, "frame_len", what);
  if (j.contains("hop")) c.hop = get_field<std::size_t>(j, "hop", what);
  if (j.contains("loading")) c.loading = get_field<double>(j, "loading", what);
  if (j.contains("ref_channel")) c.ref_channel = get_field<std::size_t>(j, "ref_channel", what);
  if (j.contains("speed_of_sound")) c.speed_of_sound = get_field<double>(j, "speed_of_sound", what);
  if (j.contains("marker_offset")) {
    const auto v = get_field<std::vector<double>>(j, "marker_offset", what);
    if (v.size() != 3) throw LoadError(what + ": marker_offset must have 3 elements");
    c.marker_offset = {v[0], v[1], v[2]};
  }
  if (j.contains("flat_gain")) c.flat_gain = get_field<bool>(j, "flat_gain", what);
  if (j.contains("bypass")) c.bypass = get_field<bool>(j, "bypass", what);
  if (j.contains("cache_weights")) c.cache_weights = get_field<bool>(j, "cache_weights", what);
  return c;
}

json PipelineConfig::to_json() const {
  json j = {{"atf_path", atf_path.string()},
            {"input_path", input_path.string()},
            {"output_path", output_path.string()},
            {"poses_path", poses_path.string()},
            {"target_id", target_id},
            {"wearer_id", wearer_id},
            {"frame_len", frame_len},
            {"hop", hop},
            {"loading", loading},
            {"ref_channel", ref_channel},
            {"speed_of_sound", speed_of_sound},
            {"marker_offset", {marker_offset.x(), marker_offset.y(), marker_offset.z()}},
            {"flat_gain", flat_gain},
            {"bypass", bypass},
            {"cache_weights", cache_weights}};
  if (!va_path.empty()) j["va_path"] = va_path.string();
  if (report_path) j["report_path"] = report_path->string();
  return j;
}

EnhanceResult run_enhance(const PipelineConfig& config, const Audio& input, const AtfSet& atf,
                          const PoseTracks& poses) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(config.loading >= 0.0)) throw RangeError("enhance: loading must be >= 0");
  if (input.n_channels() != atf.n_channels())
    throw DimensionError("enhance: input has " + std::to_string(input.n_channels()) +
                         " channels but the ATF set has " + std::to_string(atf.n_channels()));
  if (input.sample_rate != atf.sample_rate())
    throw DimensionError("enhance: input sample rate " + std::to_string(input.sample_rate) +
                         " Hz differs from ATF sample rate " + std::to_string(atf.sample_rate()));
  const StftConfig stft = StftConfig::sqrt_hann(config.frame_len, config.hop, input.sample_rate);
  if (stft.n_bins() != atf.n_bins())
    throw DimensionError("enhance: frame_len " + std::to_string(config.frame_len) + " gives " +
                         std::to_string(stft.n_bins()) + " bins but the ATF set has " +
                         std::to_string(atf.n_bins()));
  if (config.ref_channel >= atf.n_channels())
    throw RangeError("enhance: ref_channel out of range");

  EnhanceResult result;
  BeamformerWeights current;
  std::map<std::size_t, BeamformerWeights> cache;
  const std::size_t n_frames = stft.frame_count(input.n_samples());
  result.direction_indices.reserve(n_frames);

  WeightProvider provider;
  IsotropicCovariance cov;
  if (config.bypass) {
    current.weights.assign(atf.n_bins(), Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(atf.n_channels())));
    for (auto& w : current.weights) w(static_cast<Eigen::Index>(config.ref_channel)) = 1.0;
    provider = [&](std::size_t, double) -> const BeamformerWeights& { return current; };
  } else {
    auto wearer = poses.find(config.wearer_id);
    auto target = poses.find(config.target_id);
    if (wearer == poses.end())
      throw LoadError("enhance: wearer '" + config.wearer_id + "' not in pose file");
    if (target == poses.end())
      throw LoadError("enhance: target '" + config.target_id + "' not in pose file");
    if (n_frames > 0) {
      const double first = stft.frame_center_time(0);
      for (const PoseTrack* tr : {&wearer->second, &target->second})
        if (tr->samples.empty() || tr->samples.front().time > first)
          throw RangeError("enhance: no pose for '" + tr->participant_id +
                           "' before the first frame center (" + std::to_string(first) + " s)");
    }
    cov = isotropic_covariance(atf);
    const GainMode mode = config.flat_gain ? GainMode::kFlat : GainMode::kReferenceChannel;
    auto solve = [&](std::size_t index) {
      ++result.weight_solves;
      return max_di_weights(cov, make_target(atf, index, config.ref_channel, mode), config.loading);
    };
    provider = [&, wearer, target, solve](std::size_t t, double) -> const BeamformerWeights& {
      const double center = stft.frame_center_time(t);
      const Pose& w = pose_at(wearer->second, center);
      const Pose& p = pose_at(target->second, center);
      const std::size_t index = steer(atf, w, p.position, config.marker_offset);
      result.direction_indices.push_back(index);
      if (!config.cache_weights) {
        current = solve(index);
        return current;
      }
      auto it = cache.find(index);
      if (it == cache.end()) it = cache.emplace(index, solve(index)).first;
      return it->second;
    };
  }

  result.output = process_stream(input.channels, stft, provider);
  result.output.resize(input.n_samples(), 0.0);
  result.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double audio_s = static_cast<double>(input.n_samples()) / input.sample_rate;
  json& r = result.report;
  r["command"] = "enhance";
  r["frames"] = n_frames;
  r["direction_indices"] = result.direction_indices;
  r["unique_directions"] = std::set<std::size_t>(result.direction_indices.begin(),
                                                 result.direction_indices.end()).size();
  r["weight_solves"] = result.weight_solves;
  r["elapsed_s"] = result.elapsed_s;
  r["audio_s"] = audio_s;
  r["realtime_factor"] = result.elapsed_s > 0.0 ? audio_s / result.elapsed_s : 0.0;
  r["config"] = config.to_json();
  return result;
}

json cmd_enhance(const PipelineConfig& config) {
  if (config.output_path.empty()) throw LoadError("enhance: no output path given");
  const AtfSet atf = load_atf_set(config.atf_path);
  const Audio input = read_wav(config.input_path);
  PoseTracks poses;
  if (!config.bypass) {
    if (config.poses_path.empty() || !fs::exists(config.poses_path))
      throw LoadError("enhance: pose file not found: '" + config.poses_path.string() + "'");
    poses = load_pose_file(config.poses_path);
  }
  EnhanceResult result = run_enhance(config, input, atf, poses);
  write_wav(config.output_path, Audio{input.sample_rate, {std::move(result.output)}});
  if (config.report_path) write_file_atomic(*config.report_path, result.report.dump(2) + "\n");
  return result.report;
}

// ---------------------------------------------------------------------------
// evaluate

EvaluateConfig EvaluateConfig::from_json(const json& j, const fs::path& base) {
  static const std::set<std::string> kKnown = {
      "enhanced_path", "reference_path", "reference_channel", "mixture_path", "mixture_channel",
      "va_path", "target_id", "wearer_id", "test_case", "coarse_offset", "max_lag",
      "seg_frame_s", "external_path",
      // Shared pipeline keys tolerated so one config file can drive both.
      "atf_path", "input_path", "output_path", "poses_path", "report_path", "frame_len", "hop",
      "loading", "ref_channel", "speed_of_sound", "marker_offset", "flat_gain", "bypass",
      "cache_weights"};
  const std::string what = "evaluate config";
  reject_unknown(j, kKnown, what);
  EvaluateConfig c;
  auto path = [&](const char* key, fs::path& dst) {
    if (j.contains(key)) dst = resolve(base, get_field<std::string>(j, key, what));
  };
  path("enhanced_path", c.enhanced_path);
  path("reference_path", c.reference_path);
  path("mixture_path", c.mixture_path);
  path("va_path", c.va_path);
  if (j.contains("output_path") && c.enhanced_path.empty()) path("output_path", c.enhanced_path);
  if (j.contains("input_path") && c.mixture_path.empty()) path("input_path", c.mixture_path);
  if (j.contains("ref_channel")) c.mixture_channel = get_field<std::size_t>(j, "ref_channel", what);
  if (j.contains("reference_channel")) c.reference_channel = get_field<std::size_t>(j, "reference_channel", what);
  if (j.contains("mixture_channel")) c.mixture_channel = get_field<std::size_t>(j, "mixture_channel", what);
  if (j.contains("target_id")) c.target_id = get_field<std::string>(j, "target_id", what);
  if (j.contains("wearer_id")) c.wearer_id = get_field<std::string>(j, "wearer_id", what);
  if (j.contains("test_case")) c.test_case = test_case_from_string(get_field<std::string>(j, "test_case", what));
  if (j.contains("coarse_offset")) c.coarse_offset = get_field<std::int64_t>(j, "coarse_offset", what);
  if (j.contains("max_lag")) c.max_lag = get_field<std::int64_t>(j, "max_lag", what);
  if (j.contains("seg_frame_s")) c.seg_frame_s = get_field<double>(j, "seg_frame_s", what);
  if (j.contains("external_path")) c.external_path = resolve(base, get_field<std::string>(j, "external_path", what));
  return c;
}

MetricRow evaluate_row(const Signal& degraded, const Signal& reference, const VaSegments& segments,
                       double sample_rate, double seg_frame_s) {
  if (degraded.size() != reference.size())
    throw DimensionError("evaluate: degraded and reference lengths differ");
  MetricRow row;
  Signal residual(degraded.size());
  for (std::size_t i = 0; i < degraded.size(); ++i) residual[i] = degraded[i] - reference[i];
  const Signal s = gather_segments(reference, segments, sample_rate);
  const Signal y = gather_segments(degraded, segments, sample_rate);
  const Signal r = gather_segments(residual, segments, sample_rate);
  if (s.empty()) return row;
  row.snr_db = snr_db(s, r);
  try {
    row.seg_snr_db = seg_snr_db(reference, residual, segments, sample_rate, seg_frame_s);
  } catch (const UndefinedMetricError&) {
  }
  try {
    row.si_sdr_db = si_sdr_db(y, s);
  } catch (const UndefinedMetricError&) {
  }
  return row;
}

namespace {
json row_json(const MetricRow& row) {
  auto v = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  return {{"snr_db", v(row.snr_db)}, {"seg_snr_db", v(row.seg_snr_db)}, {"si_sdr_db", v(row.si_sdr_db)}};
}
}  // namespace

json evaluate_signals(const EvaluateConfig& config, const Signal& enhanced_in,
                      const Signal& reference, const Signal& mixture_ref, double sample_rate,
                      const VaTable& va, const json& external) {
  std::int64_t shift = 0;
  const Signal aligned =
      align_to_reference(reference, mixture_ref, config.coarse_offset, config.max_lag, &shift);
  Signal enhanced = enhanced_in;
  enhanced.resize(mixture_ref.size(), 0.0);
  const VaSegments segments = select_segments(va, config.target_id, config.wearer_id, config.test_case);

  const MetricRow baseline = evaluate_row(enhanced, aligned, segments, sample_rate, config.seg_frame_s);
  const MetricRow ref_mic = evaluate_row(mixture_ref, aligned, segments, sample_rate, config.seg_frame_s);

  json report = row_json(baseline);
  report["test_case"] = to_string(config.test_case);
  report["target_id"] = config.target_id;
  report["wearer_id"] = config.wearer_id;
  report["reference_mic"] = row_json(ref_mic);
  report["external"] = external;
  report["selected_seconds"] = segments.total_duration();
  report["reference_shift_samples"] = shift;
  report["metric_cap_db"] = kMetricCapDb;
  report["status"] = segments.segments.empty() || !baseline.snr_db ? "undefined_metric" : "ok";
  return report;
}

json cmd_evaluate(const EvaluateConfig& config) {
  const Audio enhanced = read_wav(config.enhanced_path);
  const Audio reference = read_wav(config.reference_path);
  const Audio mixture = read_wav(config.mixture_path);
  if (enhanced.sample_rate != reference.sample_rate || enhanced.sample_rate != mixture.sample_rate)
    throw DimensionError("evaluate: sample rates differ between inputs");
  if (config.reference_channel >= reference.n_channels())
    throw RangeError("evaluate: reference_channel out of range");
  if (config.mixture_channel >= mixture.n_channels())
    throw RangeError("evaluate: mixture_channel out of range");
  if (enhanced.n_channels() < 1) throw DimensionError("evaluate: enhanced file has no channels");
  const VaTable va = load_va_file(config.va_path);
  json external = json::object();
  if (config.external_path) {
    external = parse_json_text(read_text(*config.external_path, "external scores"), "external scores");
    if (!external.is_object()) throw LoadError("external scores: expected a JSON object");
  }
  return evaluate_signals(config, enhanced.channels[0], reference.channels[config.reference_channel],
                          mixture.channels[config.mixture_channel], enhanced.sample_rate, va,
                          external);
}

// ---------------------------------------------------------------------------
// simulate

ArrayGeometry geometry_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "glasses6") return ArrayGeometry::glasses6();
    throw LoadError("manifest: unknown geometry preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_array()) throw LoadError("manifest: geometry must be a preset name or [[x,y,z],...]");
  ArrayGeometry g;
  for (const auto& p : j) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 3) throw LoadError("manifest: geometry entries must have 3 coordinates");
    g.mic_positions.emplace_back(v[0], v[1], v[2]);
  }
  g.validate();
  return g;
}

namespace {

struct Keyframe {
  double time = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

std::vector<Keyframe> parse_keyframes(const json& participant, const std::string& what) {
  std::vector<Keyframe> out;
  if (!participant.contains("keyframes")) {
    out.push_back({});
    return out;
  }
  for (const auto& k : participant.at("keyframes")) {
    reject_unknown(k, {"time_s", "position", "yaw_deg", "quaternion"}, what + " keyframe");
    Keyframe kf;
    kf.time = k.value("time_s", 0.0);
    if (k.contains("position")) {
      const auto v = k.at("position").get<std::vector<double>>();
      if (v.size() != 3) throw LoadError(what + ": position must have 3 elements");
      kf.position = {v[0], v[1], v[2]};
    }
    if (k.contains("yaw_deg"))
      kf.orientation = Eigen::AngleAxisd(k.at("yaw_deg").get<double>() * std::numbers::pi / 180.0,
                                         Eigen::Vector3d::UnitZ());
    if (k.contains("quaternion")) {
      const auto q = k.at("quaternion").get<std::vector<double>>();
      if (q.size() != 4) throw LoadError(what + ": quaternion must be [w,x,y,z]");
      kf.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
    }
    if (!out.empty() && !(kf.time > out.back().time))
      throw LoadError(what + ": keyframe times must increase");
    out.push_back(kf);
  }
  if (out.empty()) throw LoadError(what + ": empty keyframes");
  if (out.front().time > 0.0) throw LoadError(what + ": first keyframe must be at time_s <= 0");
  return out;
}

PoseTrack sample_track(const std::string& id, const std::vector<Keyframe>& keys, double duration,
                       double rate) {
  PoseTrack tr;
  tr.participant_id = id;
  const auto n = static_cast<std::size_t>(std::ceil(duration * rate)) + 1;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    while (cursor + 1 < keys.size() && keys[cursor + 1].time <= t) ++cursor;
    tr.samples.push_back({t, keys[cursor].position, keys[cursor].orientation});
  }
  return tr;
}

struct SourceOut {
  Signal samples;
  VaSegments activity;
  json echo;
};

SourceOut make_source(const json& participant, const std::string& id, double duration, double fs,
                      std::uint64_t default_seed, const fs::path& base) {
  const std::string what = "manifest source of '" + id + "'";
  const json src = participant.value("source", json{{"type", "speech_like"}});
  SourceOut out;
  const std::string type = src.value("type", "speech_like");
  if (type == "speech_like") {
    reject_unknown(src, {"type", "seed", "gated"}, what);
    const std::uint64_t seed = src.value("seed", default_seed);
    const bool gated = src.value("gated", true);
    SpeechLike s = speech_like_source(duration, fs, seed, id, gated);
    out.samples = std::move(s.samples);
    out.activity = std::move(s.activity);
    out.echo = {{"type", type}, {"seed", seed}, {"gated", gated}};
  } else if (type == "wav") {
    reject_unknown(src, {"type", "path", "channel", "va"}, what);
    const fs::path path = resolve(base, get_field<std::string>(src, "path", what));
    const Audio a = read_wav(path);
    if (a.sample_rate != fs) throw LoadError(what + ": sample rate differs from manifest");
    const std::size_t ch = src.value("channel", std::size_t{0});
    if (ch >= a.n_channels()) throw LoadError(what + ": channel out of range");
    out.samples = a.channels[ch];
    out.samples.resize(static_cast<std::size_t>(std::llround(duration * fs)), 0.0);
    out.activity.participant_id = id;
    if (src.contains("va")) {
      for (const auto& iv : src.at("va")) {
        const auto v = iv.get<std::vector<double>>();
        if (v.size() != 2 || !(v[0] < v[1])) throw LoadError(what + ": va entries are [start, end]");
        out.activity.segments.push_back({v[0], v[1]});
      }
      out.activity.normalize();
    } else {
      out.activity.segments.push_back({0.0, duration});
    }
    out.echo = src;
  } else {
    throw LoadError(what + ": unknown source type '" + type + "'");
  }
  return out;
}

}  // namespace

SimulationOutput run_simulation(const json& manifest, const fs::path& base,
                                std::optional<std::uint64_t> seed_override) {
  static const std::set<std::string> kKnown = {
      "sample_rate", "duration_s", "seed", "snr_db", "n_plane_waves", "frame_len", "hop",
      "speed_of_sound", "pose_rate_hz", "atf_directions", "geometry", "wearer", "target",
      "interferer", "interferer_gain_db"};
  reject_unknown(manifest, kKnown, "manifest");
  if (!manifest.contains("target")) throw LoadError("manifest: missing 'target'");
  const double fs_hz = manifest.value("sample_rate", 48000.0);
  const double duration = manifest.value("duration_s", 10.0);
  const std::uint64_t seed = seed_override ? *seed_override : manifest.value("seed", std::uint64_t{0});
  const double pose_rate = manifest.value("pose_rate_hz", 20.0);
  if (!(fs_hz > 0.0) || !(duration > 0.0) || !(pose_rate > 0.0))
    throw LoadError("manifest: sample_rate, duration_s and pose_rate_hz must be positive");

  SceneSpec spec;
  spec.sample_rate = fs_hz;
  spec.snr_db = manifest.value("snr_db", 0.0);
  spec.n_plane_waves = manifest.value("n_plane_waves", std::size_t{512});
  spec.seed = seed;
  spec.options.frame_len = manifest.value("frame_len", std::size_t{1024});
  spec.options.hop = manifest.value("hop", std::size_t{512});
  spec.options.speed_of_sound = manifest.value("speed_of_sound", kSpeedOfSound);
  spec.interferer_gain_db = manifest.value("interferer_gain_db", 0.0);
  spec.geometry = geometry_from_json(manifest.value("geometry", json("glasses6")));
  const std::size_t atf_dirs = manifest.value("atf_directions", std::size_t{2562});

  SimulationOutput out;
  const json wearer_j = manifest.value("wearer", json::object());
  reject_unknown(wearer_j, {"id", "keyframes"}, "manifest wearer");
  const std::string wearer_id = wearer_j.value("id", "wearer");
  const PoseTrack wearer = sample_track(wearer_id, parse_keyframes(wearer_j, "wearer"), duration, pose_rate);
  out.poses[wearer_id] = wearer;

  auto participant = [&](const json& p, const std::string& role, std::uint64_t seed_offset,
                         Signal& samples, DirectionTrack& track) {
    reject_unknown(p, {"id", "source", "keyframes"}, "manifest " + role);
    const std::string id = p.value("id", role);
    if (id == wearer_id) throw LoadError("manifest: " + role + " id equals the wearer id");
    const PoseTrack tr = sample_track(id, parse_keyframes(p, role), duration, pose_rate);
    SourceOut src = make_source(p, id, duration, fs_hz, seed + seed_offset, base);
    for (std::size_t i = 0; i < tr.samples.size(); ++i)
      track.emplace_back(tr.samples[i].time,
                         relative_direction(wearer.samples[i], tr.samples[i].position));
    samples = std::move(src.samples);
    out.va[id] = std::move(src.activity);
    out.poses[id] = tr;
    json echo = p;
    echo["id"] = id;
    echo["source"] = src.echo;
    return echo;
  };

  json echo = manifest;
  echo["seed"] = seed;
  echo["sample_rate"] = fs_hz;
  echo["duration_s"] = duration;
  echo["snr_db"] = spec.snr_db;
  echo["n_plane_waves"] = spec.n_plane_waves;
  echo["frame_len"] = spec.options.frame_len;
  echo["hop"] = spec.options.hop;
  echo["speed_of_sound"] = spec.options.speed_of_sound;
  echo["pose_rate_hz"] = pose_rate;
  echo["atf_directions"] = atf_dirs;
  echo["wearer"] = {{"id", wearer_id}};
  if (wearer_j.contains("keyframes")) echo["wearer"]["keyframes"] = wearer_j["keyframes"];
  echo["target"] = participant(manifest.at("target"), "target", 1, spec.target, spec.target_track);
  if (manifest.contains("interferer") && !manifest.at("interferer").is_null()) {
    spec.interferer.emplace();
    echo["interferer"] =
        participant(manifest.at("interferer"), "interferer", 2, *spec.interferer, spec.interferer_track);
    echo["interferer_gain_db"] = spec.interferer_gain_db;
  }

  out.scene = build_scene(spec);
  out.atf = free_field_atf_set(spec.geometry, atf_dirs, spec.options.frame_len / 2 + 1, fs_hz,
                               spec.options.speed_of_sound);
  out.manifest = std::move(echo);
  return out;
}

json cmd_simulate(const fs::path& manifest_path, const fs::path& out_dir,
                  std::optional<std::uint64_t> seed_override) {
  const json manifest = parse_json_text(read_text(manifest_path, "manifest"), "manifest");
  SimulationOutput sim = run_simulation(manifest, manifest_path.parent_path(), seed_override);
  fs::create_directories(out_dir);
  const double fs_hz = sim.scene.sample_rate;
  json files = json::array();
  auto wav = [&](const std::string& name, const Multichannel& x) {
    write_wav(out_dir / name, Audio{fs_hz, x});
    files.push_back(name);
  };
  wav("mixture.wav", sim.scene.mixture);
  for (const auto& [name, stem] : sim.scene.stems) wav(name + ".wav", stem);
  write_file_atomic(out_dir / "poses.csv", format_pose_csv(sim.poses));
  write_file_atomic(out_dir / "va.json", format_va_json(sim.va) + "\n");
  write_file_atomic(out_dir / "atf.bin", serialize_atf_set(sim.atf));
  write_file_atomic(out_dir / "manifest.json", sim.manifest.dump(2) + "\n");
  for (const char* f : {"poses.csv", "va.json", "atf.bin", "manifest.json"}) files.push_back(f);
  return {{"command", "simulate"},
          {"out_dir", out_dir.string()},
          {"files", files},
          {"samples", sim.scene.mixture.empty() ? 0 : sim.scene.mixture[0].size()},
          {"manifest", sim.manifest}};
}

// ---------------------------------------------------------------------------
// track

std::map<std::int64_t, MotionTransform> parse_motion_jsonl(const std::string& text) {
  std::map<std::int64_t, MotionTransform> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto frame = j.at("frame").get<std::int64_t>();
      if (j.contains("affine")) {
        const auto c = j.at("affine").get<std::vector<double>>();
        if (c.size() != 6) throw LoadError("affine needs 6 coefficients");
        out[frame] = MotionTransform::from_coefficients({c[0], c[1], c[2], c[3], c[4], c[5]});
      } else {
        std::vector<Eigen::Vector2d> src, dst;
        for (const auto& p : j.at("src")) src.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        for (const auto& p : j.at("dst")) dst.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        out[frame] = MotionTransform::fit(src, dst);
      }
    } catch (const json::exception& e) {
      throw LoadError("motion line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw LoadError("motion line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Trajectory> run_tracker(const TrackInputs& inputs, const TrackerConfig& config) {
  Tracker tracker(config);
  if (inputs.detections.empty()) return {};
  std::map<std::int64_t, std::vector<Detection>> by_frame;
  for (const auto& d : inputs.detections) by_frame[d.frame].push_back(d);
  const std::int64_t first = by_frame.begin()->first;
  const std::int64_t last = by_frame.rbegin()->first;
  static const std::vector<Detection> kNone;
  for (std::int64_t f = first; f <= last; ++f) {
    auto it = by_frame.find(f);
    auto m = inputs.motion.find(f);
    tracker.step(f, it == by_frame.end() ? kNone : it->second,
                 m == inputs.motion.end() ? MotionTransform{} : m->second);
  }
  return finalize(tracker.all_trajectories(), inputs.faces, config);
}

json cmd_track(const fs::path& detections_path, const std::optional<fs::path>& faces_path,
               const std::optional<fs::path>& motion_path, const TrackerConfig& config) {
  TrackInputs in;
  in.detections = parse_detections_jsonl(read_text(detections_path, "detections"));
  if (faces_path) in.faces = parse_faces_jsonl(read_text(*faces_path, "faces"));
  if (motion_path) in.motion = parse_motion_jsonl(read_text(*motion_path, "motion"));
  return json::parse(format_tracks_json(run_tracker(in, config)));
}

// ---------------------------------------------------------------------------
// atf

json atf_info(const AtfSet& set) {
  double min_incl = 1e9, max_incl = -1e9;
  for (const auto& d : set.directions()) {
    min_incl = std::min(min_incl, d.inclination_rad);
    max_incl = std::max(max_incl, d.inclination_rad);
  }
  // Worst-case distance from a direction to its nearest neighbor.
  double worst_spacing = 0.0;
  if (set.n_directions() <= 5000) {
    for (std::size_t i = 0; i < set.n_directions(); ++i) {
      double nearest = std::numbers::pi;
      for (std::size_t j = 0; j < set.n_directions(); ++j)
        if (i != j) nearest = std::min(nearest, angular_distance(set.directions()[i], set.directions()[j]));
      worst_spacing = std::max(worst_spacing, nearest);
    }
  }
  return {{"n_channels", set.n_channels()},
          {"sample_rate", set.sample_rate()},
          {"n_bins", set.n_bins()},
          {"fft_size", set.fft_size()},
          {"n_directions", set.n_directions()},
          {"inclination_range_rad", {min_incl, max_incl}},
          {"max_neighbor_spacing_deg", worst_spacing * 180.0 / std::numbers::pi}};
}

json atf_to_json(const AtfSet& set) {
  json j = json::parse(serialize_atf_set(set).substr(0, serialize_atf_set(set).find('\0')));
  json responses = json::array();
  for (std::size_t d = 0; d < set.n_directions(); ++d) {
    json dir = json::array();
    for (std::size_t b = 0; b < set.n_bins(); ++b) {
      json bin = json::array();
      for (std::size_t c = 0; c < set.n_channels(); ++c) {
        const cplx v = set.at(d, b, c);
        bin.push_back({static_cast<float>(v.real()), static_cast<float>(v.imag())});
      }
      dir.push_back(std::move(bin));
    }
    responses.push_back(std::move(dir));
  }
  j["responses"] = std::move(responses);
  return j;
}

AtfSet atf_from_json(const json& j) {
  if (!j.is_object() || !j.contains("responses")) throw LoadError("ATF JSON: missing 'responses'");
  json header = j;
  header.erase("responses");
  const std::string header_text = header.dump();
  const auto n_ch = get_field<std::size_t>(header, "n_channels", "ATF JSON");
  const auto n_bins = get_field<std::size_t>(header, "n_bins", "ATF JSON");
  const auto n_dirs = get_field<std::size_t>(header, "n_directions", "ATF JSON");
  std::string bytes = header_text;
  bytes.push_back('\0');
  const json& r = j.at("responses");
  auto fail = [](const std::string& m) { throw LoadError("ATF JSON: dimension mismatch in responses " + m); };
  if (!r.is_array() || r.size() != n_dirs) fail("(directions)");
  for (const auto& dir : r) {
    if (!dir.is_array() || dir.size() != n_bins) fail("(bins)");
    for (const auto& bin : dir) {
      if (!bin.is_array() || bin.size() != n_ch) fail("(channels)");
      for (const auto& v : bin) {
        if (!v.is_array() || v.size() != 2) fail("(complex pair)");
        for (int k = 0; k < 2; ++k) {
          const auto f = static_cast<float>(v[k].get<double>());
          const auto bits = std::bit_cast<std::uint32_t>(f);
          for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
        }
      }
    }
  }
  return parse_atf_set(bytes);
}

void cmd_atf_convert(const fs::path& in, const fs::path& out) {
  const std::string bytes = read_text(in, "ATF");
  if (bytes.find('\0') != std::string::npos) {
    write_file_atomic(out, atf_to_json(parse_atf_set(bytes)).dump() + "\n");
  } else {
    write_file_atomic(out, serialize_atf_set(atf_from_json(parse_json_text(bytes, "ATF JSON"))));
  }
}

}  // namespace cfocus
