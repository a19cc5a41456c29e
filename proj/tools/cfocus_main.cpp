// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cfocus/error.hpp"
#include "cfocus/harness.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw cfocus::LoadError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw cfocus::LoadError("config: malformed JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw cfocus::LoadError("config: expected a flat JSON object");
  return j;
}

fs::path config_dir(const std::string& path) {
  return path.empty() ? fs::path{} : fs::path(path).parent_path();
}

// Flags left unset on the command line do not touch the config document.
class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <typename T>
  void add(const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(flag, *value, help);
    setters_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }
  void add_flag(const std::string& flag, const std::string& key, const std::string& help,
                bool value_when_set = true) {
    CLI::Option* opt = app_->add_flag(flag, help);
    setters_.push_back([opt, key, value_when_set](json& j) {
      if (opt->count() > 0) j[key] = value_when_set;
    });
  }
  void apply(json& j) const {
    for (const auto& s : setters_) s(j);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(json&)>> setters_;
};

void emit(const json& report, const std::string& out) {
  const std::string text = report.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    cfocus::write_file_atomic(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfocus: pose-steered beamforming for wearable arrays"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "flat JSON config; flags override its fields");
  app.add_option("--seed", seed, "RNG seed (simulate)");
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  app.fallthrough();

  auto* enhance = app.add_subcommand("enhance", "steer and beamform a multichannel recording");
  Overrides enh(enhance);
  enh.add<std::string>("--atf", "atf_path", "ATF set file");
  enh.add<std::string>("--input", "input_path", "multichannel input WAV");
  enh.add<std::string>("--output", "output_path", "mono output WAV");
  enh.add<std::string>("--poses", "poses_path", "pose CSV");
  enh.add<std::string>("--va", "va_path", "voice-activity JSON");
  enh.add<std::string>("--report", "report_path", "also write the run report here");
  enh.add<std::string>("--target", "target_id", "target participant id");
  enh.add<std::string>("--wearer", "wearer_id", "wearer participant id");
  enh.add<std::size_t>("--frame-len", "frame_len", "STFT frame length");
  enh.add<std::size_t>("--hop", "hop", "STFT hop");
  enh.add<double>("--loading", "loading", "diagonal loading factor");
  enh.add<std::size_t>("--ref-channel", "ref_channel", "reference microphone");
  enh.add<double>("--speed-of-sound", "speed_of_sound", "m/s");
  enh.add<std::vector<double>>("--marker-offset", "marker_offset", "x y z in the device frame");
  enh.add_flag("--flat-gain", "flat_gain", "use g = 1 instead of the reference-channel response");
  enh.add_flag("--bypass", "bypass", "pass ref_channel through WOLA only");
  enh.add_flag("--no-cache", "cache_weights", "recompute weights every frame", false);

  auto* evaluate = app.add_subcommand("evaluate", "score an enhanced signal against a reference");
  Overrides ev(evaluate);
  ev.add<std::string>("--enhanced", "enhanced_path", "enhanced mono WAV");
  ev.add<std::string>("--reference", "reference_path", "close-mic or stem WAV");
  ev.add<std::size_t>("--reference-channel", "reference_channel", "channel of the reference file");
  ev.add<std::string>("--mixture", "mixture_path", "array recording");
  ev.add<std::size_t>("--mixture-channel", "mixture_channel", "reference microphone");
  ev.add<std::string>("--va", "va_path", "voice-activity JSON");
  ev.add<std::string>("--target", "target_id", "target participant id");
  ev.add<std::string>("--wearer", "wearer_id", "wearer participant id");
  ev.add<std::string>("--case", "test_case", "noise | noise_interferer");
  ev.add<std::int64_t>("--coarse-offset", "coarse_offset", "samples");
  ev.add<std::int64_t>("--max-lag", "max_lag", "samples");
  ev.add<double>("--seg-frame", "seg_frame_s", "SegSNR frame length in seconds");
  ev.add<std::string>("--external", "external_path", "JSON object of externally computed scores");

  auto* simulate = app.add_subcommand("simulate", "render a scene manifest");
  std::string manifest_path, out_dir;
  simulate->add_option("manifest", manifest_path, "scene manifest JSON");
  simulate->add_option("--out-dir", out_dir, "output directory")->required();

  auto* track = app.add_subcommand("track", "head tracking from detections");
  Overrides tr(track);
  tr.add<std::string>("--detections", "detections_path", "detections JSON lines");
  tr.add<std::string>("--faces", "faces_path", "labelled face boxes JSON lines");
  tr.add<std::string>("--motion", "motion_path", "camera motion JSON lines");
  tr.add<double>("--threshold", "threshold_t", "assignment threshold");
  tr.add<double>("--alpha", "alpha", "feature weight");
  tr.add<int>("--max-life", "max_life", "frames a track may coast");
  tr.add<int>("--min-track-len", "min_track_len", "minimum detected points");

  auto* atf = app.add_subcommand("atf", "ATF set utilities");
  atf->require_subcommand(1);
  auto* atf_info = atf->add_subcommand("info", "summarize an ATF file");
  std::string atf_in, atf_out;
  atf_info->add_option("path", atf_in, "ATF file")->required();
  auto* atf_convert = atf->add_subcommand("convert", "binary <-> JSON");
  std::string conv_in;
  atf_convert->add_option("input", conv_in, "ATF binary or JSON")->required();
  atf_convert->add_option("output", atf_out, "destination")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enhance) {
      json j = load_config(config_path);
      enh.apply(j);
      emit(cfocus::cmd_enhance(cfocus::PipelineConfig::from_json(j, config_dir(config_path))),
           out_path);
    } else if (*evaluate) {
      json j = load_config(config_path);
      ev.apply(j);
      emit(cfocus::cmd_evaluate(cfocus::EvaluateConfig::from_json(j, config_dir(config_path))),
           out_path);
    } else if (*simulate) {
      if (manifest_path.empty()) manifest_path = config_path;
      if (manifest_path.empty()) throw cfocus::LoadError("simulate: no manifest given");
      emit(cfocus::cmd_simulate(manifest_path, out_dir, seed), out_path);
    } else if (*track) {
      json j = load_config(config_path);
      tr.apply(j);
      for (const auto& [key, _] : j.items())
        if (key != "detections_path" && key != "faces_path" && key != "motion_path" &&
            key != "threshold_t" && key != "alpha" && key != "max_life" && key != "min_track_len")
          throw cfocus::LoadError("track config: unknown field '" + key + "'");
      if (!j.contains("detections_path")) throw cfocus::LoadError("track: no detections file given");
      const fs::path base = config_dir(config_path);
      auto path = [&](const char* key) -> std::optional<fs::path> {
        if (!j.contains(key)) return std::nullopt;
        fs::path p = j[key].get<std::string>();
        return p.is_relative() && !base.empty() ? base / p : p;
      };
      cfocus::TrackerConfig tc;
      tc.threshold_t = j.value("threshold_t", tc.threshold_t);
      tc.alpha = j.value("alpha", tc.alpha);
      tc.max_life = j.value("max_life", tc.max_life);
      tc.min_track_len = j.value("min_track_len", tc.min_track_len);
      tc.validate();
      emit(cfocus::cmd_track(*path("detections_path"), path("faces_path"), path("motion_path"), tc),
           out_path);
    } else if (*atf_info) {
      emit(cfocus::atf_info(cfocus::load_atf_set(atf_in)), out_path);
    } else if (*atf_convert) {
      cfocus::cmd_atf_convert(conv_in, atf_out);
      emit({{"command", "atf convert"}, {"input", conv_in}, {"output", atf_out}}, out_path);
    }
  } catch (const cfocus::Error& e) {
    std::cerr << "cfocus: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cfocus: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
