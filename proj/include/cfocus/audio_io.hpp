// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>

#include "cfocus/wola.hpp"

namespace cfocus {

struct Audio {
  double sample_rate = 0.0;
  Multichannel channels;  // [channel][sample]

  std::size_t n_channels() const { return channels.size(); }
  std::size_t n_samples() const { return channels.empty() ? 0 : channels[0].size(); }
};

// RIFF/WAVE reader for 32-bit IEEE float and 32-bit integer PCM (plain or
// WAVE_FORMAT_EXTENSIBLE). Integer samples are divided by 2^31.
Audio read_wav(const std::filesystem::path& path);
Audio parse_wav(const std::string& bytes);

// Writes 32-bit float WAVE through a temporary file renamed into place.
void write_wav(const std::filesystem::path& path, const Audio& audio);
std::string serialize_wav(const Audio& audio);

// Writes bytes to path via a sibling temporary file and rename, so readers
// never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cfocus
