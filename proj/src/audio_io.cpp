// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cfocus/audio_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfocus/error.hpp"

namespace cfocus {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

std::string format_name(std::uint16_t tag) {
  switch (tag) {
    case 0x0002: return "MS ADPCM";
    case 0x0006: return "A-law";
    case 0x0007: return "mu-law";
    case 0x0011: return "IMA ADPCM";
    case 0x0055: return "MPEG Layer 3";
    case 0x0001: return "PCM";
    case 0x0003: return "IEEE float";
    default: {
      std::ostringstream s;
      s << "format tag 0x" << std::hex << tag;
      return s.str();
    }
  }
}

}  // namespace

Audio parse_wav(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw LoadError("WAV: not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = le32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw LoadError("WAV: truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw LoadError("WAV: fmt chunk too short");
      tag = le16(p + body);
      channels = le16(p + body + 2);
      rate = le32(p + body + 4);
      bits = le16(p + body + 14);
      if (tag == kFormatExtensible) {
        if (size < 40) throw LoadError("WAV: extensible fmt chunk too short");
        tag = le16(p + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw LoadError("WAV: data chunk before fmt chunk");
      if (!(tag == kFormatFloat && bits == 32) && !(tag == kFormatPcm && bits == 32))
        throw LoadError("WAV: unsupported codec: " + format_name(tag) + ", " +
                        std::to_string(bits) + "-bit (need 32-bit float or 32-bit PCM)");
      if (channels == 0 || rate == 0) throw LoadError("WAV: zero channels or sample rate");
      const std::size_t frame_bytes = 4u * channels;
      const std::size_t n = size / frame_bytes;
      Audio audio;
      audio.sample_rate = rate;
      audio.channels.assign(channels, Signal(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels; ++c) {
          const std::uint32_t raw = le32(p + body + i * frame_bytes + 4 * c);
          audio.channels[c][i] =
              tag == kFormatFloat
                  ? static_cast<double>(std::bit_cast<float>(raw))
                  : static_cast<double>(static_cast<std::int32_t>(raw)) / 2147483648.0;
        }
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  throw LoadError(have_fmt ? "WAV: missing data chunk" : "WAV: missing fmt chunk");
}

Audio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("WAV: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_wav(ss.str());
}

std::string serialize_wav(const Audio& audio) {
  const std::size_t n = audio.n_samples();
  const std::size_t ch = audio.n_channels();
  if (ch == 0) throw DimensionError("WAV: no channels to write");
  for (const auto& c : audio.channels)
    if (c.size() != n) throw DimensionError("WAV: channels differ in length");
  const std::size_t data_bytes = n * ch * 4;
  std::string s;
  s.reserve(44 + data_bytes);
  s += "RIFF";
  put32(s, static_cast<std::uint32_t>(36 + data_bytes));
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, kFormatFloat);
  put16(s, static_cast<std::uint16_t>(ch));
  const auto rate = static_cast<std::uint32_t>(audio.sample_rate);
  put32(s, rate);
  put32(s, static_cast<std::uint32_t>(rate * ch * 4));
  put16(s, static_cast<std::uint16_t>(ch * 4));
  put16(s, 32);
  s += "data";
  put32(s, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < ch; ++c)
      put32(s, std::bit_cast<std::uint32_t>(static_cast<float>(audio.channels[c][i])));
  return s;
}

void write_wav(const std::filesystem::path& path, const Audio& audio) {
  write_file_atomic(path, serialize_wav(audio));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cfocus
