#include "adept/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "adept/error.hpp"

namespace adept {

namespace {

std::uint32_t u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Audio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open audio '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::UnsupportedFormat, where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int channels = 0, bits = 0, rate = 0, format = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = u32le(data + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw Error(ErrorCode::UnsupportedFormat, where + "truncated chunk");
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::UnsupportedFormat, where + "short fmt chunk");
      format = u16le(data + body);
      channels = u16le(data + body + 2);
      rate = static_cast<int>(u32le(data + body + 4));
      bits = u16le(data + body + 14);
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::UnsupportedFormat, where + "data chunk before fmt");
      if (format != 1 || channels != 1 || bits != 16) {
        throw Error(ErrorCode::UnsupportedFormat, where + "need mono 16-bit PCM, got format " + std::to_string(format) +
                                                      ", " + std::to_string(channels) + " ch, " +
                                                      std::to_string(bits) + " bit");
      }
      if (rate < 8000 || rate > 48000) {
        throw Error(ErrorCode::UnsupportedFormat, where + "sample rate " + std::to_string(rate) + " outside 8-48 kHz");
      }
      Audio audio;
      audio.sample_rate = rate;
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(u16le(data + body + 2 * i));
        audio.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return audio;
    }
    pos = body + size + (size & 1U);
  }
  throw Error(ErrorCode::UnsupportedFormat, where + "no data chunk");
}

void write_wav(const std::filesystem::path& path, const Audio& audio) {
  if (audio.sample_rate < 8000 || audio.sample_rate > 48000) {
    throw Error(ErrorCode::UnsupportedFormat, "sample rate outside 8-48 kHz");
  }
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : audio.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write audio '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace adept
