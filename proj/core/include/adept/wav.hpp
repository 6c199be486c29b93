#pragma once

#include <filesystem>
#include <vector>

namespace adept {

// Mono waveform with samples in [-1, 1].
struct Audio {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

// Reads mono 16-bit PCM RIFF/WAVE at 8-48 kHz. Anything else throws
// Error{UnsupportedFormat}; unreadable files throw Error{Io}.
Audio read_wav(const std::filesystem::path& path);

// Writes mono 16-bit PCM; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Audio& audio);

}  // namespace adept
