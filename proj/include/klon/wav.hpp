#pragma once

// RIFF/WAVE reading and writing: 16-bit PCM and 32-bit IEEE float,
// little-endian, mono or stereo in, mono out.

#include <cstdint>
#include <string>
#include <vector>

namespace klon::wav {

enum class Encoding { pcm16, float32 };

struct WavSpec {
  std::uint32_t sample_rate = 44100;
  std::uint16_t channels = 1;
  Encoding encoding = Encoding::float32;
};

struct Audio {
  WavSpec spec;
  std::vector<double> samples;  // mono; stereo sources are averaged
};

// Throws WavError on malformed or truncated data and
// UnsupportedEncodingError on any other format or channel count.
Audio decode(const std::vector<std::uint8_t>& bytes);
Audio read_file(const std::string& path);

// Writes mono audio. PCM16 rounds to nearest and saturates at full scale;
// float32 rounds to the nearest float.
std::vector<std::uint8_t> encode(const std::vector<double>& samples, std::uint32_t sample_rate, Encoding enc);
void write_file(const std::string& path, const std::vector<double>& samples, std::uint32_t sample_rate, Encoding enc);

// Number of samples that saturate when written as PCM16.
std::size_t count_clipped(const std::vector<double>& samples);

}  // namespace klon::wav
