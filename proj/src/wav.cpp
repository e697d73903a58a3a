#include "klon/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "klon/error.hpp"

namespace klon::wav {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void tag(std::vector<std::uint8_t>& out, const char* t) { out.insert(out.end(), t, t + 4); }

std::int16_t to_pcm16(double x) {
  const double s = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

}  // namespace

Audio decode(const std::vector<std::uint8_t>& bytes) {
  const std::uint8_t* d = bytes.data();
  if (bytes.size() < 12 || std::memcmp(d, "RIFF", 4) != 0 || std::memcmp(d + 8, "WAVE", 4) != 0) {
    throw WavError("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = d + pos;
    const std::size_t size = u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw WavError("truncated fmt chunk");
      format = u16(d + body);
      channels = u16(d + body + 2);
      rate = u32(d + body + 4);
      bits = u16(d + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw WavError("truncated extensible fmt chunk");
        format = u16(d + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw WavError("data chunk before fmt chunk");
      // Tolerate a data size running past the end (streamed writers); use what is there.
      data = d + body;
      data_size = std::min(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw WavError("missing fmt chunk");
  if (data == nullptr) throw WavError("missing data chunk");

  Encoding enc;
  if (format == kFormatPcm && bits == 16) {
    enc = Encoding::pcm16;
  } else if (format == kFormatFloat && bits == 32) {
    enc = Encoding::float32;
  } else {
    throw UnsupportedEncodingError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                   std::to_string(bits) + " bits); expected 16-bit PCM or 32-bit float");
  }
  if (channels != 1 && channels != 2) {
    throw UnsupportedEncodingError("unsupported channel count " + std::to_string(channels) + "; expected mono or stereo");
  }
  if (rate == 0) throw WavError("sample rate is zero");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Audio a;
  a.spec = {rate, channels, enc};
  a.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (f * channels + c) * width;
      sum += enc == Encoding::pcm16 ? static_cast<std::int16_t>(u16(p)) / 32768.0
                                    : static_cast<double>(std::bit_cast<float>(u32(p)));
    }
    a.samples[f] = channels == 2 ? 0.5 * sum : sum;
  }
  return a;
}

Audio read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot read '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<std::uint8_t> encode(const std::vector<double>& samples, std::uint32_t sample_rate, Encoding enc) {
  const std::uint16_t bits = enc == Encoding::pcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  tag(out, "RIFF");
  put32(out, 36 + data_size);
  tag(out, "WAVE");
  tag(out, "fmt ");
  put32(out, 16);
  put16(out, enc == Encoding::pcm16 ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, sample_rate);
  put32(out, sample_rate * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  tag(out, "data");
  put32(out, data_size);
  for (double x : samples) {
    if (enc == Encoding::pcm16) {
      put16(out, static_cast<std::uint16_t>(to_pcm16(x)));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
  return out;
}

void write_file(const std::string& path, const std::vector<double>& samples, std::uint32_t sample_rate, Encoding enc) {
  const auto bytes = encode(samples, sample_rate, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError("write failed for '" + path + "'");
}

std::size_t count_clipped(const std::vector<double>& samples) {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](double x) {
    return x * 32768.0 > 32767.5 || x * 32768.0 < -32768.5;
  }));
}

}  // namespace klon::wav
