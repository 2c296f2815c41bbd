#include "mcse/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace mcse {

namespace {

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {}
  bool read(void* dst, size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<size_t>(in.gcount()) == n;
  }
  uint32_t u32() {
    uint8_t b[4];
    if (!read(b, 4)) throw DataError("wav: truncated file");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
  }
  uint16_t u16() {
    uint8_t b[2];
    if (!read(b, 2)) throw DataError("wav: truncated file");
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

Wave read_wav(const std::string& path) {
  Reader r(path);
  if (!r.in) throw DataError("wav: cannot open " + path);
  char tag[4];
  if (!r.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0)
    throw DataError("wav: not a RIFF file: " + path);
  r.u32();  // riff size
  if (!r.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0)
    throw DataError("wav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<uint8_t> data;
  bool have_fmt = false, have_data = false;
  while (r.read(tag, 4)) {
    uint32_t size = r.u32();
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (size > 16) r.in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      if (size > 0 && !r.read(data.data(), size)) throw DataError("wav: truncated data chunk");
      have_data = true;
    } else {
      r.in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw DataError("wav: missing fmt or data chunk: " + path);
  if (channels == 0) throw DataError("wav: zero channels");

  Wave w;
  w.sample_rate = static_cast<int>(rate);
  long frames = 0;
  if (format == 1 && bits == 16) {
    frames = static_cast<long>(data.size() / (2u * channels));
    w.samples.resize(channels, frames);
    const int16_t* p = reinterpret_cast<const int16_t*>(data.data());
    for (long i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c)
        w.samples(c, i) = p[i * channels + c] / 32768.0;
  } else if (format == 3 && bits == 32) {
    frames = static_cast<long>(data.size() / (4u * channels));
    w.samples.resize(channels, frames);
    const float* p = reinterpret_cast<const float*>(data.data());
    for (long i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c)
        w.samples(c, i) = static_cast<double>(p[i * channels + c]);
  } else {
    throw DataError("wav: unsupported format (need PCM16 or float32): " + path);
  }
  return w;
}

void write_wav(const std::string& path, const Wave& wave, WavFormat format) {
  const int channels = wave.channels();
  const long frames = wave.num_samples();
  if (channels < 1) throw DataError("wav: no channels to write");
  const int bytes_per = format == WavFormat::Pcm16 ? 2 : 4;
  const uint32_t data_size = static_cast<uint32_t>(frames * channels * bytes_per);

  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, format == WavFormat::Pcm16 ? 1 : 3);
  put_u16(out, static_cast<uint16_t>(channels));
  put_u32(out, static_cast<uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<uint32_t>(wave.sample_rate * channels * bytes_per));
  put_u16(out, static_cast<uint16_t>(channels * bytes_per));
  put_u16(out, static_cast<uint16_t>(bytes_per * 8));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  if (format == WavFormat::Pcm16) {
    for (long i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) {
        double v = std::clamp(wave.samples(c, i), -1.0, 32767.0 / 32768.0);
        int16_t q = static_cast<int16_t>(std::lround(v * 32768.0));
        put_u16(out, static_cast<uint16_t>(q));
      }
  } else {
    for (long i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) {
        float v = static_cast<float>(wave.samples(c, i));
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
      }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("wav: write failed: " + path);
}

}  // namespace mcse
