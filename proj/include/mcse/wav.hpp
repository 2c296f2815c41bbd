#pragma once

#include <string>

#include "mcse/dsp.hpp"

namespace mcse {

enum class WavFormat { Pcm16, Float32 };

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, any channel count).
Wave read_wav(const std::string& path);

/// Writes all channels interleaved. Pcm16 clips to [-1, 1).
void write_wav(const std::string& path, const Wave& wave,
               WavFormat format = WavFormat::Float32);

}  // namespace mcse
