#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcse/dsp.hpp"

namespace mcse {

/// Binary (P5) portable graymap; values clamped to [0,1] map to 0..255.
void write_pgm(const std::string& path, const Eigen::MatrixXd& image01);

/// Log-magnitude spectrogram normalized to [0,1] over db_floor dB of range,
/// highest frequency on top. All-silent input yields an all-zero image.
Eigen::MatrixXd spectrogram_image(const Eigen::VectorXd& wave, const FrameSpec& spec,
                                  double db_floor = -80.0);

/// One spectrogram panel with a uniform margin border.
void write_spectrogram_pgm(const std::string& path, const Eigen::VectorXd& wave,
                           const FrameSpec& spec, int margin = 8);

/// Side-by-side panels (shared scale per panel) separated by margins.
void write_panel_pgm(const std::string& path,
                     const std::vector<Eigen::VectorXd>& waves,
                     const FrameSpec& spec, int margin = 8);

}  // namespace mcse
