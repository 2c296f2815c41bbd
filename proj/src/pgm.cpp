#include "mcse/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mcse/common.hpp"

namespace mcse {

void write_pgm(const std::string& path, const Eigen::MatrixXd& image01) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write image: " + path);
  os << "P5\n" << image01.cols() << " " << image01.rows() << "\n255\n";
  for (long r = 0; r < image01.rows(); ++r)
    for (long c = 0; c < image01.cols(); ++c) {
      const double v = std::clamp(image01(r, c), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  if (!os) throw DataError("failed writing image: " + path);
}

Eigen::MatrixXd spectrogram_image(const Eigen::VectorXd& wave, const FrameSpec& spec,
                                  double db_floor) {
  const Spectrogram s = stft(wave, spec);
  const Eigen::MatrixXd mag = s.bins.cwiseAbs();
  const long F = mag.rows(), N = mag.cols();
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(F, N);
  const double peak = mag.maxCoeff();
  if (peak <= 0.0) return img;  // silence: uniform minimum intensity
  for (long t = 0; t < N; ++t)
    for (long f = 0; f < F; ++f) {
      const double db = 20.0 * std::log10(std::max(mag(f, t) / peak, 1e-12));
      // Highest frequency on the top row.
      img(F - 1 - f, t) = std::clamp(1.0 - db / db_floor, 0.0, 1.0);
    }
  return img;
}

namespace {

Eigen::MatrixXd with_margin(const std::vector<Eigen::MatrixXd>& panels, int margin) {
  if (panels.empty()) throw DataError("no panels to render");
  const long F = panels[0].rows();
  long total_w = margin;
  for (const auto& p : panels) {
    if (p.rows() != F) throw DataError("panel height mismatch");
    total_w += p.cols() + margin;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(F + 2 * margin, total_w);
  long x = margin;
  for (const auto& p : panels) {
    out.block(margin, x, F, p.cols()) = p;
    x += p.cols() + margin;
  }
  return out;
}

}  // namespace

void write_spectrogram_pgm(const std::string& path, const Eigen::VectorXd& wave,
                           const FrameSpec& spec, int margin) {
  write_pgm(path, with_margin({spectrogram_image(wave, spec)}, margin));
}

void write_panel_pgm(const std::string& path,
                     const std::vector<Eigen::VectorXd>& waves,
                     const FrameSpec& spec, int margin) {
  std::vector<Eigen::MatrixXd> panels;
  panels.reserve(waves.size());
  for (const auto& w : waves) panels.push_back(spectrogram_image(w, spec));
  write_pgm(path, with_margin(panels, margin));
}

}  // namespace mcse
