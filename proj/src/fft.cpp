#include "mcse/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace mcse {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  std::vector<double> re(static_cast<size_t>(n));
  std::vector<std::complex<double>> cx(static_cast<size_t>(n) / 2 + 1);
  // FFTW_UNALIGNED so the new-array execute calls accept arbitrary buffers.
  fwd_plan_ = fftw_plan_dft_r2c_1d(
      n, re.data(), reinterpret_cast<fftw_complex*>(cx.data()),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_plan_ = fftw_plan_dft_c2r_1d(
      n, reinterpret_cast<fftw_complex*>(cx.data()), re.data(),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_plan_));
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  // r2c does not modify its input; the const_cast matches FFTW's C API.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_plan_),
                       const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  // c2r destroys its input, so run on a scratch copy.
  std::vector<std::complex<double>> scratch(in, in + n_ / 2 + 1);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

const RealFft& fft_for(int n) {
  static std::mutex cache_mutex;
  static std::map<int, std::unique_ptr<RealFft>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<RealFft>(n)).first;
  }
  return *it->second;
}

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h, long out_len) {
  const long full = static_cast<long>(x.size()) + static_cast<long>(h.size()) - 1;
  if (x.empty() || h.empty()) return {};
  if (out_len < 0) out_len = full;
  long n = 1;
  while (n < full) n <<= 1;
  const RealFft& fft = fft_for(static_cast<int>(n));
  std::vector<double> xa(static_cast<size_t>(n), 0.0), ha(static_cast<size_t>(n), 0.0);
  std::copy(x.begin(), x.end(), xa.begin());
  std::copy(h.begin(), h.end(), ha.begin());
  std::vector<std::complex<double>> xf(static_cast<size_t>(n) / 2 + 1), hf(xf.size());
  fft.forward(xa.data(), xf.data());
  fft.forward(ha.data(), hf.data());
  for (size_t i = 0; i < xf.size(); ++i) xf[i] *= hf[i];
  std::vector<double> y(static_cast<size_t>(n));
  fft.inverse(xf.data(), y.data());
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> out(static_cast<size_t>(std::min(out_len, full)), 0.0);
  for (size_t i = 0; i < out.size(); ++i) out[i] = y[i] * scale;
  if (out_len > full) out.resize(static_cast<size_t>(out_len), 0.0);
  return out;
}

}  // namespace mcse
