#pragma once

#include <complex>
#include <vector>

namespace mcse {

/// Real <-> half-complex FFT of a fixed size, backed by FFTW.
///
/// forward() is the unnormalized DFT of a real sequence (n -> n/2+1 bins);
/// inverse() is the unnormalized inverse (inverse(forward(x)) == n * x).
/// Instances are immutable after construction and safe to share across
/// threads; plan creation is serialized internally.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  void forward(const double* in, std::complex<double>* out) const;
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  int n_;
  void* fwd_plan_;
  void* inv_plan_;
};

/// Process-wide plan cache; one plan pair per transform size.
const RealFft& fft_for(int n);

/// FFT-based linear convolution, trimmed to the first `out_len` samples
/// (full length when out_len < 0).
std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h,
                                 long out_len = -1);

}  // namespace mcse
