#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mcse/wav.hpp"
#include "support.hpp"

using namespace mcse;
namespace fs = std::filesystem;

namespace {
std::string tmp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("float32 wav round trip preserves float-precision samples") {
  std::mt19937_64 rng(1);
  Wave w;
  w.sample_rate = 16000;
  w.samples = testsup::random_matrix(6, 777, rng, 0.2);
  const std::string p = tmp_path("mcse_test_f32.wav");
  write_wav(p, w, WavFormat::Float32);
  const Wave r = read_wav(p);
  CHECK(r.sample_rate == 16000);
  REQUIRE(r.channels() == 6);
  REQUIRE(r.num_samples() == 777);
  for (int c = 0; c < 6; ++c)
    for (long n = 0; n < 777; ++n)
      CHECK(r.samples(c, n) == doctest::Approx(w.samples(c, n)).epsilon(1e-7));
  std::remove(p.c_str());
}

TEST_CASE("pcm16 wav round trip quantizes to 1/32768") {
  std::mt19937_64 rng(2);
  Wave w;
  w.sample_rate = 8000;
  w.samples = testsup::random_matrix(2, 300, rng, 0.3);
  const std::string p = tmp_path("mcse_test_p16.wav");
  write_wav(p, w, WavFormat::Pcm16);
  const Wave r = read_wav(p);
  CHECK(r.sample_rate == 8000);
  REQUIRE(r.channels() == 2);
  REQUIRE(r.num_samples() == 300);
  for (int c = 0; c < 2; ++c)
    for (long n = 0; n < 300; ++n)
      CHECK(std::abs(r.samples(c, n) - w.samples(c, n)) <= 1.0 / 32768.0 + 1e-12);
  std::remove(p.c_str());
}

TEST_CASE("pcm16 clips out-of-range samples instead of wrapping") {
  Wave w;
  w.samples.resize(1, 4);
  w.samples << 2.0, -2.0, 0.5, -0.5;
  const std::string p = tmp_path("mcse_test_clip.wav");
  write_wav(p, w, WavFormat::Pcm16);
  const Wave r = read_wav(p);
  CHECK(r.samples(0, 0) > 0.99);
  CHECK(r.samples(0, 1) < -0.99);
  CHECK(r.samples(0, 2) == doctest::Approx(0.5).epsilon(1e-3));
  std::remove(p.c_str());
}

TEST_CASE("missing and malformed files raise data errors") {
  CHECK_THROWS_AS(read_wav("/nonexistent/nowhere.wav"), DataError);
  const std::string p = tmp_path("mcse_test_bad.wav");
  std::ofstream os(p, std::ios::binary);
  os << "not a riff file at all";
  os.close();
  CHECK_THROWS_AS(read_wav(p), DataError);
  std::remove(p.c_str());
}

TEST_CASE("truncated wav payload is rejected") {
  std::mt19937_64 rng(3);
  Wave w;
  w.samples = testsup::random_matrix(1, 100, rng);
  const std::string p = tmp_path("mcse_test_trunc.wav");
  write_wav(p, w, WavFormat::Float32);
  const auto full = fs::file_size(p);
  fs::resize_file(p, full - 37);
  CHECK_THROWS_AS(read_wav(p), DataError);
  std::remove(p.c_str());
}
