#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>
#include <set>

#include "mcse/dataset.hpp"
#include "mcse/wav.hpp"
#include "support.hpp"

using namespace mcse;
namespace fs = std::filesystem;

namespace {
fs::path fresh_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("pseudo speech has the pinned rms and valid labels") {
  std::mt19937_64 rng(1);
  const LabeledWave lw = synth_pseudo_speech(16000, 16000, 32, 1.0, rng);
  REQUIRE(lw.wave.size() == 16000);
  const double rms = std::sqrt(lw.wave.squaredNorm() / 16000.0);
  CHECK(rms == doctest::Approx(0.08).epsilon(1e-9));
  REQUIRE(!lw.labels.empty());
  for (size_t i = 0; i < lw.labels.size(); ++i) {
    CHECK(lw.labels[i] >= 0);
    CHECK(lw.labels[i] < 32);
    if (i > 0) CHECK(lw.labels[i] != lw.labels[i - 1]);
  }
  // 140-260 ms segments in a 1 s utterance
  CHECK(lw.labels.size() >= 3);
  CHECK(lw.labels.size() <= 8);
}

TEST_CASE("pseudo speech is deterministic given the rng state") {
  std::mt19937_64 r1(9), r2(9), r3(10);
  const LabeledWave a = synth_pseudo_speech(8000, 16000, 32, 1.0, r1);
  const LabeledWave b = synth_pseudo_speech(8000, 16000, 32, 1.0, r2);
  const LabeledWave c = synth_pseudo_speech(8000, 16000, 32, 1.0, r3);
  CHECK(a.wave == b.wave);
  CHECK(a.labels == b.labels);
  CHECK(a.wave != c.wave);
}

TEST_CASE("speaker scale interpolates from 0.92 to 1.08") {
  CHECK(speaker_formant_scale(0, 24) == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(speaker_formant_scale(23, 24) == doctest::Approx(1.08).epsilon(1e-12));
  CHECK(speaker_formant_scale(0, 1) == 1.0);
}

TEST_CASE("different speakers produce different audio") {
  std::mt19937_64 r1(5), r2(5);
  const LabeledWave a = synth_pseudo_speech(8000, 16000, 32, 0.92, r1);
  const LabeledWave b = synth_pseudo_speech(8000, 16000, 32, 1.08, r2);
  CHECK(a.labels == b.labels);  // same segments, shifted formants
  CHECK((a.wave - b.wave).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("synthesized corpus is loadable and speaker-disjoint") {
  const fs::path out = fresh_dir("mcse_test_ds");
  DatasetConfig cfg;
  cfg.n_train = 4;
  cfg.n_val = 2;
  cfg.n_test = 2;
  cfg.utt_seconds = 1.0;
  synth_dataset(cfg, out.string(), 77);

  std::set<int> train_spk, val_spk, test_spk;
  const Manifest train = Manifest::load((out / "train.jsonl").string());
  const Manifest val = Manifest::load((out / "val.jsonl").string());
  const Manifest test = Manifest::load((out / "test.jsonl").string());
  REQUIRE(train.utts.size() == 4);
  REQUIRE(val.utts.size() == 2);
  REQUIRE(test.utts.size() == 2);
  for (const auto& u : train.utts) {
    train_spk.insert(u.speaker);
    train_spk.insert(u.interferer_speaker);
  }
  for (const auto& u : val.utts) {
    val_spk.insert(u.speaker);
    val_spk.insert(u.interferer_speaker);
  }
  for (const auto& u : test.utts) {
    test_spk.insert(u.speaker);
    test_spk.insert(u.interferer_speaker);
  }
  for (int s : train_spk) CHECK(s < 16);
  for (int s : val_spk) {
    CHECK(s >= 16);
    CHECK(s < 20);
  }
  for (int s : test_spk) CHECK(s >= 20);

  for (const auto& u : train.utts) {
    CHECK(u.speaker != u.interferer_speaker);
    const Wave mix = read_wav(u.mixture_wav);
    CHECK(mix.channels() == 6);
    CHECK(mix.num_samples() == 16000);
    const Wave rev = read_wav(u.reverb_target_wav);
    CHECK(rev.channels() == 1);
    const Wave cln = read_wav(u.clean_wav);
    CHECK(cln.channels() == 1);
    CHECK(!u.labels.empty());
    CHECK(u.scene.room.rt60 >= 0.05);
  }
  fs::remove_all(out);
}

TEST_CASE("dataset synthesis is deterministic in the seed") {
  const fs::path a = fresh_dir("mcse_test_dsa");
  const fs::path b = fresh_dir("mcse_test_dsb");
  DatasetConfig cfg;
  cfg.n_train = 2;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.utt_seconds = 0.6;
  synth_dataset(cfg, a.string(), 5);
  synth_dataset(cfg, b.string(), 5);
  const Wave wa = read_wav((a / "wavs/train_0001_mix.wav").string());
  const Wave wb = read_wav((b / "wavs/train_0001_mix.wav").string());
  CHECK(wa.samples == wb.samples);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("manifest paths survive a save/load round trip from another directory") {
  const fs::path out = fresh_dir("mcse_test_man");
  DatasetConfig cfg;
  cfg.n_train = 1;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.utt_seconds = 0.6;
  synth_dataset(cfg, out.string(), 3);

  Manifest m = Manifest::load((out / "train.jsonl").string());
  const fs::path sub = out / "copies";
  fs::create_directories(sub);
  m.save((sub / "again.jsonl").string());
  const Manifest r = Manifest::load((sub / "again.jsonl").string());
  REQUIRE(r.utts.size() == 1);
  CHECK(fs::exists(r.utts[0].mixture_wav));
  CHECK(fs::equivalent(r.utts[0].mixture_wav, m.utts[0].mixture_wav));
  CHECK(r.utts[0].labels == m.utts[0].labels);
  CHECK(r.utts[0].scene.sir_db == m.utts[0].scene.sir_db);
  fs::remove_all(out);
}

TEST_CASE("manifest loader rejects garbage") {
  const fs::path out = fresh_dir("mcse_test_badman");
  {
    std::ofstream os(out / "bad.jsonl");
    os << "{ not json\n";
  }
  CHECK_THROWS_AS(Manifest::load((out / "bad.jsonl").string()), DataError);
  {
    std::ofstream os(out / "empty.jsonl");
  }
  CHECK_THROWS_AS(Manifest::load((out / "empty.jsonl").string()), DataError);
  CHECK_THROWS_AS(Manifest::load("/nonexistent/man.jsonl"), DataError);
  fs::remove_all(out);
}

TEST_CASE("an external source corpus replaces the builtin voices") {
  const fs::path srcdir = fresh_dir("mcse_test_srccorp");
  std::mt19937_64 rng(8);
  for (int i = 0; i < 6; ++i) {
    Wave w;
    w.sample_rate = 16000;
    w.samples = testsup::random_matrix(1, 12000, rng, 0.05);
    write_wav((srcdir / ("spk" + std::to_string(i) + ".wav")).string(), w);
  }
  const fs::path out = fresh_dir("mcse_test_dscorp");
  DatasetConfig cfg;
  cfg.n_train = 2;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.utt_seconds = 0.5;
  cfg.source_corpus = srcdir.string();
  synth_dataset(cfg, out.string(), 11);
  const Manifest m = Manifest::load((out / "train.jsonl").string());
  for (const auto& u : m.utts) {
    CHECK(u.labels.empty());  // external audio carries no transcript
    const Wave mix = read_wav(u.mixture_wav);
    CHECK(mix.channels() == 6);
  }
  fs::remove_all(srcdir);
  fs::remove_all(out);
}
