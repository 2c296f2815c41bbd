#include "mcse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mcse/common.hpp"
#include "mcse/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mcse {
namespace {

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("manifest: bad 3-vector");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json scene_to_json(const SceneSpec& s) {
  return json{{"room_dims", vec3_to_json(s.room.dims)},
              {"rt60", s.room.rt60},
              {"max_image_order", s.room.max_image_order},
              {"array_center", vec3_to_json(s.array.center)},
              {"array_radius", s.array.radius},
              {"num_mics", s.array.num_mics},
              {"target_pos", vec3_to_json(s.target_pos)},
              {"interferer_pos", vec3_to_json(s.interferer_pos)},
              {"target_doa_deg", s.target_doa_deg},
              {"interferer_doa_deg", s.interferer_doa_deg},
              {"sir_db", s.sir_db},
              {"seed", s.seed}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.room.dims = vec3_from_json(j.at("room_dims"));
  s.room.rt60 = j.at("rt60").get<double>();
  s.room.max_image_order = j.value("max_image_order", 20);
  s.array.center = vec3_from_json(j.at("array_center"));
  s.array.radius = j.value("array_radius", 0.035);
  s.array.num_mics = j.value("num_mics", 6);
  s.target_pos = vec3_from_json(j.at("target_pos"));
  s.interferer_pos = vec3_from_json(j.at("interferer_pos"));
  s.target_doa_deg = j.at("target_doa_deg").get<double>();
  s.interferer_doa_deg = j.at("interferer_doa_deg").get<double>();
  s.sir_db = j.at("sir_db").get<double>();
  s.seed = j.value("seed", 0ull);
  return s;
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path q(p);
  return q.is_absolute() ? q.string() : (base / q).string();
}

}  // namespace

Manifest Manifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.mixture_wav = resolve(base, j.at("mixture_wav").get<std::string>());
    u.reverb_target_wav = resolve(base, j.at("reverb_target_wav").get<std::string>());
    u.clean_wav = resolve(base, j.value("clean_wav", ""));
    u.enhanced_wav = resolve(base, j.value("enhanced_wav", ""));
    u.speaker = j.value("speaker", -1);
    u.interferer_speaker = j.value("interferer_speaker", -1);
    if (j.contains("labels")) u.labels = j.at("labels").get<std::vector<int>>();
    u.scene = scene_from_json(j.at("scene"));
    m.utts.push_back(std::move(u));
  }
  if (m.utts.empty()) throw DataError("manifest is empty: " + path);
  return m;
}

void Manifest::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest: " + path);
  // Stored paths are relative to the manifest so the dataset stays movable.
  const fs::path base = fs::absolute(fs::path(path).parent_path()).lexically_normal();
  const auto rel = [&base](const std::string& p) -> std::string {
    if (p.empty()) return p;
    const fs::path abs = fs::absolute(p).lexically_normal();
    const fs::path r = abs.lexically_relative(base);
    return r.empty() ? abs.generic_string() : r.generic_string();
  };
  for (const Utterance& u : utts) {
    json j{{"id", u.id},
           {"mixture_wav", rel(u.mixture_wav)},
           {"reverb_target_wav", rel(u.reverb_target_wav)},
           {"scene", scene_to_json(u.scene)},
           {"labels", u.labels},
           {"speaker", u.speaker},
           {"interferer_speaker", u.interferer_speaker}};
    if (!u.clean_wav.empty()) j["clean_wav"] = rel(u.clean_wav);
    if (!u.enhanced_wav.empty()) j["enhanced_wav"] = rel(u.enhanced_wav);
    os << j.dump() << "\n";
  }
}

double speaker_formant_scale(int speaker, int num_speakers) {
  if (num_speakers <= 1) return 1.0;
  return 0.92 + 0.16 * static_cast<double>(speaker) / (num_speakers - 1);
}

LabeledWave synth_pseudo_speech(long num_samples, int sample_rate, int num_phones,
                                double speaker_scale, std::mt19937_64& rng) {
  if (num_samples <= 0) throw DataError("pseudo-speech length must be positive");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LabeledWave out;
  out.wave = Eigen::VectorXd::Zero(num_samples);
  long pos = 0;
  int prev_phone = -1;
  const double detune[5] = {-0.02, -0.01, 0.0, 0.01, 0.02};
  const double formant_amp[3] = {1.0, 0.6, 0.25};
  while (pos < num_samples) {
    int phone = static_cast<int>(u01(rng) * num_phones);
    phone = std::min(phone, num_phones - 1);
    if (phone == prev_phone) phone = (phone + 1) % num_phones;
    prev_phone = phone;
    const long dur = static_cast<long>((0.14 + 0.12 * u01(rng)) * sample_rate);
    const long seg = std::min(dur, num_samples - pos);
    const double freqs[3] = {
        (300.0 + 150.0 * (phone % 4)) * speaker_scale,
        (1100.0 + 400.0 * ((phone / 4) % 4)) * speaker_scale,
        (3400.0 + 700.0 * (phone / 16)) * speaker_scale};
    const double seg_amp = 0.8 + 0.4 * u01(rng);

    Eigen::VectorXd seg_wave = Eigen::VectorXd::Zero(seg);
    for (int fm = 0; fm < 3; ++fm)
      for (int k = 0; k < 5; ++k) {
        const double f = freqs[fm] * (1.0 + detune[k]);
        const double phase = 2.0 * kPi * u01(rng);
        const double w = 2.0 * kPi * f / sample_rate;
        const double a = formant_amp[fm] / 5.0;
        for (long n = 0; n < seg; ++n) seg_wave(n) += a * std::sin(w * n + phase);
      }
    for (long n = 0; n < seg; ++n) seg_wave(n) += 0.02 * gauss(rng);

    const long ramp = std::min<long>(sample_rate / 100, seg / 2);  // 10 ms fades
    for (long n = 0; n < ramp; ++n) {
      const double g = 0.5 * (1.0 - std::cos(kPi * n / ramp));
      seg_wave(n) *= g;
      seg_wave(seg - 1 - n) *= g;
    }
    out.wave.segment(pos, seg) += seg_amp * seg_wave;
    out.labels.push_back(phone);
    pos += seg;
  }
  const double rms = std::sqrt(out.wave.squaredNorm() / num_samples);
  if (rms > 0.0) out.wave *= 0.08 / rms;
  return out;
}

namespace {

struct SpeakerPool {
  // Built-in mode: speaker ids; corpus mode: one WAV per speaker.
  std::vector<int> ids;
  std::vector<std::string> files;
  bool from_corpus = false;
};

Eigen::VectorXd corpus_excerpt(const std::string& path, long num_samples,
                               std::mt19937_64& rng) {
  const Wave w = read_wav(path);
  if (w.channels() != 1)
    throw DataError("source corpus WAV must be mono: " + path);
  Eigen::VectorXd src = w.channel(0);
  if (src.size() < w.sample_rate / 2)
    throw DataError("source corpus WAV shorter than 0.5 s: " + path);
  Eigen::VectorXd tiled = src;
  while (tiled.size() < num_samples) {
    Eigen::VectorXd next(tiled.size() + src.size());
    next << tiled, src;
    tiled = next;
  }
  std::uniform_int_distribution<long> off(0, tiled.size() - num_samples);
  return tiled.segment(off(rng), num_samples);
}

}  // namespace

void synth_dataset(const DatasetConfig& cfg, const std::string& out_dir,
                   uint64_t seed) {
  if (cfg.n_train <= 0 || cfg.n_val <= 0 || cfg.n_test <= 0)
    throw DataError("dataset split sizes must be positive");
  fs::create_directories(fs::path(out_dir) / "wavs");

  SpeakerPool pool;
  if (!cfg.source_corpus.empty()) {
    pool.from_corpus = true;
    for (const auto& e : fs::directory_iterator(cfg.source_corpus))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        pool.files.push_back(e.path().string());
    std::sort(pool.files.begin(), pool.files.end());
    if (pool.files.size() < 6)
      throw DataError("source corpus too small for disjoint splits (need >= 6 WAVs)");
    for (size_t i = 0; i < pool.files.size(); ++i)
      pool.ids.push_back(static_cast<int>(i));
  } else {
    if (cfg.num_speakers < 6)
      throw DataError("need at least 6 built-in speakers for disjoint splits");
    for (int i = 0; i < cfg.num_speakers; ++i) pool.ids.push_back(i);
  }

  // Speaker-disjoint split: 2/3 train, 1/6 val, 1/6 test (at least 2 each).
  const int n_spk = static_cast<int>(pool.ids.size());
  const int n_test_spk = std::max(2, n_spk / 6);
  const int n_val_spk = std::max(2, n_spk / 6);
  const int n_train_spk = n_spk - n_val_spk - n_test_spk;
  if (n_train_spk < 2) throw DataError("source corpus too small for disjoint splits");

  struct Split {
    const char* name;
    int count;
    int spk_begin, spk_end;  // [begin, end)
  };
  const Split splits[3] = {
      {"train", cfg.n_train, 0, n_train_spk},
      {"val", cfg.n_val, n_train_spk, n_train_spk + n_val_spk},
      {"test", cfg.n_test, n_train_spk + n_val_spk, n_spk}};

  const long T = static_cast<long>(cfg.utt_seconds * cfg.sample_rate);
  for (int si = 0; si < 3; ++si) {
    const Split& sp = splits[si];
    Manifest man;
    for (int i = 0; i < sp.count; ++i) {
      const uint64_t utt_seed = derive_seed(seed, static_cast<uint64_t>(si) * 1000003 + i);
      std::mt19937_64 rng(utt_seed);
      std::uniform_int_distribution<int> spk_pick(sp.spk_begin, sp.spk_end - 1);
      const int spk_t = spk_pick(rng);
      int spk_i = spk_pick(rng);
      while (spk_i == spk_t) spk_i = spk_pick(rng);

      Utterance u;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s_%04d", sp.name, i);
      u.id = buf;
      u.speaker = pool.ids[spk_t];
      u.interferer_speaker = pool.ids[spk_i];
      u.scene = sample_scene(derive_seed(utt_seed, 1));

      Eigen::VectorXd tgt, itf;
      if (pool.from_corpus) {
        tgt = corpus_excerpt(pool.files[spk_t], T, rng);
        itf = corpus_excerpt(pool.files[spk_i], T, rng);
      } else {
        LabeledWave lw_t = synth_pseudo_speech(
            T, cfg.sample_rate, cfg.num_phones,
            speaker_formant_scale(u.speaker, cfg.num_speakers), rng);
        LabeledWave lw_i = synth_pseudo_speech(
            T, cfg.sample_rate, cfg.num_phones,
            speaker_formant_scale(u.interferer_speaker, cfg.num_speakers), rng);
        tgt = lw_t.wave;
        itf = lw_i.wave;
        u.labels = lw_t.labels;
      }

      const ScenePair pair = synthesize_scene(u.scene, tgt, itf, cfg.sample_rate);

      Wave mix;
      mix.sample_rate = cfg.sample_rate;
      mix.samples = pair.mixture.samples;
      Wave rev;
      rev.sample_rate = cfg.sample_rate;
      rev.samples = pair.reverb_target.samples.row(0);
      Wave cln;
      cln.sample_rate = cfg.sample_rate;
      cln.samples = tgt.transpose();

      const std::string rel_mix = std::string("wavs/") + u.id + "_mix.wav";
      const std::string rel_rev = std::string("wavs/") + u.id + "_rev.wav";
      const std::string rel_cln = std::string("wavs/") + u.id + "_cln.wav";
      write_wav((fs::path(out_dir) / rel_mix).string(), mix, WavFormat::Float32);
      write_wav((fs::path(out_dir) / rel_rev).string(), rev, WavFormat::Float32);
      write_wav((fs::path(out_dir) / rel_cln).string(), cln, WavFormat::Float32);
      u.mixture_wav = (fs::path(out_dir) / rel_mix).string();
      u.reverb_target_wav = (fs::path(out_dir) / rel_rev).string();
      u.clean_wav = (fs::path(out_dir) / rel_cln).string();
      man.utts.push_back(std::move(u));
    }
    man.save((fs::path(out_dir) / (std::string(sp.name) + ".jsonl")).string());
  }
}

}  // namespace mcse
