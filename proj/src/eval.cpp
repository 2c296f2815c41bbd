#include "mcse/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "mcse/common.hpp"
#include "mcse/dataset.hpp"
#include "mcse/losses.hpp"
#include "mcse/mask.hpp"
#include "mcse/train.hpp"
#include "mcse/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mcse {

int angle_bucket(double d) {
  if (d < 15.0) return 0;
  if (d < 45.0) return 1;
  if (d < 90.0) return 2;
  return 3;
}

const char* angle_bucket_name(int bucket) {
  switch (bucket) {
    case 0: return "0-15";
    case 1: return "15-45";
    case 2: return "45-90";
    default: return "90-180";
  }
}

namespace {

Eigen::VectorXd load_mono(const std::string& path) {
  const Wave w = read_wav(path);
  if (w.channels() != 1) throw DataError("expected mono WAV: " + path);
  return w.channel(0);
}

struct Agg {
  long n = 0;
  double si_in = 0, si_out = 0, sdr = 0, hole = 0, cer_sum = 0;
  long cer_n = 0;
  void add(const UttReport& r) {
    ++n;
    si_in += r.si_snr_in;
    si_out += r.si_snr_out;
    sdr += r.sdr_out;
    hole += r.hole_fraction;
    if (r.cer >= 0.0) {
      cer_sum += r.cer;
      ++cer_n;
    }
  }
  json to_json(const std::string& bucket) const {
    json j{{"aggregate", bucket},
           {"count", n},
           {"mean_si_snr_in", n ? si_in / n : 0.0},
           {"mean_si_snr_out", n ? si_out / n : 0.0},
           {"mean_si_snr_improvement", n ? (si_out - si_in) / n : 0.0},
           {"mean_sdr_out", n ? sdr / n : 0.0},
           {"mean_hole_fraction", n ? hole / n : 0.0}};
    if (cer_n > 0) j["mean_cer"] = cer_sum / cer_n;
    return j;
  }
};

}  // namespace

std::vector<UttReport> evaluate_corpus(const EvalConfig& cfg) {
  Manifest man = Manifest::load(cfg.manifest);

  std::optional<TcnMaskNet> net;
  if (!cfg.enh_ckpt.empty())
    net.emplace(enh_net_from_checkpoint(load_checkpoint(cfg.enh_ckpt)));
  std::optional<CldnnAm> am;
  if (!cfg.am_ckpt.empty())
    am.emplace(am_net_from_checkpoint(load_checkpoint(cfg.am_ckpt)));
  LogFbank fbank;

  std::vector<UttReport> rows;
  rows.reserve(man.utts.size());
  for (const Utterance& u : man.utts) {
    const Wave mix = read_wav(u.mixture_wav);
    const Eigen::VectorXd ref = load_mono(u.reverb_target_wav);
    const Eigen::VectorXd mix0 = mix.channel(0);
    Eigen::VectorXd enh;
    if (net)
      enh = enhance_wave(*net, mix, u.scene, cfg.frame_spec);
    else
      enh = mix0;  // passthrough: improvement is zero by construction

    UttReport r;
    r.utt_id = u.id;
    r.sir_db = u.scene.sir_db;
    r.angle_diff_deg = angle_difference_deg(u.scene);
    r.si_snr_in = si_snr_db(mix0, ref);
    r.si_snr_out = si_snr_db(enh, ref);
    r.sdr_out = sdr_db(enh, ref);
    r.hole_fraction = hole_fraction(enh, ref, cfg.frame_spec, cfg.hole_floor_ratio,
                                    cfg.hole_active_db);
    if (am && !u.labels.empty())
      r.cer = utterance_cer(*am, fbank, enh, u.labels);
    rows.push_back(std::move(r));
  }

  if (!cfg.report_path.empty()) {
    fs::path p(cfg.report_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(cfg.report_path);
    if (!os) throw DataError("cannot write report: " + cfg.report_path);
    for (const UttReport& r : rows) {
      json j{{"utt_id", r.utt_id},
             {"sir_db", r.sir_db},
             {"angle_diff_deg", r.angle_diff_deg},
             {"si_snr_in", r.si_snr_in},
             {"si_snr_out", r.si_snr_out},
             {"sdr_out", r.sdr_out},
             {"hole_fraction", r.hole_fraction}};
      if (r.cer >= 0.0) j["cer"] = r.cer;
      os << j.dump() << "\n";
    }
    Agg overall;
    std::map<int, Agg> by_sir;
    std::map<int, Agg> by_angle;
    for (const UttReport& r : rows) {
      overall.add(r);
      by_sir[static_cast<int>(std::lround(r.sir_db))].add(r);
      by_angle[angle_bucket(r.angle_diff_deg)].add(r);
    }
    os << overall.to_json("all").dump() << "\n";
    for (const auto& [sir, agg] : by_sir)
      os << agg.to_json("sir:" + std::to_string(sir)).dump() << "\n";
    for (const auto& [bucket, agg] : by_angle)
      os << agg.to_json(std::string("angle:") + angle_bucket_name(bucket)).dump()
         << "\n";
  }
  return rows;
}

}  // namespace mcse
