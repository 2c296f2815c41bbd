#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "mcse/dataset.hpp"
#include "mcse/eval.hpp"
#include "mcse/train.hpp"

using namespace mcse;
namespace fs = std::filesystem;

namespace {

struct EvalData {
  fs::path root;
  std::string test_man;
};

const EvalData& eval_data() {
  static const EvalData d = [] {
    EvalData e;
    e.root = fs::temp_directory_path() / "mcse_test_eval_data";
    fs::remove_all(e.root);
    DatasetConfig dc;
    dc.n_train = 1;
    dc.n_val = 1;
    dc.n_test = 4;
    dc.utt_seconds = 1.0;
    dc.num_phones = 8;
    synth_dataset(dc, e.root.string(), 21);
    e.test_man = (e.root / "test.jsonl").string();
    return e;
  }();
  return d;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

}  // namespace

TEST_CASE("angle buckets split at 15, 45 and 90 degrees") {
  CHECK(angle_bucket(0.0) == 0);
  CHECK(angle_bucket(14.999) == 0);
  CHECK(angle_bucket(15.0) == 1);
  CHECK(angle_bucket(44.999) == 1);
  CHECK(angle_bucket(45.0) == 2);
  CHECK(angle_bucket(89.999) == 2);
  CHECK(angle_bucket(90.0) == 3);
  CHECK(angle_bucket(180.0) == 3);
  CHECK(std::string(angle_bucket_name(0)) == "0-15");
  CHECK(std::string(angle_bucket_name(1)) == "15-45");
  CHECK(std::string(angle_bucket_name(2)) == "45-90");
  CHECK(std::string(angle_bucket_name(3)) == "90-180");
}

TEST_CASE("passthrough evaluation leaves improvement at exactly zero") {
  EvalConfig cfg;
  cfg.manifest = eval_data().test_man;
  cfg.report_path = (eval_data().root / "report_pass.jsonl").string();
  const std::vector<UttReport> rows = evaluate_corpus(cfg);
  REQUIRE(rows.size() == 4);
  for (const UttReport& r : rows) {
    CHECK(r.si_snr_out == r.si_snr_in);
    CHECK(r.cer == -1.0);  // no acoustic model given
    CHECK(r.hole_fraction >= 0.0);
    CHECK(r.hole_fraction <= 1.0);
    CHECK((r.sir_db == -6.0 || r.sir_db == 0.0 || r.sir_db == 6.0));
    CHECK(r.angle_diff_deg >= 0.0);
    CHECK(r.angle_diff_deg <= 180.0);
  }
}

TEST_CASE("the report carries per-utterance rows and consistent aggregates") {
  EvalConfig cfg;
  cfg.manifest = eval_data().test_man;
  cfg.report_path = (eval_data().root / "report.jsonl").string();
  const std::vector<UttReport> rows = evaluate_corpus(cfg);
  const auto lines = read_jsonl(cfg.report_path);
  REQUIRE(lines.size() > rows.size());

  double si_in = 0, si_out = 0, hole = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& j = lines[i];
    CHECK(j["utt_id"].get<std::string>() == rows[i].utt_id);
    CHECK(j["si_snr_in"].get<double>() == doctest::Approx(rows[i].si_snr_in));
    CHECK(j["si_snr_out"].get<double>() == doctest::Approx(rows[i].si_snr_out));
    CHECK(j["sdr_out"].get<double>() == doctest::Approx(rows[i].sdr_out));
    CHECK(!j.contains("cer"));
    si_in += rows[i].si_snr_in;
    si_out += rows[i].si_snr_out;
    hole += rows[i].hole_fraction;
  }

  const auto& all = lines[rows.size()];
  CHECK(all["aggregate"].get<std::string>() == "all");
  CHECK(all["count"].get<long>() == static_cast<long>(rows.size()));
  const double n = static_cast<double>(rows.size());
  CHECK(all["mean_si_snr_in"].get<double>() == doctest::Approx(si_in / n));
  CHECK(all["mean_si_snr_out"].get<double>() == doctest::Approx(si_out / n));
  CHECK(all["mean_si_snr_improvement"].get<double>() ==
        doctest::Approx((si_out - si_in) / n));
  CHECK(all["mean_hole_fraction"].get<double>() == doctest::Approx(hole / n));
  CHECK(!all.contains("mean_cer"));

  // Bucket rows partition the corpus: SIR counts sum to the total, as do
  // angle-bucket counts.
  long sir_count = 0, angle_count = 0;
  for (size_t i = rows.size() + 1; i < lines.size(); ++i) {
    const std::string name = lines[i]["aggregate"].get<std::string>();
    if (name.rfind("sir:", 0) == 0) sir_count += lines[i]["count"].get<long>();
    if (name.rfind("angle:", 0) == 0) angle_count += lines[i]["count"].get<long>();
  }
  CHECK(sir_count == static_cast<long>(rows.size()));
  CHECK(angle_count == static_cast<long>(rows.size()));
}

TEST_CASE("an enhancement checkpoint and an acoustic model fill every column") {
  const fs::path dir = eval_data().root / "ckpts";
  fs::create_directories(dir);

  TrainConfig ecfg;
  ecfg.regime = Regime::Sept1CirmSisnr;
  ecfg.train_manifest = eval_data().test_man;
  ecfg.out_checkpoint = (dir / "enh.ckpt").string();
  ecfg.epochs = 1;
  ecfg.max_utts = 2;
  ecfg.tcn.bottleneck = 16;
  ecfg.tcn.hidden = 24;
  ecfg.tcn.blocks_per_repeat = 2;
  ecfg.tcn.repeats = 1;
  train_enhancement(ecfg);

  TrainConfig acfg;
  acfg.regime = Regime::AmPretrain;
  acfg.train_manifest = eval_data().test_man;
  acfg.out_checkpoint = (dir / "am.ckpt").string();
  acfg.epochs = 1;
  acfg.max_utts = 2;
  acfg.am_conditions = {"reverb"};
  acfg.am.num_phones = 8;
  acfg.am.conv1_maps = 2;
  acfg.am.conv2_maps = 3;
  acfg.am.lstm_layers = 1;
  acfg.am.lstm_hidden = 8;
  train_am(acfg);

  EvalConfig cfg;
  cfg.manifest = eval_data().test_man;
  cfg.enh_ckpt = ecfg.out_checkpoint;
  cfg.am_ckpt = acfg.out_checkpoint;
  cfg.report_path = (eval_data().root / "report_full.jsonl").string();
  const std::vector<UttReport> rows = evaluate_corpus(cfg);
  for (const UttReport& r : rows) {
    CHECK(r.cer >= 0.0);
    CHECK(std::isfinite(r.si_snr_out));
  }
  const auto lines = read_jsonl(cfg.report_path);
  CHECK(lines[0].contains("cer"));
  // Aggregates now include the CER column.
  CHECK(lines[rows.size()].contains("mean_cer"));
}
