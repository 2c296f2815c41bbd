#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcse/common.hpp"
#include "mcse/config.hpp"
#include "mcse/dataset.hpp"
#include "mcse/eval.hpp"
#include "mcse/mask.hpp"
#include "mcse/pgm.hpp"
#include "mcse/tensor_io.hpp"
#include "mcse/train.hpp"
#include "mcse/wav.hpp"

namespace fs = std::filesystem;
using namespace mcse;

namespace {

struct GlobalOpts {
  uint64_t seed = 0;
  std::string config_path;
  bool deterministic = false;
  int threads = 1;
  std::string workdir;
  KvConfig file;  // loaded from config_path
};

// Precedence: explicit flag > config file > built-in default.
template <typename T>
T resolve_opt(const CLI::Option* opt, const KvConfig& file, const std::string& key,
              T flag_value);

template <>
int resolve_opt<int>(const CLI::Option* opt, const KvConfig& file,
                     const std::string& key, int v) {
  if (opt && opt->count() > 0) return v;
  return file.get_int(key, v);
}

template <>
double resolve_opt<double>(const CLI::Option* opt, const KvConfig& file,
                           const std::string& key, double v) {
  if (opt && opt->count() > 0) return v;
  return file.get_double(key, v);
}

template <>
uint64_t resolve_opt<uint64_t>(const CLI::Option* opt, const KvConfig& file,
                               const std::string& key, uint64_t v) {
  if (opt && opt->count() > 0) return v;
  return static_cast<uint64_t>(file.get_double(key, static_cast<double>(v)));
}

template <>
std::string resolve_opt<std::string>(const CLI::Option* opt, const KvConfig& file,
                                     const std::string& key, std::string v) {
  if (opt && opt->count() > 0) return v;
  return file.get_str(key, v);
}

void emit_resolved(const KvConfig& resolved) {
  std::cout << "# resolved configuration\n" << resolved.serialize();
  std::cout.flush();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcse: multi-channel target-speaker enhancement workbench"};
  app.require_subcommand(1);

  GlobalOpts g;
  auto* opt_seed = app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--config", g.config_path, "key=value configuration file");
  app.add_flag("--deterministic", g.deterministic, "force serial, reproducible runs");
  auto* opt_threads =
      app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--workdir", g.workdir, "root for relative paths");

  // ---- synth-dataset
  auto* synth = app.add_subcommand("synth-dataset", "simulate a labeled corpus");
  std::string synth_out;
  DatasetConfig dcfg;
  synth->add_option("--out", synth_out, "output directory")->required();
  auto* o_ntr = synth->add_option("--n-train", dcfg.n_train, "training utterances");
  auto* o_nva = synth->add_option("--n-valid", dcfg.n_val, "validation utterances");
  auto* o_nte = synth->add_option("--n-test", dcfg.n_test, "test utterances");
  auto* o_sec = synth->add_option("--utt-seconds", dcfg.utt_seconds, "utterance length");
  auto* o_nph = synth->add_option("--num-phones", dcfg.num_phones, "phoneme inventory");
  auto* o_nsp = synth->add_option("--num-speakers", dcfg.num_speakers, "built-in voices");
  synth->add_option("--source-corpus", dcfg.source_corpus,
                    "directory of mono 16 kHz WAVs to use as sources");

  // ---- train
  auto* train = app.add_subcommand("train", "run a training regime");
  std::string regime_str, train_data, train_val, train_out, train_out_am;
  TrainConfig tcfg;
  std::string conditions_csv = "clean,reverb,mixture,enhanced";
  train->add_option("--regime", regime_str,
                    "one of {base, sept-1, sept-2, am, joint, joint-frozen}")
      ->required();
  train->add_option("--data", train_data, "training manifest")->required();
  train->add_option("--val", train_val, "validation manifest");
  train->add_option("--out", train_out, "output checkpoint")->required();
  train->add_option("--out-am", train_out_am, "output AM checkpoint (joint)");
  train->add_option("--init-ckpt", tcfg.init_ckpt, "warm-start checkpoint");
  train->add_option("--enh-ckpt", tcfg.enh_ckpt, "pretrained enhancement (joint)");
  train->add_option("--am-ckpt", tcfg.am_ckpt, "pretrained acoustic model (joint)");
  auto* o_epochs = train->add_option("--epochs", tcfg.epochs, "training epochs");
  auto* o_lr = train->add_option("--lr", tcfg.lr, "learning rate");
  auto* o_alpha = train->add_option("--alpha", tcfg.alpha, "fbank loss weight");
  auto* o_aux = train->add_option("--aux-sisnr", tcfg.aux_sisnr_weight,
                                  "extra -SI-SNR weight during joint training");
  auto* o_maxu = train->add_option("--max-utts", tcfg.max_utts, "truncate train set");
  auto* o_cond = train->add_option("--conditions", conditions_csv,
                                   "AM conditions (csv of clean,reverb,mixture,enhanced)");
  auto* o_tb = train->add_option("--tcn-bottleneck", tcfg.tcn.bottleneck, "");
  auto* o_th = train->add_option("--tcn-hidden", tcfg.tcn.hidden, "");
  auto* o_tx = train->add_option("--tcn-blocks", tcfg.tcn.blocks_per_repeat, "");
  auto* o_tr = train->add_option("--tcn-repeats", tcfg.tcn.repeats, "");
  auto* o_ac1 = train->add_option("--am-conv1", tcfg.am.conv1_maps, "");
  auto* o_ac2 = train->add_option("--am-conv2", tcfg.am.conv2_maps, "");
  auto* o_alh = train->add_option("--am-lstm-hidden", tcfg.am.lstm_hidden, "");
  auto* o_all = train->add_option("--am-lstm-layers", tcfg.am.lstm_layers, "");
  auto* o_anp = train->add_option("--am-num-phones", tcfg.am.num_phones, "");

  // ---- enhance
  auto* enh = app.add_subcommand("enhance", "mask-enhance a corpus");
  std::string enh_ckpt, enh_data, enh_out;
  enh->add_option("--enh-ckpt", enh_ckpt, "enhancement checkpoint")->required();
  enh->add_option("--data", enh_data, "manifest")->required();
  enh->add_option("--out", enh_out, "output directory")->required();

  // ---- evaluate
  auto* ev = app.add_subcommand("evaluate", "score a system on a manifest");
  EvalConfig ecfg;
  bool want_cer = false;
  ev->add_option("--data", ecfg.manifest, "test manifest")->required();
  ev->add_option("--report", ecfg.report_path, "output report (jsonl)")->required();
  ev->add_option("--enh-ckpt", ecfg.enh_ckpt, "enhancement checkpoint (optional)");
  ev->add_option("--am-ckpt", ecfg.am_ckpt, "acoustic model for CER (optional)");
  ev->add_flag("--cer", want_cer, "require CER (needs --am-ckpt)");
  auto* o_hfr = ev->add_option("--hole-floor-ratio", ecfg.hole_floor_ratio, "");
  auto* o_had = ev->add_option("--hole-active-db", ecfg.hole_active_db, "");

  // ---- plot
  auto* plot = app.add_subcommand("plot", "render spectrogram graymaps");
  std::string plot_wav, plot_data, plot_utt, plot_ckpt, plot_out;
  int plot_margin = 8;
  plot->add_option("--wav", plot_wav, "single waveform to render");
  plot->add_option("--data", plot_data, "manifest for triplet mode");
  plot->add_option("--utt", plot_utt, "utterance id in the manifest");
  plot->add_option("--enh-ckpt", plot_ckpt, "enhancement checkpoint for the third panel");
  plot->add_option("--out", plot_out, "output .pgm path")->required();
  plot->add_option("--margin", plot_margin, "margin pixels");

  // ---- dump-features
  auto* dump = app.add_subcommand("dump-features", "write the network input tensor");
  std::string dump_wav, dump_out;
  double dump_doa = 0.0;
  dump->add_option("--wav", dump_wav, "6-channel mixture WAV")->required();
  dump->add_option("--doa", dump_doa, "target direction of arrival (deg)")->required();
  dump->add_option("--out", dump_out, "output binary tensor")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!g.workdir.empty()) {
      if (!fs::is_directory(g.workdir))
        throw UsageError("--workdir is not a directory: " + g.workdir);
      fs::current_path(g.workdir);
    }
    if (!g.config_path.empty()) g.file = KvConfig::load(g.config_path);
    g.seed = resolve_opt(opt_seed, g.file, "seed", g.seed);
    g.threads = resolve_opt(opt_threads, g.file, "threads", g.threads);

    KvConfig resolved;
    resolved.set("seed", std::to_string(g.seed));
    resolved.set("deterministic", g.deterministic ? "true" : "false");
    resolved.set("threads", std::to_string(g.threads));

    if (*synth) {
      dcfg.n_train = resolve_opt(o_ntr, g.file, "n_train", dcfg.n_train);
      dcfg.n_val = resolve_opt(o_nva, g.file, "n_valid", dcfg.n_val);
      dcfg.n_test = resolve_opt(o_nte, g.file, "n_test", dcfg.n_test);
      dcfg.utt_seconds = resolve_opt(o_sec, g.file, "utt_seconds", dcfg.utt_seconds);
      dcfg.num_phones = resolve_opt(o_nph, g.file, "num_phones", dcfg.num_phones);
      dcfg.num_speakers = resolve_opt(o_nsp, g.file, "num_speakers", dcfg.num_speakers);
      resolved.set("command", "synth-dataset");
      resolved.set("out", synth_out);
      resolved.set("n_train", std::to_string(dcfg.n_train));
      resolved.set("n_valid", std::to_string(dcfg.n_val));
      resolved.set("n_test", std::to_string(dcfg.n_test));
      resolved.set("utt_seconds", std::to_string(dcfg.utt_seconds));
      resolved.set("num_phones", std::to_string(dcfg.num_phones));
      resolved.set("num_speakers", std::to_string(dcfg.num_speakers));
      if (!dcfg.source_corpus.empty()) resolved.set("source_corpus", dcfg.source_corpus);
      emit_resolved(resolved);
      synth_dataset(dcfg, synth_out, g.seed);
      std::cout << "wrote dataset under " << synth_out << "\n";
      return 0;
    }

    if (*train) {
      tcfg.regime = parse_regime(regime_str);
      tcfg.train_manifest = train_data;
      tcfg.val_manifest = train_val;
      tcfg.out_checkpoint = train_out;
      tcfg.out_am_checkpoint = train_out_am;
      tcfg.seed = g.seed;
      tcfg.deterministic = g.deterministic;
      tcfg.epochs = resolve_opt(o_epochs, g.file, "epochs", tcfg.epochs);
      const bool joint =
          tcfg.regime == Regime::Joint || tcfg.regime == Regime::JointFrozenAm;
      if (joint && o_lr->count() == 0 && !g.file.has("lr"))
        tcfg.lr = 1e-4;  // fine-tuning default: pretraining lr / 10
      else
        tcfg.lr = resolve_opt(o_lr, g.file, "lr", tcfg.lr);
      tcfg.alpha = resolve_opt(o_alpha, g.file, "alpha", tcfg.alpha);
      tcfg.aux_sisnr_weight = resolve_opt(o_aux, g.file, "aux_sisnr", tcfg.aux_sisnr_weight);
      tcfg.max_utts = resolve_opt(o_maxu, g.file, "max_utts", tcfg.max_utts);
      conditions_csv = resolve_opt(o_cond, g.file, "conditions", conditions_csv);
      tcfg.am_conditions = split_csv(conditions_csv);
      tcfg.tcn.bottleneck = resolve_opt(o_tb, g.file, "tcn_bottleneck", tcfg.tcn.bottleneck);
      tcfg.tcn.hidden = resolve_opt(o_th, g.file, "tcn_hidden", tcfg.tcn.hidden);
      tcfg.tcn.blocks_per_repeat = resolve_opt(o_tx, g.file, "tcn_blocks", tcfg.tcn.blocks_per_repeat);
      tcfg.tcn.repeats = resolve_opt(o_tr, g.file, "tcn_repeats", tcfg.tcn.repeats);
      tcfg.am.conv1_maps = resolve_opt(o_ac1, g.file, "am_conv1", tcfg.am.conv1_maps);
      tcfg.am.conv2_maps = resolve_opt(o_ac2, g.file, "am_conv2", tcfg.am.conv2_maps);
      tcfg.am.lstm_hidden = resolve_opt(o_alh, g.file, "am_lstm_hidden", tcfg.am.lstm_hidden);
      tcfg.am.lstm_layers = resolve_opt(o_all, g.file, "am_lstm_layers", tcfg.am.lstm_layers);
      tcfg.am.num_phones = resolve_opt(o_anp, g.file, "am_num_phones", tcfg.am.num_phones);

      resolved.set("command", "train");
      resolved.set("regime", regime_str);
      resolved.set("data", train_data);
      if (!train_val.empty()) resolved.set("val", train_val);
      resolved.set("out", train_out);
      resolved.set("epochs", std::to_string(tcfg.epochs));
      resolved.set("lr", std::to_string(tcfg.lr));
      resolved.set("alpha", std::to_string(tcfg.alpha));
      resolved.set("conditions", conditions_csv);
      emit_resolved(resolved);

      TrainResult r;
      if (tcfg.regime == Regime::AmPretrain)
        r = train_am(tcfg);
      else if (tcfg.regime == Regime::Joint || tcfg.regime == Regime::JointFrozenAm)
        r = joint_finetune(tcfg);
      else
        r = train_enhancement(tcfg);
      std::cout << "final val metric: " << r.final_val_metric << "\n";
      return 0;
    }

    if (*enh) {
      resolved.set("command", "enhance");
      resolved.set("enh_ckpt", enh_ckpt);
      resolved.set("data", enh_data);
      resolved.set("out", enh_out);
      emit_resolved(resolved);
      const std::string man = enhance_corpus(enh_ckpt, enh_data, enh_out);
      std::cout << "wrote " << man << "\n";
      return 0;
    }

    if (*ev) {
      if (want_cer && ecfg.am_ckpt.empty())
        throw UsageError("--cer requires --am-ckpt");
      ecfg.hole_floor_ratio = resolve_opt(o_hfr, g.file, "hole_floor_ratio", ecfg.hole_floor_ratio);
      ecfg.hole_active_db = resolve_opt(o_had, g.file, "hole_active_db", ecfg.hole_active_db);
      resolved.set("command", "evaluate");
      resolved.set("data", ecfg.manifest);
      resolved.set("report", ecfg.report_path);
      if (!ecfg.enh_ckpt.empty()) resolved.set("enh_ckpt", ecfg.enh_ckpt);
      if (!ecfg.am_ckpt.empty()) resolved.set("am_ckpt", ecfg.am_ckpt);
      resolved.set("hole_floor_ratio", std::to_string(ecfg.hole_floor_ratio));
      resolved.set("hole_active_db", std::to_string(ecfg.hole_active_db));
      emit_resolved(resolved);
      const auto rows = evaluate_corpus(ecfg);
      std::cout << "wrote " << rows.size() << " report rows to " << ecfg.report_path
                << "\n";
      return 0;
    }

    if (*plot) {
      resolved.set("command", "plot");
      resolved.set("out", plot_out);
      emit_resolved(resolved);
      const FrameSpec fspec;
      if (!plot_wav.empty()) {
        const Wave w = read_wav(plot_wav);
        write_spectrogram_pgm(plot_out, w.channel(0), fspec, plot_margin);
      } else {
        if (plot_data.empty() || plot_utt.empty())
          throw UsageError("plot needs either --wav or --data with --utt");
        const Manifest man = Manifest::load(plot_data);
        const Utterance* u = nullptr;
        for (const auto& cand : man.utts)
          if (cand.id == plot_utt) u = &cand;
        if (!u) throw DataError("utterance not found in manifest: " + plot_utt);
        const Wave mix = read_wav(u->mixture_wav);
        const Wave rev = read_wav(u->reverb_target_wav);
        std::vector<Eigen::VectorXd> waves = {rev.channel(0), mix.channel(0)};
        std::vector<std::string> names = {"reverb", "mixture"};
        if (!plot_ckpt.empty()) {
          TcnMaskNet net = enh_net_from_checkpoint(load_checkpoint(plot_ckpt));
          waves.push_back(enhance_wave(net, mix, u->scene, fspec));
          names.push_back("enhanced");
        }
        write_panel_pgm(plot_out, waves, fspec, plot_margin);
        for (size_t i = 0; i < waves.size(); ++i)
          std::cout << "hole_fraction " << names[i] << " = "
                    << hole_fraction(waves[i], rev.channel(0), fspec) << "\n";
      }
      std::cout << "wrote " << plot_out << "\n";
      return 0;
    }

    if (*dump) {
      resolved.set("command", "dump-features");
      resolved.set("wav", dump_wav);
      resolved.set("doa", std::to_string(dump_doa));
      resolved.set("out", dump_out);
      emit_resolved(resolved);
      const Wave w = read_wav(dump_wav);
      ArrayGeometry array;
      array.num_mics = w.channels();
      const FeaturePack fp = compute_features(w, dump_doa, array, FrameSpec{});
      std::ofstream os(dump_out, std::ios::binary);
      if (!os) throw DataError("cannot write " + dump_out);
      write_matrix(os, fp.rows);
      std::cout << "wrote " << fp.rows.rows() << "x" << fp.rows.cols()
                << " feature tensor to " << dump_out << "\n";
      return 0;
    }

    throw UsageError("no subcommand selected");
  } catch (const UsageError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
}
