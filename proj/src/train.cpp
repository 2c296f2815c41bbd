#include "mcse/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "mcse/common.hpp"
#include "mcse/ctc.hpp"
#include "mcse/losses.hpp"
#include "mcse/mask.hpp"
#include "mcse/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mcse {

Regime parse_regime(const std::string& name) {
  if (name == "base") return Regime::BaseIrmSisnr;
  if (name == "sept-1") return Regime::Sept1CirmSisnr;
  if (name == "sept-2") return Regime::Sept2CirmMultitask;
  if (name == "am") return Regime::AmPretrain;
  if (name == "joint") return Regime::Joint;
  if (name == "joint-frozen") return Regime::JointFrozenAm;
  throw UsageError("unknown regime '" + name +
                   "'; expected one of {base, sept-1, sept-2, am, joint, joint-frozen}");
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::BaseIrmSisnr: return "base";
    case Regime::Sept1CirmSisnr: return "sept-1";
    case Regime::Sept2CirmMultitask: return "sept-2";
    case Regime::AmPretrain: return "am";
    case Regime::Joint: return "joint";
    case Regime::JointFrozenAm: return "joint-frozen";
  }
  return "?";
}

namespace {

Eigen::VectorXd load_mono(const std::string& path) {
  const Wave w = read_wav(path);
  if (w.channels() != 1) throw DataError("expected mono WAV: " + path);
  return w.channel(0);
}

struct EpochLogger {
  std::ofstream os;
  uint64_t seed = 0;
  explicit EpochLogger(const std::string& path, uint64_t seed_) : seed(seed_) {
    if (path.empty()) return;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    os.open(path);
    if (!os) throw DataError("cannot open training log: " + path);
  }
  void log(int epoch, double train_loss, const char* metric_name, double metric,
           double wall_s) {
    if (!os.is_open()) return;
    json j{{"epoch", epoch},
           {"train_loss", train_loss},
           {"metric", metric_name},
           {"val_metric", metric},
           {"wall_s", wall_s},
           {"seed", seed}};
    os << j.dump() << "\n";
    os.flush();
  }
};

std::string default_log_path(const TrainConfig& cfg) {
  return cfg.log_path.empty() ? cfg.out_checkpoint + ".log.jsonl" : cfg.log_path;
}

void ensure_parent(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

struct EnhForward {
  double loss = 0.0;
  double si_snr_db = 0.0;
  Eigen::VectorXd enhanced;  // padded to the mixture length
};

EnhForward run_enhancement_utt(TcnMaskNet& net, const Utterance& u,
                               const TrainConfig& cfg, const LogFbank& fbank,
                               bool do_backward) {
  const Wave mix = read_wav(u.mixture_wav);
  const Eigen::VectorXd ref = load_mono(u.reverb_target_wav);
  if (ref.size() != mix.num_samples())
    throw DataError("mixture/reference length mismatch for " + u.id);
  FeaturePack fp = compute_features(mix, u.scene.target_doa_deg, u.scene.array,
                                    cfg.frame_spec);
  const Spectrogram& y0 = fp.channel_specs[0];
  const Eigen::MatrixXd raw = net.forward(fp.rows);
  const long emit = cfg.frame_spec.emitted_samples(mix.num_samples());
  Eigen::VectorXd shat;
  if (net.config().mask_kind == MaskKind::Irm)
    shat = apply_irm(raw, y0, emit);
  else
    shat = apply_cirm(net.to_complex_mask(raw), y0, emit);
  EnhForward out;
  out.enhanced = Eigen::VectorXd::Zero(ref.size());
  out.enhanced.head(emit) = shat;

  Eigen::VectorXd grad_wave;
  if (cfg.regime == Regime::Sept2CirmMultitask) {
    const MultiTaskResult mt = multitask_loss(out.enhanced, ref, cfg.alpha, fbank);
    out.loss = mt.total;
    out.si_snr_db = mt.si_snr_db;
    if (do_backward) grad_wave = mt.grad;
  } else {
    const SiSnrGrad sg = si_snr_with_grad(out.enhanced, ref);
    out.loss = -sg.value_db;
    out.si_snr_db = sg.value_db;
    if (do_backward) grad_wave = -sg.grad;
  }
  if (do_backward) {
    const Eigen::VectorXd gw = grad_wave.head(emit);
    if (net.config().mask_kind == MaskKind::Irm) {
      net.backward(irm_mask_grad(gw, y0));
    } else {
      net.backward(net.complex_grad_to_raw(cirm_mask_grad(gw, y0)));
    }
  }
  return out;
}

double mean_input_si_snr(const Manifest& man) {
  double sum = 0.0;
  for (const Utterance& u : man.utts) {
    const Wave mix = read_wav(u.mixture_wav);
    const Eigen::VectorXd ref = load_mono(u.reverb_target_wav);
    sum += si_snr_db(mix.channel(0), ref);
  }
  return sum / static_cast<double>(man.utts.size());
}

Manifest load_training_manifest(const TrainConfig& cfg) {
  Manifest man = Manifest::load(cfg.train_manifest);
  if (cfg.max_utts > 0 && static_cast<int>(man.utts.size()) > cfg.max_utts)
    man.utts.resize(cfg.max_utts);
  return man;
}

Eigen::VectorXd condition_wave(const Utterance& u, const std::string& cond) {
  if (cond == "clean") {
    if (u.clean_wav.empty()) throw DataError("manifest lacks clean_wav for " + u.id);
    return load_mono(u.clean_wav);
  }
  if (cond == "reverb") return load_mono(u.reverb_target_wav);
  if (cond == "mixture") return read_wav(u.mixture_wav).channel(0);
  if (cond == "enhanced") {
    if (u.enhanced_wav.empty())
      throw DataError("manifest lacks enhanced_wav for " + u.id +
                      "; run the enhance step first");
    return load_mono(u.enhanced_wav);
  }
  throw UsageError("unknown AM condition '" + cond +
                   "'; expected subset of {clean, reverb, mixture, enhanced}");
}

double wall_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Checkpoint make_enh_checkpoint(TcnMaskNet& net, const TrainConfig& cfg) {
  Checkpoint ck;
  const TcnConfig& tc = net.config();
  ck.meta["kind"] = "enh";
  ck.meta["mask"] = tc.mask_kind == MaskKind::Irm ? "irm" : "cirm";
  ck.meta["input_dim"] = std::to_string(tc.input_dim);
  ck.meta["num_bins"] = std::to_string(tc.num_bins);
  ck.meta["bottleneck"] = std::to_string(tc.bottleneck);
  ck.meta["hidden"] = std::to_string(tc.hidden);
  ck.meta["blocks_per_repeat"] = std::to_string(tc.blocks_per_repeat);
  ck.meta["repeats"] = std::to_string(tc.repeats);
  ck.meta["regime"] = regime_name(cfg.regime);
  ck.meta["seed"] = std::to_string(cfg.seed);
  ck.meta["lr"] = std::to_string(cfg.lr);
  ck.meta["alpha"] = std::to_string(cfg.alpha);
  ck.meta["frame_kernel"] = std::to_string(cfg.frame_spec.kernel_size);
  ck.meta["frame_hop"] = std::to_string(cfg.frame_spec.hop);
  ck.meta["sample_rate"] = std::to_string(cfg.frame_spec.sample_rate);
  pack_params(net.params(), &ck);
  return ck;
}

Checkpoint make_am_checkpoint(CldnnAm& net, const TrainConfig& cfg) {
  Checkpoint ck;
  const CldnnConfig& ac = net.config();
  ck.meta["kind"] = "am";
  ck.meta["num_mels"] = std::to_string(ac.num_mels);
  ck.meta["num_phones"] = std::to_string(ac.num_phones);
  ck.meta["conv1_maps"] = std::to_string(ac.conv1_maps);
  ck.meta["conv2_maps"] = std::to_string(ac.conv2_maps);
  ck.meta["lstm_layers"] = std::to_string(ac.lstm_layers);
  ck.meta["lstm_hidden"] = std::to_string(ac.lstm_hidden);
  ck.meta["regime"] = regime_name(cfg.regime);
  ck.meta["seed"] = std::to_string(cfg.seed);
  ck.meta["lr"] = std::to_string(cfg.lr);
  ck.meta["lfb_win"] = std::to_string(cfg.lfb.win);
  ck.meta["lfb_hop"] = std::to_string(cfg.lfb.hop);
  ck.meta["lfb_nfft"] = std::to_string(cfg.lfb.nfft);
  pack_params(net.params(), &ck);
  return ck;
}

TcnMaskNet enh_net_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta_str("kind") != "enh")
    throw DataError("checkpoint is not an enhancement model");
  TcnConfig tc;
  tc.mask_kind = ckpt.meta_str("mask") == "irm" ? MaskKind::Irm : MaskKind::Cirm;
  tc.input_dim = ckpt.meta_int("input_dim", tc.input_dim);
  tc.num_bins = ckpt.meta_int("num_bins", tc.num_bins);
  tc.bottleneck = ckpt.meta_int("bottleneck", tc.bottleneck);
  tc.hidden = ckpt.meta_int("hidden", tc.hidden);
  tc.blocks_per_repeat = ckpt.meta_int("blocks_per_repeat", tc.blocks_per_repeat);
  tc.repeats = ckpt.meta_int("repeats", tc.repeats);
  TcnMaskNet net(tc, 0);
  unpack_params(ckpt, net.params());
  return net;
}

CldnnAm am_net_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta_str("kind") != "am")
    throw DataError("checkpoint is not an acoustic model");
  CldnnConfig ac;
  ac.num_mels = ckpt.meta_int("num_mels", ac.num_mels);
  ac.num_phones = ckpt.meta_int("num_phones", ac.num_phones);
  ac.conv1_maps = ckpt.meta_int("conv1_maps", ac.conv1_maps);
  ac.conv2_maps = ckpt.meta_int("conv2_maps", ac.conv2_maps);
  ac.lstm_layers = ckpt.meta_int("lstm_layers", ac.lstm_layers);
  ac.lstm_hidden = ckpt.meta_int("lstm_hidden", ac.lstm_hidden);
  CldnnAm net(ac, 0);
  unpack_params(ckpt, net.params());
  return net;
}

double utterance_cer(CldnnAm& am, const LogFbank& fbank, const Eigen::VectorXd& wave,
                     const std::vector<int>& labels) {
  if (labels.empty()) throw DataError("utterance has no labels");
  const Eigen::MatrixXd logp = am.forward(fbank.forward(wave));
  return cer(ctc_greedy_decode(logp, am.config().blank_id()), labels);
}

TrainResult train_enhancement(const TrainConfig& cfg) {
  if (cfg.regime != Regime::BaseIrmSisnr && cfg.regime != Regime::Sept1CirmSisnr &&
      cfg.regime != Regime::Sept2CirmMultitask)
    throw UsageError("train_enhancement requires an enhancement regime");
  Manifest train = load_training_manifest(cfg);
  const bool have_val = !cfg.val_manifest.empty();
  Manifest val;
  if (have_val) val = Manifest::load(cfg.val_manifest);

  TcnConfig tc = cfg.tcn;
  tc.mask_kind = cfg.regime == Regime::BaseIrmSisnr ? MaskKind::Irm : MaskKind::Cirm;
  TcnMaskNet net(tc, cfg.seed);
  if (!cfg.init_ckpt.empty())
    unpack_params(load_checkpoint(cfg.init_ckpt), net.params());

  LogFbank fbank(cfg.lfb);
  AdamConfig ac;
  ac.lr = cfg.lr;
  Adam adam(net.params(), ac);
  EpochLogger logger(default_log_path(cfg), cfg.seed);

  const double input_snr = have_val ? mean_input_si_snr(val) : 0.0;
  std::vector<size_t> order(train.utts.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult res;
  res.val_input_si_snr_db = input_snr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 order_rng(derive_seed(cfg.seed, 0xe90c + epoch));
    std::shuffle(order.begin(), order.end(), order_rng);
    double sum_loss = 0.0;
    for (size_t idx : order) {
      const EnhForward f = run_enhancement_utt(net, train.utts[idx], cfg, fbank, true);
      if (!std::isfinite(f.loss))
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      sum_loss += f.loss;
      adam.step();
      adam.zero_grad();
    }
    double val_metric = 0.0;
    if (have_val) {
      for (const Utterance& u : val.utts)
        val_metric += run_enhancement_utt(net, u, cfg, fbank, false).si_snr_db;
      val_metric /= static_cast<double>(val.utts.size());
    }
    res.final_val_metric = val_metric;
    res.epochs_run = epoch;
    logger.log(epoch, sum_loss / static_cast<double>(order.size()), "val_si_snr_db",
               val_metric, wall_seconds(t0));
  }

  ensure_parent(cfg.out_checkpoint);
  Checkpoint ck = make_enh_checkpoint(net, cfg);
  if (have_val) {
    ck.meta["val_si_snr_db"] = std::to_string(res.final_val_metric);
    ck.meta["val_input_si_snr_db"] = std::to_string(input_snr);
  }
  save_checkpoint(cfg.out_checkpoint, ck);
  return res;
}

TrainResult train_am(const TrainConfig& cfg) {
  if (cfg.regime != Regime::AmPretrain)
    throw UsageError("train_am requires the 'am' regime");
  if (cfg.am_conditions.empty()) throw UsageError("no AM training conditions given");
  Manifest train = load_training_manifest(cfg);
  const bool have_val = !cfg.val_manifest.empty();
  Manifest val;
  if (have_val) val = Manifest::load(cfg.val_manifest);

  CldnnAm net(cfg.am, cfg.seed);
  if (!cfg.init_ckpt.empty())
    unpack_params(load_checkpoint(cfg.init_ckpt), net.params());
  LogFbank fbank(cfg.lfb);
  AdamConfig ac;
  ac.lr = cfg.lr;
  Adam adam(net.params(), ac);
  EpochLogger logger(default_log_path(cfg), cfg.seed);

  std::vector<size_t> order(train.utts.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult res;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 order_rng(derive_seed(cfg.seed, 0xa40c + epoch));
    std::shuffle(order.begin(), order.end(), order_rng);
    double sum_loss = 0.0;
    long steps = 0;
    for (size_t idx : order) {
      const Utterance& u = train.utts[idx];
      if (u.labels.empty())
        throw DataError("utterance " + u.id + " has no labels for AM training");
      for (const std::string& cond : cfg.am_conditions) {
        const Eigen::VectorXd wave = condition_wave(u, cond);
        const Eigen::MatrixXd logp = net.forward(fbank.forward(wave));
        const CtcResult ctc = ctc_loss(logp, u.labels, cfg.am.blank_id());
        if (!std::isfinite(ctc.loss))
          throw NumericError("training diverged: non-finite CTC loss");
        net.backward(ctc.grad_logp);
        sum_loss += ctc.loss;
        ++steps;
        adam.step();
        adam.zero_grad();
      }
    }
    double val_metric = 0.0;
    if (have_val) {
      long n = 0;
      for (const Utterance& u : val.utts)
        for (const std::string& cond : cfg.am_conditions) {
          val_metric += utterance_cer(net, fbank, condition_wave(u, cond), u.labels);
          ++n;
        }
      val_metric /= static_cast<double>(n);
    }
    res.final_val_metric = val_metric;
    res.epochs_run = epoch;
    logger.log(epoch, sum_loss / static_cast<double>(steps), "val_cer", val_metric,
               wall_seconds(t0));
  }

  ensure_parent(cfg.out_checkpoint);
  Checkpoint ck = make_am_checkpoint(net, cfg);
  ck.meta["conditions"] = [&] {
    std::string s;
    for (const auto& c : cfg.am_conditions) s += (s.empty() ? "" : ",") + c;
    return s;
  }();
  if (have_val) ck.meta["val_cer"] = std::to_string(res.final_val_metric);
  save_checkpoint(cfg.out_checkpoint, ck);
  return res;
}

TrainResult joint_finetune(const TrainConfig& cfg) {
  if (cfg.regime != Regime::Joint && cfg.regime != Regime::JointFrozenAm)
    throw UsageError("joint_finetune requires a joint regime");
  if (cfg.enh_ckpt.empty() || cfg.am_ckpt.empty())
    throw UsageError("joint regimes require --enh-ckpt and --am-ckpt");
  const bool freeze_am = cfg.regime == Regime::JointFrozenAm;

  Manifest train = load_training_manifest(cfg);
  const bool have_val = !cfg.val_manifest.empty();
  Manifest val;
  if (have_val) val = Manifest::load(cfg.val_manifest);

  const Checkpoint enh_ck = load_checkpoint(cfg.enh_ckpt);
  const Checkpoint am_ck = load_checkpoint(cfg.am_ckpt);
  TcnMaskNet net = enh_net_from_checkpoint(enh_ck);
  CldnnAm amn = am_net_from_checkpoint(am_ck);
  LogFbank fbank(cfg.lfb);

  std::vector<Param*> trained = net.params();
  if (!freeze_am)
    for (Param* p : amn.params()) trained.push_back(p);
  std::vector<Param*> all = net.params();
  for (Param* p : amn.params()) all.push_back(p);

  AdamConfig ac;
  ac.lr = cfg.lr;
  Adam adam(trained, ac);
  EpochLogger logger(default_log_path(cfg), cfg.seed);

  std::vector<size_t> order(train.utts.size());
  std::iota(order.begin(), order.end(), 0);
  bool connectivity_checked = false;
  TrainResult res;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 order_rng(derive_seed(cfg.seed, 0x204e + epoch));
    std::shuffle(order.begin(), order.end(), order_rng);
    double sum_loss = 0.0;
    for (size_t idx : order) {
      const Utterance& u = train.utts[idx];
      if (u.labels.empty())
        throw DataError("utterance " + u.id + " has no labels for joint training");
      const Wave mix = read_wav(u.mixture_wav);
      const Eigen::VectorXd ref = load_mono(u.reverb_target_wav);
      FeaturePack fp = compute_features(mix, u.scene.target_doa_deg, u.scene.array,
                                        cfg.frame_spec);
      const Spectrogram& y0 = fp.channel_specs[0];
      const Eigen::MatrixXd raw = net.forward(fp.rows);
      const long emit = cfg.frame_spec.emitted_samples(mix.num_samples());
      Eigen::VectorXd shat_emit;
      if (net.config().mask_kind == MaskKind::Irm)
        shat_emit = apply_irm(raw, y0, emit);
      else
        shat_emit = apply_cirm(net.to_complex_mask(raw), y0, emit);
      Eigen::VectorXd shat = Eigen::VectorXd::Zero(mix.num_samples());
      shat.head(emit) = shat_emit;

      const Eigen::MatrixXd logp = amn.forward(fbank.forward(shat));
      const CtcResult ctc = ctc_loss(logp, u.labels, amn.config().blank_id());
      double loss = ctc.loss;
      const Eigen::MatrixXd glfb = amn.backward(ctc.grad_logp);
      Eigen::VectorXd gwave = fbank.backward(shat, glfb);
      if (cfg.aux_sisnr_weight > 0.0) {
        const SiSnrGrad sg = si_snr_with_grad(shat, ref);
        loss += cfg.aux_sisnr_weight * (-sg.value_db);
        gwave -= cfg.aux_sisnr_weight * sg.grad;
      }
      if (!std::isfinite(loss))
        throw NumericError("training diverged: non-finite joint loss");
      const Eigen::VectorXd gw = gwave.head(emit);
      if (net.config().mask_kind == MaskKind::Irm)
        net.backward(irm_mask_grad(gw, y0));
      else
        net.backward(net.complex_grad_to_raw(cirm_mask_grad(gw, y0)));

      if (!connectivity_checked) {
        double nrm = 0.0;
        for (Param* p : net.params()) nrm += p->grad.squaredNorm();
        if (!(nrm > 0.0))
          throw NumericError(
              "joint gradient path disconnected: zero enhancement gradients");
        connectivity_checked = true;
      }
      sum_loss += loss;
      adam.step();
      for (Param* p : all) p->zero_grad();
    }
    double val_metric = 0.0;
    if (have_val) {
      for (const Utterance& u : val.utts) {
        const Wave mix = read_wav(u.mixture_wav);
        const Eigen::VectorXd enh = enhance_wave(net, mix, u.scene, cfg.frame_spec);
        val_metric += utterance_cer(amn, fbank, enh, u.labels);
      }
      val_metric /= static_cast<double>(val.utts.size());
    }
    res.final_val_metric = val_metric;
    res.epochs_run = epoch;
    logger.log(epoch, sum_loss / static_cast<double>(order.size()), "val_cer",
               val_metric, wall_seconds(t0));
  }

  ensure_parent(cfg.out_checkpoint);
  Checkpoint out_enh = make_enh_checkpoint(net, cfg);
  if (have_val) out_enh.meta["val_cer"] = std::to_string(res.final_val_metric);
  save_checkpoint(cfg.out_checkpoint, out_enh);
  if (!cfg.out_am_checkpoint.empty()) {
    ensure_parent(cfg.out_am_checkpoint);
    if (freeze_am) {
      // Frozen AM contract: output is byte-identical to the input checkpoint.
      fs::copy_file(cfg.am_ckpt, cfg.out_am_checkpoint,
                    fs::copy_options::overwrite_existing);
    } else {
      Checkpoint out_am = am_ck;
      out_am.meta["regime"] = regime_name(cfg.regime);
      out_am.tensors.clear();
      pack_params(amn.params(), &out_am);
      save_checkpoint(cfg.out_am_checkpoint, out_am);
    }
  }
  return res;
}

Eigen::VectorXd enhance_wave(TcnMaskNet& net, const Wave& mixture,
                             const SceneSpec& scene, const FrameSpec& fspec) {
  FeaturePack fp = compute_features(mixture, scene.target_doa_deg, scene.array, fspec);
  const Eigen::MatrixXd raw = net.forward(fp.rows);
  const long emit = fspec.emitted_samples(mixture.num_samples());
  Eigen::VectorXd s;
  if (net.config().mask_kind == MaskKind::Irm)
    s = apply_irm(raw, fp.channel_specs[0], emit);
  else
    s = apply_cirm(net.to_complex_mask(raw), fp.channel_specs[0], emit);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mixture.num_samples());
  out.head(emit) = s;
  return out;
}

std::string enhance_corpus(const std::string& enh_ckpt_path,
                           const std::string& manifest_path,
                           const std::string& out_dir) {
  TcnMaskNet net = enh_net_from_checkpoint(load_checkpoint(enh_ckpt_path));
  Manifest man = Manifest::load(manifest_path);
  fs::create_directories(fs::path(out_dir) / "wavs");
  const FrameSpec fspec;
  for (Utterance& u : man.utts) {
    const Wave mix = read_wav(u.mixture_wav);
    const Eigen::VectorXd enh = enhance_wave(net, mix, u.scene, fspec);
    Wave w;
    w.sample_rate = mix.sample_rate;
    w.samples = enh.transpose();
    const std::string rel = "wavs/" + u.id + "_enh.wav";
    write_wav((fs::path(out_dir) / rel).string(), w, WavFormat::Float32);
    u.enhanced_wav = (fs::path(out_dir) / rel).string();
  }
  const std::string out_manifest = (fs::path(out_dir) / "manifest.jsonl").string();
  man.save(out_manifest);
  return out_manifest;
}

}  // namespace mcse
