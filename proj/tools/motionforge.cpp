// motionforge pipeline driver: procedural data synthesis, preprocessing,
// adversarial training, autoregressive generation, evaluation, and plotting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "motionforge/checkpoint.hpp"
#include "motionforge/eval.hpp"
#include "motionforge/manifest.hpp"
#include "motionforge/motion_io.hpp"
#include "motionforge/preprocess.hpp"
#include "motionforge/procedural.hpp"
#include "motionforge/svg.hpp"
#include "motionforge/synthesis.hpp"
#include "motionforge/training.hpp"

namespace fs = std::filesystem;
using namespace motionforge;

namespace {

std::vector<std::size_t> parse_channels(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoul(tok));
  if (out.empty()) throw CLI::ValidationError("channels", "empty channel list");
  return out;
}

MotionClip window_to_clip(const MotionWindow& w) {
  MotionClip c;
  c.frames = w.frames;
  c.fps = w.fps;
  c.subject = w.subject;
  c.action = w.action;
  return c;
}

std::string padded(std::size_t n, int width = 4) {
  std::string s = std::to_string(n);
  while (s.size() < static_cast<std::size_t>(width)) s.insert(s.begin(), '0');
  return s;
}

struct LoadedData {
  SkeletonSpec skeleton;
  NormalizationStats stats;
  std::vector<MotionWindow> windows;  // preprocessed, window_len frames
};

LoadedData load_preprocessed(const std::string& dir) {
  LoadedData d;
  d.skeleton = load_skeleton(dir + "/skeleton.txt");
  d.stats = load_stats(dir + "/stats.txt");
  for (auto clip : load_clips(dir + "/windows", d.skeleton)) {
    MotionWindow w;
    w.frames = std::move(clip.frames);
    w.fps = clip.fps;
    w.subject = clip.subject;
    w.action = clip.action;
    d.windows.push_back(std::move(w));
  }
  if (d.windows.empty())
    throw std::runtime_error("no windows found under " + dir + "/windows");
  return d;
}

Action parse_action(const std::string& name) {
  try {
    return action_from_name(name);
  } catch (const std::exception&) {
    throw std::runtime_error("unknown action '" + name +
                             "'; valid actions: knock, lift, throw, walk");
  }
}

// ---------------------------------------------------------------------------

int cmd_synth_data(std::size_t subjects, std::uint64_t seed,
                   const std::string& out) {
  DatasetConfig cfg;
  cfg.subjects = subjects;
  cfg.seed = seed;
  const SkeletonSpec skeleton = default_skeleton();
  const auto clips = build_dataset(cfg, skeleton);

  fs::create_directories(out + "/clips");
  save_skeleton(skeleton, out + "/skeleton.txt");
  std::vector<std::string> files;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const std::string path = out + "/clips/" + padded(i) + "_" +
                             clips[i].subject + "_" +
                             action_name(clips[i].action) + ".csv";
    save_clip(clips[i], path);
    files.push_back(path);
  }

  RunManifest m;
  m.command = "synth-data";
  m.seed = seed;
  m.resolved["subjects"] = std::to_string(subjects);
  m.outputs = files;
  m.outputs.push_back(out + "/skeleton.txt");
  m.write(out + "/manifest.json");
  std::cout << "wrote " << clips.size() << " clips to " << out << "/clips\n";
  return 0;
}

int cmd_preprocess(const std::string& data, const std::string& out,
                   std::size_t window_len, bool quota, std::size_t subjects) {
  const SkeletonSpec skeleton = load_skeleton(data + "/skeleton.txt");
  auto clips = load_clips(data + "/clips", skeleton);
  if (clips.empty()) throw std::runtime_error("no clips under " + data + "/clips");

  std::vector<std::string> warnings;
  for (auto& c : clips) c = remove_global_motion(c, skeleton);
  auto [normalized, stats] = normalize(clips);

  std::vector<MotionWindow> windows;
  if (quota) {
    DatasetConfig dcfg;
    dcfg.subjects = subjects;
    dcfg.window_len = window_len;
    windows = assemble_windows(normalized, skeleton, dcfg, &warnings);
  } else {
    for (const auto& clip : normalized) {
      auto ws = clip.action == Action::Walk
                    ? segment_gait(clip, skeleton, window_len, &warnings)
                    : window_actions(clip, window_len, 0, &warnings);
      for (auto& w : ws) windows.push_back(std::move(w));
    }
  }
  if (windows.empty()) throw std::runtime_error("preprocessing produced no windows");

  fs::create_directories(out + "/windows");
  save_skeleton(skeleton, out + "/skeleton.txt");
  save_stats(stats, out + "/stats.txt");
  for (std::size_t i = 0; i < windows.size(); ++i)
    save_clip(window_to_clip(windows[i]),
              out + "/windows/" + padded(i) + "_" + windows[i].subject + "_" +
                  action_name(windows[i].action) + ".csv");
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  RunManifest m;
  m.command = "preprocess";
  m.resolved["window"] = std::to_string(window_len);
  m.resolved["quota"] = quota ? "1" : "0";
  m.inputs.push_back(data + "/skeleton.txt");
  m.outputs = {out + "/skeleton.txt", out + "/stats.txt"};
  m.resolved["windows"] = std::to_string(windows.size());
  m.write(out + "/manifest.json");
  std::cout << "wrote " << windows.size() << " windows to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data,
              const std::string& out, const std::string& channels,
              bool no_attention, bool no_blend, bool no_skeleton,
              long epochs_override, long seed_override) {
  TrainConfig tcfg = load_train_config(config_path);
  if (seed_override >= 0) tcfg.seed = static_cast<std::uint64_t>(seed_override);
  bool init_only = false;
  if (epochs_override == 0) init_only = true;
  else if (epochs_override > 0)
    tcfg.epochs = static_cast<std::size_t>(epochs_override);

  LoadedData d = load_preprocessed(data);
  ModelConfig mcfg;
  mcfg.joints = d.windows.front().frames.front().joint_count();
  mcfg.window_T = tcfg.window_T;
  mcfg.classes = tcfg.classes;
  if (!channels.empty()) {
    const auto enc = parse_channels(channels);
    mcfg.enc_channels = enc;
    mcfg.critic_channels = enc;
    mcfg.critic_channels.push_back(enc.back());
    mcfg.classifier_channels = enc;
  }
  mcfg.use_attention = !no_attention;

  Trainer trainer(mcfg, tcfg, d.skeleton);
  trainer.set_use_blend_loss(!no_blend);
  trainer.set_use_skeleton_loss(!no_skeleton);

  fs::create_directories(out);
  if (init_only) {
    trainer.save(out + "/epoch_0.ckpt");
    write_history_csv(out + "/losses.csv", trainer.history());
  } else {
    TrainingSet set = build_training_set(d.windows, tcfg.window_T, tcfg.classes);
    trainer.fit(set, out);
    write_history_csv(out + "/losses.csv", trainer.history());
    if (trainer.halted())
      std::cerr << "warning: training halted on non-finite losses; last good "
                   "checkpoint retained\n";
  }
  save_train_config(out + "/config.txt", tcfg);
  save_skeleton(d.skeleton, out + "/skeleton.txt");
  save_stats(d.stats, out + "/stats.txt");

  RunManifest m;
  m.command = "train";
  m.config_path = config_path;
  m.seed = tcfg.seed;
  m.resolved["epochs"] = init_only ? "0" : std::to_string(tcfg.epochs);
  m.resolved["no_attention"] = no_attention ? "1" : "0";
  m.resolved["no_blend_loss"] = no_blend ? "1" : "0";
  m.resolved["no_skeleton_loss"] = no_skeleton ? "1" : "0";
  m.inputs = {config_path, data + "/skeleton.txt", data + "/stats.txt"};
  m.outputs = {out + "/losses.csv", out + "/config.txt"};
  m.write(out + "/manifest.json");
  std::cout << "training done; outputs in " << out << "\n";
  return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& data,
                 const std::string& action_name_str, std::size_t iterations,
                 bool drop_seed, std::size_t seed_index,
                 const std::string& out) {
  const Action action = parse_action(action_name_str);
  Checkpoint ck = load_checkpoint(ckpt_path);
  const ModelConfig mcfg = get_model_config(ck);
  LoadedData d = load_preprocessed(data);
  const std::size_t J = d.windows.front().frames.front().joint_count();
  if (J != mcfg.joints)
    throw std::runtime_error("checkpoint was trained with " +
                             std::to_string(mcfg.joints) + " joints but data has " +
                             std::to_string(J));
  Generator gen(mcfg, Rng(0));
  restore_params(ck, gen.param_set());

  std::vector<const MotionWindow*> of_action;
  for (const auto& w : d.windows)
    if (w.action == action) of_action.push_back(&w);
  if (of_action.empty())
    throw std::runtime_error("no windows of action '" + action_name_str +
                             "' in " + data);
  if (seed_index >= of_action.size())
    throw std::runtime_error("seed index " + std::to_string(seed_index) +
                             " out of range (have " +
                             std::to_string(of_action.size()) + " windows)");
  const auto& src = *of_action[seed_index];
  if (src.frames.size() < mcfg.window_T)
    throw std::runtime_error("seed window shorter than T");
  std::vector<Pose> seed(src.frames.begin(), src.frames.begin() + mcfg.window_T);

  RolloutConfig rc;
  rc.seed_T = mcfg.window_T;
  rc.iterations = iterations;
  rc.drop_seed = drop_seed;
  RolloutResult res = rollout(gen, seed, action, rc);
  if (res.truncated)
    std::cerr << "warning: rollout truncated: " << res.error << "\n";
  res.clip.subject = src.subject;

  fs::create_directories(out);
  MotionClip meters = denormalize_motion(res.clip, d.stats);
  const std::string csv = out + "/generated_" + action_name_str + ".csv";
  const std::string svg = out + "/generated_" + action_name_str + ".svg";
  save_clip(meters, csv);
  write_pose_strip_svg(svg, meters, d.skeleton, 5);

  RunManifest m;
  m.command = "generate";
  m.resolved["action"] = action_name_str;
  m.resolved["iterations"] = std::to_string(iterations);
  m.resolved["drop_seed"] = drop_seed ? "1" : "0";
  m.resolved["frames"] = std::to_string(meters.frames.size());
  m.inputs = {ckpt_path};
  m.outputs = {csv, svg};
  m.write(out + "/manifest.json");
  std::cout << "generated " << meters.frames.size() << " frames -> " << csv
            << "\n";
  return res.truncated ? 1 : 0;
}

// Classification windows drop the leading seed frames, mirroring training of
// the action classifier on generated-length motions.
std::vector<MotionWindow> classification_windows(
    const std::vector<MotionWindow>& windows, std::size_t seed_T) {
  std::vector<MotionWindow> out;
  for (const auto& w : windows) {
    if (w.frames.size() <= seed_T) continue;
    MotionWindow t = w;
    t.frames.assign(w.frames.begin() + static_cast<std::ptrdiff_t>(seed_T),
                    w.frames.end());
    out.push_back(std::move(t));
  }
  return out;
}

int cmd_evaluate(const std::string& data, const std::string& protocol,
                 std::size_t k, double fraction, const std::string& condition,
                 const std::string& ckpt_path, const std::string& out,
                 std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::runtime_error("fraction must lie in (0, 1]");
  LoadedData d = load_preprocessed(data);

  Generator gen;
  bool have_gen = false;
  ModelConfig mcfg;
  if (!ckpt_path.empty()) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    mcfg = get_model_config(ck);
    gen = Generator(mcfg, Rng(0));
    restore_params(ck, gen.param_set());
    have_gen = true;
  }
  if ((condition == "both" || condition == "synthetic") && !have_gen)
    throw std::runtime_error("condition '" + condition +
                             "' needs --ckpt for the generator");

  const std::size_t seed_T = have_gen ? mcfg.window_T : 25;
  const auto eval_windows = classification_windows(d.windows, seed_T);
  if (eval_windows.empty())
    throw std::runtime_error("no evaluation windows after dropping seed frames");

  EvalClassifierConfig ccfg;
  ccfg.seed = seed;
  fs::create_directories(out);
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;

  if (condition == "both") {
    if (protocol != "loso")
      throw std::runtime_error("paired condition 'both' is defined for --protocol loso");
    const auto summaries =
        augmentation_experiment(eval_windows, gen, {fraction}, ccfg, &warnings);
    write_augmentation_json(out + "/report.json", summaries);
    std::vector<FoldReport> flat;
    for (const auto& pf : summaries[0].folds) {
      flat.push_back(pf.real);
      flat.back().note = "real";
      flat.push_back(pf.augmented);
      flat.back().note = "augmented";
    }
    write_fold_reports_csv(out + "/folds.csv", flat);
    outputs = {out + "/report.json", out + "/folds.csv"};
    std::cout << "mean macro-F1 real " << summaries[0].mean_real << ", augmented "
              << summaries[0].mean_augmented << ", sign-test p "
              << summaries[0].p_value << "\n";
  } else {
    EvalCondition cond;
    if (condition == "real") cond = EvalCondition::Real;
    else if (condition == "synthetic") cond = EvalCondition::SyntheticOnly;
    else throw std::runtime_error("condition must be real, synthetic, or both");
    std::vector<FoldReport> reports;
    if (protocol == "loso")
      reports = run_loso(eval_windows, have_gen ? &gen : nullptr, fraction, cond,
                         ccfg, &warnings);
    else if (protocol == "kfold")
      reports = run_stratified_kfold(eval_windows, have_gen ? &gen : nullptr, k,
                                     cond, ccfg, fraction, &warnings);
    else
      throw std::runtime_error("protocol must be loso or kfold");
    write_fold_reports_csv(out + "/folds.csv", reports);
    nlohmann::json j = nlohmann::json::array();
    double mean = 0.0;
    std::size_t counted = 0;
    for (const auto& r : reports) {
      j.push_back(fold_report_json(r));
      if (!r.skipped) {
        mean += r.macro_f1;
        ++counted;
      }
    }
    nlohmann::json summary = {
        {"protocol", protocol},
        {"condition", condition},
        {"fraction", fraction},
        {"mean_macro_f1", counted ? mean / static_cast<double>(counted) : 0.0},
        {"folds", std::move(j)}};
    std::ofstream os(out + "/report.json");
    os << summary.dump(2) << '\n';
    outputs = {out + "/folds.csv", out + "/report.json"};
    std::cout << "mean macro-F1 "
              << (counted ? mean / static_cast<double>(counted) : 0.0) << " over "
              << counted << " folds\n";
  }

  // Angle-error curve: generated vs held-back real continuations
  if (have_gen) {
    std::vector<MotionClip> gen_clips, ref_clips;
    const std::size_t horizon = 70;
    std::size_t used = 0;
    for (const auto& w : d.windows) {
      if (w.frames.size() < seed_T + horizon || used >= 12) continue;
      std::vector<Pose> seedf(w.frames.begin(),
                              w.frames.begin() + static_cast<std::ptrdiff_t>(seed_T));
      RolloutConfig rc;
      rc.seed_T = seed_T;
      rc.iterations = (horizon + seed_T - 1) / seed_T;
      rc.drop_seed = true;
      RolloutResult rr = rollout(gen, seedf, w.action, rc);
      if (rr.truncated || rr.clip.frames.size() < horizon) continue;
      MotionClip ref;
      ref.frames.assign(w.frames.begin() + static_cast<std::ptrdiff_t>(seed_T),
                        w.frames.end());
      // compare in meters: rigidly coupled joints coincide in normalized
      // coordinates, which degenerates their bones for angle measurement
      gen_clips.push_back(denormalize_motion(rr.clip, d.stats));
      ref_clips.push_back(denormalize_motion(ref, d.stats));
      ++used;
    }
    if (!gen_clips.empty()) {
      const auto curve =
          mean_angle_curve(gen_clips, ref_clips, d.skeleton, horizon);
      write_curve_csv(out + "/angle_curve.csv", curve);
      write_line_plot_svg(out + "/angle_curve.svg",
                          {{"mean angle error", curve}}, "mean angle error");
      outputs.push_back(out + "/angle_curve.csv");
      outputs.push_back(out + "/angle_curve.svg");
    }
  }

  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  RunManifest m;
  m.command = "evaluate";
  m.seed = seed;
  m.resolved["protocol"] = protocol;
  m.resolved["condition"] = condition;
  m.resolved["fraction"] = std::to_string(fraction);
  if (!ckpt_path.empty()) m.inputs.push_back(ckpt_path);
  m.outputs = outputs;
  m.write(out + "/manifest.json");
  return 0;
}

int cmd_plot(const std::string& history_path, const std::string& out) {
  std::ifstream is(history_path);
  if (!is) throw std::runtime_error("cannot open " + history_path);
  std::string line;
  std::getline(is, line);
  if (line != "step,phase,component,value")
    throw std::runtime_error(history_path + " is not a loss-history CSV");
  std::map<std::string, PlotSeries> series;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string step, phase, component, value;
    std::getline(ss, step, ',');
    std::getline(ss, phase, ',');
    std::getline(ss, component, ',');
    std::getline(ss, value, ',');
    const std::string key = phase + "/" + component;
    auto& s = series[key];
    s.label = key;
    s.values.push_back(std::stod(value));
  }
  if (series.empty()) throw std::runtime_error("no loss rows in " + history_path);
  std::vector<PlotSeries> all;
  for (auto& [k, s] : series)
    if (s.values.size() >= 2) all.push_back(std::move(s));
  fs::create_directories(out);
  write_line_plot_svg(out + "/losses.svg", all, "training losses");

  RunManifest m;
  m.command = "plot";
  m.inputs = {history_path};
  m.outputs = {out + "/losses.svg"};
  m.write(out + "/manifest.json");
  std::cout << "wrote " << out << "/losses.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motionforge: adversarial skeletal motion synthesis pipeline"};
  app.require_subcommand(1);

  // synth-data
  std::size_t subjects = 6;
  std::uint64_t seed = 1;
  std::string out_dir = "data";
  auto* synth = app.add_subcommand("synth-data", "generate a procedural dataset");
  synth->add_option("--subjects", subjects, "number of subjects")
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "rng seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  // preprocess
  std::string pre_data, pre_out;
  std::size_t window_len = 125;
  bool no_quota = false;
  std::size_t pre_subjects = 6;
  auto* pre = app.add_subcommand("preprocess", "normalize, canonicalize, window");
  pre->add_option("--data", pre_data, "synth-data output directory")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--window", window_len, "window length in frames");
  pre->add_option("--subjects", pre_subjects, "subject count for quota check");
  pre->add_flag("--no-quota", no_quota, "skip per-subject window quotas");

  // train
  std::string cfg_path, train_data, train_out, channels;
  bool no_attention = false, no_blend = false, no_skeleton = false;
  long epochs_override = -1, seed_override = -1;
  auto* train = app.add_subcommand("train", "run the adversarial training loop");
  train->add_option("--config", cfg_path, "training config file")->required();
  train->add_option("--data", train_data, "preprocessed data directory")->required();
  train->add_option("--out", train_out, "run output directory")->required();
  train->add_option("--channels", channels,
                    "comma-separated encoder widths (e.g. 16,24,32)");
  train->add_flag("--no-attention", no_attention, "ablate self-attention");
  train->add_flag("--no-blend-loss", no_blend, "ablate the blend loss");
  train->add_flag("--no-skeleton-loss", no_skeleton, "ablate the skeleton loss");
  train->add_option("--epochs", epochs_override, "override config epochs (0 = init only)");
  train->add_option("--seed", seed_override, "override config seed");

  // generate
  std::string gen_ckpt, gen_data, gen_action = "walk", gen_out = "generated";
  std::size_t iterations = 4, seed_index = 0;
  bool drop_seed = false;
  auto* gen = app.add_subcommand("generate", "autoregressive rollout from a seed");
  gen->add_option("--ckpt", gen_ckpt, "checkpoint file")->required();
  gen->add_option("--data", gen_data, "preprocessed data directory (seed source)")
      ->required();
  gen->add_option("--action", gen_action, "action: knock, lift, throw, walk");
  gen->add_option("--iterations", iterations, "generator iterations");
  gen->add_flag("--drop-seed", drop_seed, "drop the seed frames from the output");
  gen->add_option("--seed-index", seed_index, "which window seeds the rollout");
  gen->add_option("--out", gen_out, "output directory");

  // evaluate
  std::string eval_data, protocol = "loso", condition = "real", eval_ckpt,
              eval_out = "eval";
  std::size_t kfolds = 10;
  double fraction = 1.0;
  std::uint64_t eval_seed = 1;
  auto* ev = app.add_subcommand("evaluate", "classification protocols and curves");
  ev->add_option("--data", eval_data, "preprocessed data directory")->required();
  ev->add_option("--protocol", protocol, "loso or kfold");
  ev->add_option("--k", kfolds, "fold count for kfold");
  ev->add_option("--fraction", fraction, "training-data fraction in (0, 1]");
  ev->add_option("--condition", condition, "real, synthetic, or both");
  ev->add_option("--ckpt", eval_ckpt, "checkpoint for synthetic conditions");
  ev->add_option("--seed", eval_seed, "rng seed");
  ev->add_option("--out", eval_out, "output directory");

  // plot
  std::string hist_path, plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "render loss-history SVG plots");
  plot->add_option("--history", hist_path, "losses.csv from a training run")
      ->required();
  plot->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth_data(subjects, seed, out_dir);
    if (pre->parsed())
      return cmd_preprocess(pre_data, pre_out, window_len, !no_quota, pre_subjects);
    if (train->parsed())
      return cmd_train(cfg_path, train_data, train_out, channels, no_attention,
                       no_blend, no_skeleton, epochs_override, seed_override);
    if (gen->parsed())
      return cmd_generate(gen_ckpt, gen_data, gen_action, iterations, drop_seed,
                          seed_index, gen_out);
    if (ev->parsed())
      return cmd_evaluate(eval_data, protocol, kfolds, fraction, condition,
                          eval_ckpt, eval_out, eval_seed);
    if (plot->parsed()) return cmd_plot(hist_path, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
