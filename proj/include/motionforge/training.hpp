#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionforge/adam.hpp"
#include "motionforge/checkpoint.hpp"
#include "motionforge/losses.hpp"
#include "motionforge/model.hpp"
#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"
#include "motionforge/tensor.hpp"

namespace motionforge {

struct TrainConfig {
  double lambda_gp = 10.0;
  std::size_t n_critic = 6;
  std::size_t n_generator = 2;
  double alpha = 0.005;
  double beta1 = 0.0;
  double beta2 = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t window_T = 25;
  std::size_t classes = 4;

  void validate() const {
    if (n_critic < 1 || n_generator < 1 || batch_size < 1 || epochs < 1)
      throw std::invalid_argument("train config: counts must be >= 1");
    if (lambda_gp < 0.0)
      throw std::invalid_argument("train config: lambda_gp must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw std::invalid_argument("train config: betas must lie in [0, 1)");
    if (window_T < 1 || classes < 1)
      throw std::invalid_argument("train config: window_T and classes must be >= 1");
  }

  AdamConfig adam() const {
    return AdamConfig{.alpha = alpha, .beta1 = beta1, .beta2 = beta2};
  }
};

// flat `key = value` text, unknown keys rejected
inline TrainConfig parse_train_config(std::istream& is) {
  TrainConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (blank) continue;
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "lambda_gp") cfg.lambda_gp = std::stod(val);
      else if (key == "n_critic") cfg.n_critic = std::stoul(val);
      else if (key == "n_generator") cfg.n_generator = std::stoul(val);
      else if (key == "alpha") cfg.alpha = std::stod(val);
      else if (key == "beta1") cfg.beta1 = std::stod(val);
      else if (key == "beta2") cfg.beta2 = std::stod(val);
      else if (key == "batch_size") cfg.batch_size = std::stoul(val);
      else if (key == "epochs") cfg.epochs = std::stoul(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "window_T") cfg.window_T = std::stoul(val);
      else if (key == "classes") cfg.classes = std::stoul(val);
      else
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": cannot parse value '" + val + "' for key '" +
                               key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  return parse_train_config(is);
}

inline void save_train_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream os(path);
  os.precision(17);
  os << "lambda_gp = " << cfg.lambda_gp << "\n"
     << "n_critic = " << cfg.n_critic << "\n"
     << "n_generator = " << cfg.n_generator << "\n"
     << "alpha = " << cfg.alpha << "\n"
     << "beta1 = " << cfg.beta1 << "\n"
     << "beta2 = " << cfg.beta2 << "\n"
     << "batch_size = " << cfg.batch_size << "\n"
     << "epochs = " << cfg.epochs << "\n"
     << "seed = " << cfg.seed << "\n"
     << "window_T = " << cfg.window_T << "\n"
     << "classes = " << cfg.classes << "\n";
  if (!os) throw std::runtime_error("config: write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// training data: prior/future pairs sliced out of fixed-length windows
// ---------------------------------------------------------------------------

struct TrainSample {
  std::size_t window = 0;  // index into TrainingSet::windows
  std::size_t offset = 0;  // first frame of the prior
  Action action = Action::Walk;
};

struct TrainingSet {
  std::vector<MotionWindow> windows;
  std::vector<TrainSample> samples;
  std::vector<std::vector<std::size_t>> by_class;  // sample indices per action

  std::size_t joints() const {
    return windows.empty() ? 0 : windows.front().frames.front().joint_count();
  }
};

// Non-overlapping prior/future pairs: offsets 0, 2T, ... while 2T frames fit.
// Overlap between pairs adds little at desk scale and slows epochs down.
inline TrainingSet build_training_set(std::vector<MotionWindow> windows,
                                      std::size_t T, std::size_t classes = 4) {
  TrainingSet set;
  set.windows = std::move(windows);
  set.by_class.resize(classes);
  for (std::size_t w = 0; w < set.windows.size(); ++w) {
    const auto& win = set.windows[w];
    for (std::size_t off = 0; off + 2 * T <= win.frames.size(); off += 2 * T) {
      const auto cls = static_cast<std::size_t>(win.action);
      if (cls >= classes)
        throw std::invalid_argument("training set: action index " +
                                    std::to_string(cls) + " exceeds class count");
      set.by_class[cls].push_back(set.samples.size());
      set.samples.push_back({w, off, win.action});
    }
  }
  if (set.samples.empty())
    throw std::invalid_argument("training set: no window is long enough for 2T frames");
  return set;
}

struct Batch {
  Tensor prior;   // [B, 3J, T]
  Tensor future;  // [B, 3J, T]
  std::vector<Action> labels;
  std::vector<Pose> first_frames;  // first prior frame per sample
};

inline Batch make_batch(const TrainingSet& set,
                        const std::vector<std::size_t>& sample_ids,
                        std::size_t T) {
  const std::size_t B = sample_ids.size();
  const std::size_t J = set.joints();
  std::vector<double> prior, future;
  prior.reserve(B * 3 * J * T);
  future.reserve(B * 3 * J * T);
  Batch batch;
  for (std::size_t id : sample_ids) {
    const TrainSample& s = set.samples.at(id);
    const auto& frames = set.windows[s.window].frames;
    std::vector<Pose> p(frames.begin() + s.offset, frames.begin() + s.offset + T);
    std::vector<Pose> f(frames.begin() + s.offset + T,
                        frames.begin() + s.offset + 2 * T);
    window_into(p, prior);
    window_into(f, future);
    batch.labels.push_back(s.action);
    batch.first_frames.push_back(p.front());
  }
  batch.prior = Tensor::constant({B, 3 * J, T}, std::move(prior));
  batch.future = Tensor::constant({B, 3 * J, T}, std::move(future));
  return batch;
}

// m/4 samples per class (remainder spread over random classes), drawn with
// replacement
inline std::vector<std::size_t> sample_balanced(const TrainingSet& set,
                                                std::size_t m, Rng& rng) {
  const std::size_t Y = set.by_class.size();
  std::vector<std::size_t> ids;
  ids.reserve(m);
  std::vector<std::size_t> quota(Y, m / Y);
  for (std::size_t i = 0; i < m % Y; ++i) ++quota[rng.uniform_int(Y)];
  for (std::size_t c = 0; c < Y; ++c) {
    const auto& pool = set.by_class[c];
    if (pool.empty()) {
      if (quota[c] > 0)
        throw std::invalid_argument("training set: class '" +
                                    std::string(action_name(static_cast<Action>(c))) +
                                    "' has no samples");
      continue;
    }
    for (std::size_t i = 0; i < quota[c]; ++i)
      ids.push_back(pool[rng.uniform_int(pool.size())]);
  }
  return ids;
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

struct LossRecord {
  std::size_t step = 0;
  std::string phase;
  std::string component;
  double value = 0.0;
};

inline void write_history_csv(const std::string& path,
                              const std::vector<LossRecord>& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("history: cannot open '" + path + "'");
  os.precision(17);
  os << "step,phase,component,value\n";
  for (const auto& r : history)
    os << r.step << ',' << r.phase << ',' << r.component << ',' << r.value << '\n';
}

struct EpochMetrics {
  std::size_t epoch = 0;
  double mean_gp_norm = 0.0;
  double mean_critic_loss = 0.0;
  double mean_generator_total = 0.0;
};

class Trainer {
 public:
  Trainer(const ModelConfig& mcfg, const TrainConfig& tcfg,
          SkeletonSpec skeleton)
      : mcfg_(mcfg),
        tcfg_(tcfg),
        skeleton_(std::move(skeleton)),
        rng_(tcfg.seed),
        generator_(mcfg, rng_.fork(1)),
        critic_(mcfg, rng_.fork(2)),
        classifier_(mcfg, rng_.fork(3)),
        opt_generator_(generator_.params(), tcfg.adam()),
        opt_critic_(critic_.params(), tcfg.adam()),
        opt_classifier_(classifier_.params(), tcfg.adam()) {
    tcfg.validate();
    if (mcfg.window_T != tcfg.window_T || mcfg.classes != tcfg.classes)
      throw std::invalid_argument("trainer: model and train configs disagree on window_T/classes");
  }

  Generator& generator() { return generator_; }
  Critic& critic() { return critic_; }
  Classifier& classifier() { return classifier_; }
  const std::vector<LossRecord>& history() const { return history_; }
  const std::vector<EpochMetrics>& epoch_metrics() const { return epoch_metrics_; }
  std::size_t step() const { return step_; }
  std::size_t epoch() const { return epoch_; }
  bool halted() const { return halted_; }
  Rng& rng() { return rng_; }

  Tensor with_controls(const Tensor& x, const std::vector<Action>& labels) const {
    return append_control_channels(x, labels, mcfg_.classes);
  }

  // ablation switches; disabled losses contribute exactly zero
  void set_use_skeleton_loss(bool on) { use_skeleton_loss_ = on; }
  void set_use_blend_loss(bool on) { use_blend_loss_ = on; }

  // One Adam step on the critic; generator output is detached so only w moves.
  bool critic_update(const Batch& batch) {
    const Tensor fake = generator_.forward(with_controls(batch.prior, batch.labels))
                            .detach();
    const Tensor real_pair =
        with_controls(concat_axis({batch.prior, batch.future}, 2), batch.labels);
    const Tensor fake_pair =
        with_controls(concat_axis({batch.prior, fake}, 2), batch.labels);
    std::vector<double> norms;
    Tensor gp = gradient_penalty(critic_, real_pair, fake_pair, rng_, &norms);
    Tensor loss = critic_loss(critic_.forward(real_pair),
                              critic_.forward(fake_pair), gp, tcfg_.lambda_gp);
    if (!std::isfinite(loss.item())) return fail("critic", loss.item());
    ++step_;
    record("critic", "critic", loss.item());
    record("critic", "gp", gp.item());
    double mean_norm = 0.0;
    for (double n : norms) mean_norm += n / static_cast<double>(norms.size());
    record("critic", "gp_norm", mean_norm);
    opt_critic_.step(critic_.params(), gradients(loss, critic_.params()));
    nonfinite_streak_ = 0;
    return true;
  }

  // Real data only; never invokes the generator.
  bool classifier_update(const Batch& batch) {
    Tensor p = classifier_.forward(batch.future);
    Tensor loss =
        classification_loss(p, one_hot_labels(batch.labels, mcfg_.classes));
    if (!std::isfinite(loss.item())) return fail("classifier", loss.item());
    ++step_;
    record("classifier", "class", loss.item());
    opt_classifier_.step(classifier_.params(), gradients(loss, classifier_.params()));
    nonfinite_streak_ = 0;
    return true;
  }

  // n_generator autoregressive iterations; the first fake window seeds the
  // next iteration. Skeleton reference stays the first frame of the real
  // prior. Critic and classifier parameters are read but never stepped.
  bool generator_update(const Batch& batch) {
    Tensor x_tilde =
        generator_.forward(with_controls(batch.prior, batch.labels)).detach();
    for (std::size_t it = 0; it < tcfg_.n_generator; ++it) {
      Tensor x_hat = generator_.forward(with_controls(x_tilde, batch.labels));
      Tensor scores = critic_.forward(
          with_controls(concat_axis({x_tilde, x_hat}, 2), batch.labels));
      Tensor skel = use_skeleton_loss_
                        ? skeleton_loss(batch.first_frames, x_hat, skeleton_)
                        : Tensor::scalar(0.0);
      Tensor blend = use_blend_loss_
                         ? blend_loss(slice_axis(x_tilde, 2, tcfg_.window_T - 1, 1),
                                      slice_axis(x_hat, 2, 0, 1))
                         : Tensor::scalar(0.0);
      Tensor cls = classification_loss(
          classifier_.forward(x_hat), one_hot_labels(batch.labels, mcfg_.classes));
      LossBreakdown lb = generator_loss(scores, skel, blend, cls);
      if (!std::isfinite(lb.total.item()))
        return fail("generator", lb.total.item());
      ++step_;
      record("generator", "total", lb.total.item());
      record("generator", "wasserstein", lb.gen_wasserstein);
      record("generator", "skel", lb.skel);
      record("generator", "blend", lb.blend);
      record("generator", "class", lb.classification);
      opt_generator_.step(generator_.params(),
                          gradients(lb.total, generator_.params()));
      x_tilde = x_hat.detach();
      nonfinite_streak_ = 0;
    }
    return true;
  }

  // Alg. 1 outer loop: n_critic x (critic step + classifier step), then one
  // generator step.
  bool outer_loop(const TrainingSet& data) {
    for (std::size_t t = 0; t < tcfg_.n_critic; ++t) {
      Batch cb = make_batch(data, sample_balanced(data, tcfg_.batch_size, rng_),
                            tcfg_.window_T);
      if (!critic_update(cb)) return false;
      Batch lb = make_batch(data, sample_balanced(data, tcfg_.batch_size, rng_),
                            tcfg_.window_T);
      if (!classifier_update(lb)) return false;
    }
    Batch gb = make_batch(data, sample_balanced(data, tcfg_.batch_size, rng_),
                          tcfg_.window_T);
    return generator_update(gb);
  }

  std::size_t outer_loops_per_epoch(const TrainingSet& data) const {
    return std::max<std::size_t>(1, data.samples.size() / tcfg_.batch_size);
  }

  // Fixed epoch budget; halts after two consecutive non-finite losses. When
  // checkpoint_dir is set, writes one checkpoint per epoch and keeps the last
  // good one on halt.
  void fit(const TrainingSet& data, const std::string& checkpoint_dir = "") {
    const std::size_t loops = outer_loops_per_epoch(data);
    for (std::size_t e = 0; e < tcfg_.epochs && !halted_; ++e) {
      const std::size_t hist_start = history_.size();
      for (std::size_t l = 0; l < loops; ++l)
        if (!outer_loop(data)) break;
      epoch_ = e + 1;
      epoch_metrics_.push_back(summarize_epoch(hist_start));
      if (!checkpoint_dir.empty() && !halted_)
        save(checkpoint_dir + "/epoch_" + std::to_string(epoch_) + ".ckpt");
    }
  }

  void save(const std::string& path) const {
    Checkpoint ck;
    put_model_config(ck, mcfg_);
    ck.meta["epoch"] = std::to_string(epoch_);
    ck.meta["step"] = std::to_string(step_);
    put_params(ck, generator_.param_set());
    put_params(ck, critic_.param_set());
    put_params(ck, classifier_.param_set());
    save_checkpoint(path, ck);
  }

  void restore(const Checkpoint& ck) {
    restore_params(ck, generator_.param_set());
    restore_params(ck, critic_.param_set());
    restore_params(ck, classifier_.param_set());
  }

 private:
  bool fail(const std::string& phase, double value) {
    record(phase, "nonfinite", value);
    if (++nonfinite_streak_ >= 2) halted_ = true;
    return false;
  }

  void record(const std::string& phase, const std::string& component,
              double value) {
    history_.push_back({step_, phase, component, value});
  }

  EpochMetrics summarize_epoch(std::size_t hist_start) const {
    EpochMetrics m;
    m.epoch = epoch_;
    std::size_t n_norm = 0, n_critic = 0, n_gen = 0;
    for (std::size_t i = hist_start; i < history_.size(); ++i) {
      const auto& r = history_[i];
      if (r.component == "gp_norm") {
        m.mean_gp_norm += r.value;
        ++n_norm;
      } else if (r.component == "critic") {
        m.mean_critic_loss += r.value;
        ++n_critic;
      } else if (r.phase == "generator" && r.component == "total") {
        m.mean_generator_total += r.value;
        ++n_gen;
      }
    }
    if (n_norm) m.mean_gp_norm /= static_cast<double>(n_norm);
    if (n_critic) m.mean_critic_loss /= static_cast<double>(n_critic);
    if (n_gen) m.mean_generator_total /= static_cast<double>(n_gen);
    return m;
  }

  ModelConfig mcfg_;
  TrainConfig tcfg_;
  SkeletonSpec skeleton_;
  Rng rng_;
  Generator generator_;
  Critic critic_;
  Classifier classifier_;
  AdamState opt_generator_, opt_critic_, opt_classifier_;
  bool use_skeleton_loss_ = true;
  bool use_blend_loss_ = true;
  std::size_t step_ = 0, epoch_ = 0;
  int nonfinite_streak_ = 0;
  bool halted_ = false;
  std::vector<LossRecord> history_;
  std::vector<EpochMetrics> epoch_metrics_;
};

}  // namespace motionforge
