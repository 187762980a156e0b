#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionforge/model.hpp"
#include "motionforge/losses.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"
#include "motionforge/synthesis.hpp"
#include "motionforge/training.hpp"

namespace motionforge {

// ---------------------------------------------------------------------------
// angle space
// ---------------------------------------------------------------------------

struct AnglePair {
  std::size_t joint;            // shared joint
  std::size_t bone_a, bone_b;   // indices into SkeletonSpec::bones
};

// One angle per consecutive pair of incident bones (in bone order) at every
// interior joint.
inline std::vector<AnglePair> angle_pairs(const SkeletonSpec& skeleton) {
  std::vector<std::vector<std::size_t>> incident(skeleton.joint_count());
  for (std::size_t b = 0; b < skeleton.bones.size(); ++b) {
    incident[skeleton.bones[b].i].push_back(b);
    incident[skeleton.bones[b].j].push_back(b);
  }
  std::vector<AnglePair> pairs;
  for (std::size_t j = 0; j < incident.size(); ++j)
    for (std::size_t k = 0; k + 1 < incident[j].size(); ++k)
      pairs.push_back({j, incident[j][k], incident[j][k + 1]});
  return pairs;
}

struct AngleSpaceMotion {
  std::vector<std::vector<double>> frames;  // per frame, one angle per pair
  std::vector<bool> valid;                  // false if a zero-length bone appeared
};

inline AngleSpaceMotion to_angle_space(const MotionClip& clip,
                                       const SkeletonSpec& skeleton) {
  const auto pairs = angle_pairs(skeleton);
  AngleSpaceMotion out;
  out.frames.reserve(clip.frames.size());
  for (const auto& pose : clip.frames) {
    std::vector<double> angles(pairs.size(), 0.0);
    bool ok = true;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pr = pairs[p];
      const auto& ba = skeleton.bones[pr.bone_a];
      const auto& bb = skeleton.bones[pr.bone_b];
      const std::size_t other_a = ba.i == pr.joint ? ba.j : ba.i;
      const std::size_t other_b = bb.i == pr.joint ? bb.j : bb.i;
      const auto& c = pose.joints[pr.joint];
      double u[3], v[3], nu = 0.0, nv = 0.0, dot = 0.0;
      for (int k = 0; k < 3; ++k) {
        u[k] = pose.joints[other_a][k] - c[k];
        v[k] = pose.joints[other_b][k] - c[k];
        nu += u[k] * u[k];
        nv += v[k] * v[k];
        dot += u[k] * v[k];
      }
      if (nu < 1e-18 || nv < 1e-18) {
        ok = false;
        break;
      }
      // atan2 form stays well conditioned near 0 and pi, unlike acos
      const double cx = u[1] * v[2] - u[2] * v[1];
      const double cy = u[2] * v[0] - u[0] * v[2];
      const double cz = u[0] * v[1] - u[1] * v[0];
      angles[p] = std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
    }
    out.frames.push_back(std::move(angles));
    out.valid.push_back(ok);
  }
  return out;
}

// Per-frame mean absolute angle error over matched clip pairs; frames with a
// degenerate bone in either clip are excluded from that frame's mean.
inline std::vector<double> mean_angle_curve(
    const std::vector<MotionClip>& generated,
    const std::vector<MotionClip>& reference, const SkeletonSpec& skeleton,
    std::size_t horizon = 70) {
  if (generated.size() != reference.size() || generated.empty())
    throw std::invalid_argument("mean_angle_curve: need matched non-empty clip sets");
  for (std::size_t i = 0; i < generated.size(); ++i)
    if (generated[i].frames.size() < horizon ||
        reference[i].frames.size() < horizon)
      throw std::invalid_argument("mean_angle_curve: clip pair " +
                                  std::to_string(i) + " shorter than horizon " +
                                  std::to_string(horizon));
  std::vector<double> curve(horizon, 0.0);
  std::vector<std::size_t> counts(horizon, 0);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto g = to_angle_space(generated[i], skeleton);
    const auto r = to_angle_space(reference[i], skeleton);
    for (std::size_t t = 0; t < horizon; ++t) {
      if (!g.valid[t] || !r.valid[t]) continue;
      for (std::size_t p = 0; p < g.frames[t].size(); ++p) {
        curve[t] += std::fabs(g.frames[t][p] - r.frames[t][p]);
        ++counts[t];
      }
    }
  }
  for (std::size_t t = 0; t < horizon; ++t)
    if (counts[t]) curve[t] /= static_cast<double>(counts[t]);
  return curve;
}

inline double curve_auc(const std::vector<double>& curve) {
  double acc = 0.0;
  for (double v : curve) acc += v;
  return acc;
}

inline void write_curve_csv(const std::string& path,
                            const std::vector<double>& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("curve: cannot open '" + path + "'");
  os.precision(17);
  os << "frame,error\n";
  for (std::size_t t = 0; t < curve.size(); ++t)
    os << t << ',' << curve[t] << '\n';
}

// ---------------------------------------------------------------------------
// evaluation classifier
// ---------------------------------------------------------------------------

struct EvalClassifierConfig {
  std::vector<std::size_t> channels{12, 16, 20};
  double alpha = 0.005;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  std::size_t classes = 4;
  // synthetic windows generated per real training window in augmented
  // conditions; rollouts are seeded from successive seed-length segments
  std::size_t synth_per_real = 1;
};

struct ClassifierReport {
  double final_loss = 0.0;
  double train_accuracy = 0.0;
};

namespace detail {

inline Tensor eval_windows_tensor(const std::vector<const MotionWindow*>& ws) {
  std::vector<const std::vector<Pose>*> frames;
  frames.reserve(ws.size());
  for (const auto* w : ws) frames.push_back(&w->frames);
  return windows_to_tensor(frames);
}

}  // namespace detail

inline std::vector<std::size_t> classifier_predict(
    const Classifier& cls, const std::vector<const MotionWindow*>& windows) {
  Tensor p = cls.forward(detail::eval_windows_tensor(windows));
  const std::size_t Y = p.shape()[1];
  std::vector<std::size_t> preds(windows.size());
  for (std::size_t b = 0; b < windows.size(); ++b) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < Y; ++c)
      if (p.values()[b * Y + c] > p.values()[b * Y + best]) best = c;
    preds[b] = best;
  }
  return preds;
}

inline Classifier train_action_classifier(
    const std::vector<const MotionWindow*>& train,
    const EvalClassifierConfig& cfg, ClassifierReport* report = nullptr) {
  if (train.empty())
    throw std::invalid_argument("classifier training: empty training set");
  std::set<Action> seen;
  for (const auto* w : train) seen.insert(w->action);
  if (seen.size() < 2)
    throw std::invalid_argument("classifier training: single-class training set");

  ModelConfig mcfg;
  mcfg.joints = train.front()->frames.front().joint_count();
  mcfg.window_T = train.front()->frames.size();
  mcfg.classes = cfg.classes;
  mcfg.classifier_channels = cfg.channels;
  Rng rng(cfg.seed);
  Classifier cls(mcfg, rng.fork(1));
  AdamState opt(cls.params(), AdamConfig{.alpha = cfg.alpha});

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double last_loss = 0.0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    // Fisher-Yates
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::vector<const MotionWindow*> batch;
      std::vector<Action> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train[order[i]]);
        labels.push_back(train[order[i]]->action);
      }
      Tensor p = cls.forward(detail::eval_windows_tensor(batch));
      Tensor loss = classification_loss(p, one_hot_labels(labels, cfg.classes));
      last_loss = loss.item();
      opt.step(cls.params(), gradients(loss, cls.params()));
    }
  }
  if (report) {
    report->final_loss = last_loss;
    const auto preds = classifier_predict(cls, train);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (preds[i] == static_cast<std::size_t>(train[i]->action)) ++hit;
    report->train_accuracy = static_cast<double>(hit) / static_cast<double>(train.size());
  }
  return cls;
}

// ---------------------------------------------------------------------------
// fold protocols
// ---------------------------------------------------------------------------

enum class EvalCondition { Real, Augmented, SyntheticOnly };

struct FoldReport {
  std::size_t fold = 0;
  std::string held_out;            // subject id, or fold index for K-fold
  std::vector<double> f1;          // per class
  double macro_f1 = 0.0;
  std::vector<std::size_t> support;  // test samples per class
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool skipped = false;
  std::string note;
};

inline FoldReport score_fold(const std::vector<std::size_t>& preds,
                             const std::vector<const MotionWindow*>& test,
                             std::size_t classes) {
  FoldReport rep;
  rep.test_size = test.size();
  rep.support.assign(classes, 0);
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto truth = static_cast<std::size_t>(test[i]->action);
    ++rep.support[truth];
    if (preds[i] == truth) ++tp[truth];
    else {
      ++fp[preds[i]];
      ++fn[truth];
    }
  }
  rep.f1.assign(classes, 0.0);
  double acc = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    rep.f1[c] = denom > 0.0 ? 2.0 * static_cast<double>(tp[c]) / denom : 0.0;
    acc += rep.f1[c];
  }
  rep.macro_f1 = acc / static_cast<double>(classes);
  return rep;
}

// Stratified subsample: round(fraction * count) per class. Returns empty if
// any class would fall below one sample.
inline std::vector<const MotionWindow*> stratified_subset(
    const std::vector<const MotionWindow*>& pool, double fraction,
    std::size_t classes, Rng& rng) {
  std::vector<std::vector<const MotionWindow*>> per_class(classes);
  for (const auto* w : pool)
    per_class[static_cast<std::size_t>(w->action)].push_back(w);
  std::vector<const MotionWindow*> out;
  for (auto& members : per_class) {
    if (members.empty()) continue;
    const auto want = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    if (want < 1) return {};
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.uniform_int(i)]);
    out.insert(out.end(), members.begin(), members.begin() + std::min(want, members.size()));
  }
  return out;
}

// Synthetic windows per real window: each successive seed_T-frame segment of
// the real window (up to per_real of them) seeds a drop-seed rollout of
// matching length, so one real window can contribute several distinct
// synthetic continuations.
inline std::vector<MotionWindow> synthesize_like(
    const Generator& generator, const std::vector<const MotionWindow*>& real,
    std::size_t seed_T = 25, std::size_t per_real = 1) {
  std::vector<MotionWindow> out;
  out.reserve(real.size() * per_real);
  for (const auto* w : real) {
    if (w->frames.size() < seed_T)
      throw std::invalid_argument("synthesize_like: window shorter than seed");
    if (w->frames.size() % seed_T != 0)
      throw std::invalid_argument("synthesize_like: window length not a multiple of seed length");
    const std::size_t segments = w->frames.size() / seed_T;
    const std::size_t count = std::max<std::size_t>(1, std::min(per_real, segments));
    for (std::size_t k = 0; k < count; ++k) {
      RolloutConfig rc;
      rc.seed_T = seed_T;
      rc.iterations = segments;
      rc.drop_seed = true;
      std::vector<Pose> seed(w->frames.begin() + k * seed_T,
                             w->frames.begin() + (k + 1) * seed_T);
      RolloutResult rr = rollout(generator, seed, w->action, rc);
      MotionWindow s;
      s.frames = std::move(rr.clip.frames);
      s.fps = w->fps;
      s.subject = w->subject + "+synth";
      s.action = w->action;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::size_t eval_threads() {
  const char* s = std::getenv("MOTIONFORGE_THREADS");
  if (!s) return 1;
  const long v = std::strtol(s, nullptr, 10);
  return v < 1 ? 1 : static_cast<std::size_t>(v);
}

namespace detail {

// Train on `subset` (plus synthetics per condition), score on `test`.
inline FoldReport evaluate_fold(const std::vector<const MotionWindow*>& subset,
                                const std::vector<const MotionWindow*>& test,
                                EvalCondition condition,
                                const Generator* generator,
                                const EvalClassifierConfig& cfg) {
  std::vector<MotionWindow> synth;
  std::vector<const MotionWindow*> train = subset;
  if (condition != EvalCondition::Real) {
    if (!generator)
      throw std::invalid_argument("evaluate: synthetic condition needs a generator");
    synth = synthesize_like(*generator, subset, 25, cfg.synth_per_real);
    if (condition == EvalCondition::SyntheticOnly) train.clear();
    for (const auto& s : synth) train.push_back(&s);
  }
  ClassifierReport crep;
  Classifier cls = train_action_classifier(train, cfg, &crep);
  FoldReport rep = score_fold(classifier_predict(cls, test), test, cfg.classes);
  rep.train_size = train.size();
  return rep;
}

template <typename Fn>
void parallel_folds(std::size_t n, Fn&& fn) {
  const std::size_t threads = std::min(eval_threads(), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline std::vector<std::string> subjects_of(
    const std::vector<MotionWindow>& windows) {
  std::set<std::string> s;
  for (const auto& w : windows) s.insert(w.subject);
  return {s.begin(), s.end()};
}

// One fold per subject; the held-out subject never contributes to training or
// generation seeds.
inline std::vector<FoldReport> run_loso(
    const std::vector<MotionWindow>& windows, const Generator* generator,
    double fraction, EvalCondition condition, const EvalClassifierConfig& cfg,
    std::vector<std::string>* warnings = nullptr) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("run_loso: fraction must lie in (0, 1]");
  const auto subjects = subjects_of(windows);
  if (subjects.size() < 2)
    throw std::invalid_argument("run_loso: need at least 2 subjects");
  std::vector<FoldReport> reports(subjects.size());
  std::vector<std::string> warn(subjects.size());
  detail::parallel_folds(subjects.size(), [&](std::size_t fold) {
    std::vector<const MotionWindow*> train_pool, test;
    for (const auto& w : windows)
      (w.subject == subjects[fold] ? test : train_pool).push_back(&w);
    Rng rng(cfg.seed + 1000 * fold);
    auto subset = stratified_subset(train_pool, fraction, cfg.classes, rng);
    FoldReport rep;
    if (subset.empty()) {
      rep.skipped = true;
      rep.note = "fraction leaves a class without samples";
      warn[fold] = "fold " + subjects[fold] + " skipped: " + rep.note;
    } else {
      EvalClassifierConfig fold_cfg = cfg;
      fold_cfg.seed = cfg.seed + 1000 * fold + 7;
      rep = detail::evaluate_fold(subset, test, condition, generator, fold_cfg);
    }
    rep.fold = fold;
    rep.held_out = subjects[fold];
    reports[fold] = std::move(rep);
  });
  if (warnings)
    for (auto& w : warn)
      if (!w.empty()) warnings->push_back(std::move(w));
  return reports;
}

// Stratified K-fold: per class, shuffled round-robin assignment keeps fold
// proportions within one sample of the global split.
inline std::vector<std::vector<std::size_t>> stratified_kfold_assignment(
    const std::vector<MotionWindow>& windows, std::size_t K,
    std::size_t classes, Rng& rng) {
  if (K < 2) throw std::invalid_argument("kfold: K must be >= 2");
  std::vector<std::vector<std::size_t>> per_class(classes);
  for (std::size_t i = 0; i < windows.size(); ++i)
    per_class[static_cast<std::size_t>(windows[i].action)].push_back(i);
  for (const auto& members : per_class)
    if (!members.empty() && members.size() < K)
      throw std::invalid_argument("kfold: K exceeds smallest class count (" +
                                  std::to_string(members.size()) + ")");
  std::vector<std::vector<std::size_t>> folds(K);
  for (auto& members : per_class) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.uniform_int(i)]);
    for (std::size_t i = 0; i < members.size(); ++i)
      folds[i % K].push_back(members[i]);
  }
  return folds;
}

inline std::vector<FoldReport> run_stratified_kfold(
    const std::vector<MotionWindow>& windows, const Generator* generator,
    std::size_t K, EvalCondition condition, const EvalClassifierConfig& cfg,
    double fraction = 1.0, std::vector<std::string>* warnings = nullptr) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("kfold: fraction must lie in (0, 1]");
  Rng assign_rng(cfg.seed);
  const auto folds = stratified_kfold_assignment(windows, K, cfg.classes, assign_rng);
  std::vector<FoldReport> reports(K);
  std::vector<std::string> warn(K);
  detail::parallel_folds(K, [&](std::size_t fold) {
    std::vector<char> in_test(windows.size(), 0);
    for (std::size_t i : folds[fold]) in_test[i] = 1;
    std::vector<const MotionWindow*> train_pool, test;
    for (std::size_t i = 0; i < windows.size(); ++i)
      (in_test[i] ? test : train_pool).push_back(&windows[i]);
    Rng rng(cfg.seed + 1000 * fold);
    auto subset = stratified_subset(train_pool, fraction, cfg.classes, rng);
    FoldReport rep;
    if (subset.empty()) {
      rep.skipped = true;
      rep.note = "fraction leaves a class without samples";
      warn[fold] = "fold " + std::to_string(fold) + " skipped: " + rep.note;
    } else {
      EvalClassifierConfig fold_cfg = cfg;
      fold_cfg.seed = cfg.seed + 1000 * fold + 7;
      rep = detail::evaluate_fold(subset, test, condition, generator, fold_cfg);
    }
    rep.fold = fold;
    rep.held_out = "fold" + std::to_string(fold);
    reports[fold] = std::move(rep);
  });
  if (warnings)
    for (auto& w : warn)
      if (!w.empty()) warnings->push_back(std::move(w));
  return reports;
}

// ---------------------------------------------------------------------------
// augmentation experiment (paired design)
// ---------------------------------------------------------------------------

struct PairedFoldReport {
  FoldReport real;
  FoldReport augmented;
};

// One-sided sign test: P(at least k successes in n fair coin flips).
inline double sign_test_p(std::size_t k, std::size_t n) {
  if (n == 0) return 1.0;
  double p = 0.0;
  double coeff = 1.0;  // C(n, 0)
  for (std::size_t i = 0; i <= n; ++i) {
    if (i >= k) p += coeff;
    coeff = coeff * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return p / std::pow(2.0, static_cast<double>(n));
}

struct AugmentationSummary {
  double fraction = 0.0;
  std::vector<PairedFoldReport> folds;
  double mean_real = 0.0;
  double mean_augmented = 0.0;
  double mean_delta = 0.0;
  std::size_t improved = 0, worse = 0, tied = 0, skipped = 0;
  double p_value = 1.0;
};

// Both conditions reuse the identical stratified subset per fold.
inline AugmentationSummary run_paired_loso(
    const std::vector<MotionWindow>& windows, const Generator& generator,
    double fraction, const EvalClassifierConfig& cfg,
    std::vector<std::string>* warnings = nullptr) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("augmentation: fraction must lie in (0, 1]");
  const auto subjects = subjects_of(windows);
  if (subjects.size() < 2)
    throw std::invalid_argument("augmentation: need at least 2 subjects");
  AugmentationSummary sum;
  sum.fraction = fraction;
  sum.folds.resize(subjects.size());
  std::vector<std::string> warn(subjects.size());
  detail::parallel_folds(subjects.size(), [&](std::size_t fold) {
    std::vector<const MotionWindow*> train_pool, test;
    for (const auto& w : windows)
      (w.subject == subjects[fold] ? test : train_pool).push_back(&w);
    Rng rng(cfg.seed + 1000 * fold);
    auto subset = stratified_subset(train_pool, fraction, cfg.classes, rng);
    PairedFoldReport pr;
    if (subset.empty()) {
      pr.real.skipped = pr.augmented.skipped = true;
      warn[fold] = "fold " + subjects[fold] +
                   " skipped: fraction leaves a class without samples";
    } else {
      EvalClassifierConfig fold_cfg = cfg;
      fold_cfg.seed = cfg.seed + 1000 * fold + 7;
      pr.real = detail::evaluate_fold(subset, test, EvalCondition::Real, nullptr,
                                      fold_cfg);
      pr.augmented = detail::evaluate_fold(subset, test, EvalCondition::Augmented,
                                           &generator, fold_cfg);
    }
    pr.real.fold = pr.augmented.fold = fold;
    pr.real.held_out = pr.augmented.held_out = subjects[fold];
    sum.folds[fold] = std::move(pr);
  });
  if (warnings)
    for (auto& w : warn)
      if (!w.empty()) warnings->push_back(std::move(w));

  std::size_t counted = 0;
  for (const auto& pf : sum.folds) {
    if (pf.real.skipped) {
      ++sum.skipped;
      continue;
    }
    ++counted;
    sum.mean_real += pf.real.macro_f1;
    sum.mean_augmented += pf.augmented.macro_f1;
    const double d = pf.augmented.macro_f1 - pf.real.macro_f1;
    if (d > 0) ++sum.improved;
    else if (d < 0) ++sum.worse;
    else ++sum.tied;
  }
  if (counted) {
    sum.mean_real /= static_cast<double>(counted);
    sum.mean_augmented /= static_cast<double>(counted);
    sum.mean_delta = sum.mean_augmented - sum.mean_real;
  }
  sum.p_value = sign_test_p(sum.improved, sum.improved + sum.worse);
  return sum;
}

inline std::vector<AugmentationSummary> augmentation_experiment(
    const std::vector<MotionWindow>& windows, const Generator& generator,
    const std::vector<double>& fractions, const EvalClassifierConfig& cfg,
    std::vector<std::string>* warnings = nullptr) {
  std::vector<AugmentationSummary> out;
  for (double f : fractions)
    out.push_back(run_paired_loso(windows, generator, f, cfg, warnings));
  return out;
}

// ---------------------------------------------------------------------------
// report files
// ---------------------------------------------------------------------------

inline void write_fold_reports_csv(const std::string& path,
                                   const std::vector<FoldReport>& reports) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("report: cannot open '" + path + "'");
  os.precision(17);
  os << "fold,held_out,macro_f1,train_size,test_size,skipped";
  const std::size_t classes = reports.empty() ? 0 : reports.front().f1.size();
  for (std::size_t c = 0; c < classes; ++c)
    os << ",f1_" << action_name(static_cast<Action>(c));
  os << '\n';
  for (const auto& r : reports) {
    os << r.fold << ',' << r.held_out << ',' << r.macro_f1 << ',' << r.train_size
       << ',' << r.test_size << ',' << (r.skipped ? 1 : 0);
    for (double f : r.f1) os << ',' << f;
    os << '\n';
  }
}

inline nlohmann::json fold_report_json(const FoldReport& r) {
  return {{"fold", r.fold},         {"held_out", r.held_out},
          {"macro_f1", r.macro_f1}, {"f1", r.f1},
          {"support", r.support},   {"train_size", r.train_size},
          {"test_size", r.test_size}, {"skipped", r.skipped}};
}

inline void write_augmentation_json(
    const std::string& path, const std::vector<AugmentationSummary>& summaries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : summaries) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& pf : s.folds)
      folds.push_back({{"real", fold_report_json(pf.real)},
                       {"augmented", fold_report_json(pf.augmented)}});
    j.push_back({{"fraction", s.fraction},
                 {"mean_real_macro_f1", s.mean_real},
                 {"mean_augmented_macro_f1", s.mean_augmented},
                 {"mean_delta", s.mean_delta},
                 {"folds_improved", s.improved},
                 {"folds_worse", s.worse},
                 {"folds_tied", s.tied},
                 {"folds_skipped", s.skipped},
                 {"sign_test_p", s.p_value},
                 {"folds", std::move(folds)}});
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("report: cannot open '" + path + "'");
  os << j.dump(2) << '\n';
}

}  // namespace motionforge
