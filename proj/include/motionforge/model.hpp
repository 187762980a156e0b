#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/skeleton.hpp"
#include "motionforge/tensor.hpp"

namespace motionforge {

struct ModelConfig {
  std::size_t joints = 19;
  std::size_t window_T = 25;  // seed/future window length
  std::size_t classes = 4;
  std::vector<std::size_t> enc_channels{64, 128, 256};
  std::vector<std::size_t> critic_channels{64, 128, 256, 256};
  std::vector<std::size_t> classifier_channels{32, 64, 64};
  std::size_t kernel = 5;
  std::size_t stride = 2;
  bool use_attention = true;

  std::size_t pose_channels() const { return joints * 3; }
  std::size_t seed_channels() const { return pose_channels() + classes; }
};

namespace detail {

inline Tensor uniform_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::variable(shape, v);
}

}  // namespace detail

// Named parameter registry shared by the three networks.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t) {
    names_.push_back(name);
    params_.push_back(std::move(t));
    return params_.back();
  }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  const std::vector<std::string>& names() const { return names_; }

  Tensor* find(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return &params_[i];
    return nullptr;
  }

  // FNV-1a over raw parameter bytes; detects any mutation.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : params_)
      for (double v : p.values()) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
        for (int i = 0; i < 8; ++i) {
          h ^= bytes[i];
          h *= 1099511628211ULL;
        }
      }
    return h;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

// Self-attention over a [B, C, N] feature map (Cbar = max(1, C/8)), with a
// learned scalar gate initialized to zero.
struct SelfAttentionLayer {
  Tensor wf, wg, wh, wv, gamma;
  std::size_t channels = 0, reduced = 0;

  SelfAttentionLayer() = default;
  SelfAttentionLayer(std::size_t c, Rng& rng, ParamSet& ps, const std::string& prefix)
      : channels(c), reduced(std::max<std::size_t>(1, c / 8)) {
    wf = ps.add(prefix + ".wf", detail::uniform_init({reduced, c}, c, rng));
    wg = ps.add(prefix + ".wg", detail::uniform_init({reduced, c}, c, rng));
    wh = ps.add(prefix + ".wh", detail::uniform_init({reduced, c}, c, rng));
    wv = ps.add(prefix + ".wv", detail::uniform_init({c, reduced}, reduced, rng));
    gamma = ps.add(prefix + ".gamma", Tensor::variable({1}, {0.0}));
  }

  // attention weights for one sample, columns sum to 1 over the source axis
  Tensor attention_map(const Tensor& x_sample) const {  // [C, N]
    Tensor f = matmul(wf, x_sample);
    Tensor g = matmul(wg, x_sample);
    return softmax(matmul(transpose(f), g), 0);  // beta[i][j], softmax over i
  }

  Tensor forward(const Tensor& x) const {  // [B, C, N]
    detail::op_check(x.shape().size() == 3 && x.shape()[1] == channels,
                     "self_attention", "input " + shape_str(x.shape()) +
                                           " does not carry " +
                                           std::to_string(channels) + " channels");
    const std::size_t B = x.shape()[0], C = channels, N = x.shape()[2];
    std::vector<Tensor> rows;
    rows.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
      Tensor xb = reshape(slice_axis(x, 0, b, 1), {C, N});
      Tensor h = matmul(wh, xb);
      Tensor beta = attention_map(xb);
      Tensor o = matmul(wv, matmul(h, beta));  // o_j = Wv sum_i beta[i][j] h_i
      Tensor yb = add(xb, mul(expand_scalar(gamma, {C, N}), o));
      rows.push_back(reshape(yb, {1, C, N}));
    }
    return B == 1 ? rows[0] : concat_axis(rows, 0);
  }
};

struct ConvBlock {
  Tensor w, b;
  std::size_t kernel = 5, stride = 1, pad = 2;

  ConvBlock() = default;
  ConvBlock(std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t s,
            Rng& rng, ParamSet& ps, const std::string& prefix)
      : kernel(k), stride(s), pad(k / 2) {
    w = ps.add(prefix + ".w", detail::uniform_init({out_c, in_c * k}, in_c * k, rng));
    b = ps.add(prefix + ".b", Tensor::variable({out_c}, std::vector<double>(out_c, 0.0)));
  }

  Tensor forward(const Tensor& x) const {
    return conv1d(x, w, b, kernel, stride, pad);
  }
};

struct DenseBlock {
  Tensor w, b;

  DenseBlock() = default;
  DenseBlock(std::size_t in_f, std::size_t out_f, Rng& rng, ParamSet& ps,
             const std::string& prefix) {
    w = ps.add(prefix + ".w", detail::uniform_init({out_f, in_f}, in_f, rng));
    b = ps.add(prefix + ".b", Tensor::variable({out_f}, std::vector<double>(out_f, 0.0)));
  }

  Tensor forward(const Tensor& x) const { return dense(x, w, b); }
};

// Conditional generator: convolutional encoder to a bottleneck latent code,
// decoder with upsampling convolutions and one self-attention layer after the
// penultimate decoder block, linear output head (coordinates are z-normalized
// and routinely exceed unit magnitude, so a squashing head cannot match the
// data marginals).
class Generator {
 public:
  Generator() = default;
  Generator(const ModelConfig& cfg, Rng rng) : cfg_(cfg) {
    const auto& ec = cfg.enc_channels;
    std::size_t in_c = cfg.seed_channels();
    std::size_t len = cfg.window_T;
    for (std::size_t i = 0; i < ec.size(); ++i) {
      enc_.emplace_back(in_c, ec[i], cfg.kernel, cfg.stride, rng, ps_,
                        "gen.enc" + std::to_string(i));
      in_c = ec[i];
      len = conv_out_len(len, cfg.kernel, cfg.stride, cfg.kernel / 2);
    }
    bottleneck_len_ = len;
    const std::size_t latent = ec.back();
    to_latent_ = DenseBlock(ec.back() * len, latent, rng, ps_, "gen.to_latent");
    from_latent_ = DenseBlock(latent, ec.back() * len, rng, ps_, "gen.from_latent");
    for (std::size_t i = 0; i + 1 < ec.size(); ++i) {
      const std::size_t src = ec[ec.size() - 1 - i];
      const std::size_t dst = ec[ec.size() - 2 - i];
      dec_.emplace_back(src, dst, cfg.kernel, 1, rng, ps_,
                        "gen.dec" + std::to_string(i));
    }
    if (cfg.use_attention)
      attention_ = SelfAttentionLayer(ec.front(), rng, ps_, "gen.attn");
    head_ = ConvBlock(ec.front(), cfg.pose_channels(), cfg.kernel, 1, rng, ps_,
                      "gen.head");
    decoded_len_ = bottleneck_len_;
    for (std::size_t i = 0; i < ec.size(); ++i) decoded_len_ *= 2;
    if (decoded_len_ < cfg.window_T)
      throw std::logic_error("generator: decoder too short for window");
  }

  // seed with control channels [B, 3J+Y, T] -> future poses [B, 3J, T]
  Tensor forward(const Tensor& x) const {
    ++forward_calls_;
    detail::op_check(
        x.shape().size() == 3 && x.shape()[1] == cfg_.seed_channels() &&
            x.shape()[2] == cfg_.window_T,
        "generator", "input must be [batch, " +
                         std::to_string(cfg_.seed_channels()) + ", " +
                         std::to_string(cfg_.window_T) + "], got " +
                         shape_str(x.shape()));
    const std::size_t B = x.shape()[0];
    Tensor h = x;
    for (const auto& blk : enc_) h = leaky_relu(layer_norm(blk.forward(h)));
    h = reshape(h, {B, cfg_.enc_channels.back() * bottleneck_len_});
    Tensor latent = leaky_relu(to_latent_.forward(h));
    h = leaky_relu(from_latent_.forward(latent));
    h = reshape(h, {B, cfg_.enc_channels.back(), bottleneck_len_});
    for (const auto& blk : dec_) {
      h = upsample_repeat(h, 2);
      h = leaky_relu(layer_norm(blk.forward(h)));
    }
    h = upsample_repeat(h, 2);
    if (cfg_.use_attention) h = attention_.forward(h);
    h = head_.forward(h);
    return slice_axis(h, 2, 0, cfg_.window_T);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamSet& param_set() { return ps_; }
  const ParamSet& param_set() const { return ps_; }
  std::vector<Tensor>& params() { return ps_.params(); }
  std::size_t forward_calls() const { return forward_calls_; }
  void reset_forward_calls() { forward_calls_ = 0; }
  const SelfAttentionLayer& attention() const { return attention_; }

 private:
  ModelConfig cfg_;
  ParamSet ps_;
  std::vector<ConvBlock> enc_, dec_;
  DenseBlock to_latent_, from_latent_;
  SelfAttentionLayer attention_;
  ConvBlock head_;
  std::size_t bottleneck_len_ = 0, decoded_len_ = 0;
  mutable std::size_t forward_calls_ = 0;
};

// Unbounded scalar score per sample; self-attention sits in the
// second-to-last convolutional layer.
class Critic {
 public:
  Critic() = default;
  Critic(const ModelConfig& cfg, Rng rng) : cfg_(cfg) {
    const auto& cc = cfg.critic_channels;
    std::size_t in_c = cfg.seed_channels();
    std::size_t len = 2 * cfg.window_T;
    for (std::size_t i = 0; i < cc.size(); ++i) {
      blocks_.emplace_back(in_c, cc[i], cfg.kernel, cfg.stride, rng, ps_,
                           "critic.conv" + std::to_string(i));
      in_c = cc[i];
      len = conv_out_len(len, cfg.kernel, cfg.stride, cfg.kernel / 2);
    }
    final_len_ = len;
    if (cfg.use_attention && cc.size() >= 2)
      attention_ = SelfAttentionLayer(cc[cc.size() - 2], rng, ps_, "critic.attn");
    head_ = DenseBlock(cc.back() * len, 1, rng, ps_, "critic.head");
  }

  // motion with control channels [B, 3J+Y, 2T] -> scores [B, 1]
  Tensor forward(const Tensor& x) const {
    ++forward_calls_;
    detail::op_check(
        x.shape().size() == 3 && x.shape()[1] == cfg_.seed_channels() &&
            x.shape()[2] == 2 * cfg_.window_T,
        "critic", "input must be [batch, " +
                      std::to_string(cfg_.seed_channels()) + ", " +
                      std::to_string(2 * cfg_.window_T) + "], got " +
                      shape_str(x.shape()));
    const std::size_t B = x.shape()[0];
    Tensor h = x;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (cfg_.use_attention && i + 1 == blocks_.size())
        h = attention_.forward(h);
      h = leaky_relu(layer_norm(blocks_[i].forward(h)));
    }
    h = reshape(h, {B, cfg_.critic_channels.back() * final_len_});
    return head_.forward(h);  // no squashing
  }

  const ModelConfig& config() const { return cfg_; }
  ParamSet& param_set() { return ps_; }
  const ParamSet& param_set() const { return ps_; }
  std::vector<Tensor>& params() { return ps_.params(); }
  std::size_t forward_calls() const { return forward_calls_; }

 private:
  ModelConfig cfg_;
  ParamSet ps_;
  std::vector<ConvBlock> blocks_;
  SelfAttentionLayer attention_;
  DenseBlock head_;
  std::size_t final_len_ = 0;
  mutable std::size_t forward_calls_ = 0;
};

// Convolutional stack with global average pooling, so the same architecture
// serves both the training-loop classifier (T frames) and the evaluation
// action classifier (100 frames).
class Classifier {
 public:
  Classifier() = default;
  Classifier(const ModelConfig& cfg, Rng rng) : cfg_(cfg) {
    const auto& cc = cfg.classifier_channels;
    std::size_t in_c = cfg.pose_channels();
    for (std::size_t i = 0; i < cc.size(); ++i) {
      blocks_.emplace_back(in_c, cc[i], cfg.kernel, cfg.stride, rng, ps_,
                           "classifier.conv" + std::to_string(i));
      in_c = cc[i];
    }
    head_ = DenseBlock(cc.back(), cfg.classes, rng, ps_, "classifier.head");
  }

  // poses [B, 3J, T_any] -> class probabilities [B, Y]
  Tensor forward(const Tensor& x) const {
    ++forward_calls_;
    detail::op_check(x.shape().size() == 3 && x.shape()[1] == cfg_.pose_channels(),
                     "classifier", "input must be [batch, " +
                                       std::to_string(cfg_.pose_channels()) +
                                       ", time], got " + shape_str(x.shape()));
    const std::size_t B = x.shape()[0];
    Tensor h = x;
    for (const auto& blk : blocks_) h = leaky_relu(layer_norm(blk.forward(h)));
    h = reshape(mean_axis(h, 2), {B, cfg_.classifier_channels.back()});
    return softmax(head_.forward(h), 1);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamSet& param_set() { return ps_; }
  const ParamSet& param_set() const { return ps_; }
  std::vector<Tensor>& params() { return ps_.params(); }
  std::size_t forward_calls() const { return forward_calls_; }
  void reset_forward_calls() { forward_calls_ = 0; }

 private:
  ModelConfig cfg_;
  ParamSet ps_;
  std::vector<ConvBlock> blocks_;
  DenseBlock head_;
  mutable std::size_t forward_calls_ = 0;
};

// ---------------------------------------------------------------------------
// window <-> tensor conversion
// ---------------------------------------------------------------------------

// frames -> [1, 3J, T] layout slice (channel-major per window)
inline void window_into(const std::vector<Pose>& frames, std::vector<double>& out) {
  const std::size_t T = frames.size(), J = frames[0].joint_count();
  const std::size_t base = out.size();
  out.resize(base + 3 * J * T);
  for (std::size_t j = 0; j < J; ++j)
    for (int k = 0; k < 3; ++k)
      for (std::size_t t = 0; t < T; ++t)
        out[base + (j * 3 + k) * T + t] = frames[t].joints[j][k];
}

inline Tensor windows_to_tensor(const std::vector<const std::vector<Pose>*>& windows) {
  if (windows.empty()) throw std::invalid_argument("windows_to_tensor: empty batch");
  const std::size_t T = windows[0]->size();
  const std::size_t J = windows[0]->front().joint_count();
  std::vector<double> flat;
  flat.reserve(windows.size() * 3 * J * T);
  for (const auto* w : windows) {
    if (w->size() != T)
      throw std::invalid_argument("windows_to_tensor: ragged batch");
    window_into(*w, flat);
  }
  return Tensor::constant({windows.size(), 3 * J, T}, std::move(flat));
}

inline std::vector<Pose> tensor_to_frames(const Tensor& x, std::size_t sample) {
  // x: [B, 3J, T]
  const std::size_t C = x.shape()[1], T = x.shape()[2], J = C / 3;
  std::vector<Pose> frames(T);
  const auto& v = x.values();
  const std::size_t base = sample * C * T;
  for (std::size_t t = 0; t < T; ++t) {
    frames[t].joints.resize(J);
    for (std::size_t j = 0; j < J; ++j)
      for (int k = 0; k < 3; ++k)
        frames[t].joints[j][k] = v[base + (j * 3 + k) * T + t];
  }
  return frames;
}

// Broadcasts one-hot controls along time and appends them as channels.
inline Tensor append_control_channels(const Tensor& x,
                                      const std::vector<Action>& labels,
                                      std::size_t classes) {
  const std::size_t B = x.shape()[0], T = x.shape()[2];
  if (labels.size() != B)
    throw std::invalid_argument("append_control_channels: label count mismatch");
  std::vector<double> ctrl(B * classes * T, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto cls = static_cast<std::size_t>(labels[b]);
    for (std::size_t t = 0; t < T; ++t) ctrl[(b * classes + cls) * T + t] = 1.0;
  }
  Tensor c = Tensor::constant({B, classes, T}, std::move(ctrl));
  return concat_axis({x, c}, 1);
}

inline Tensor one_hot_labels(const std::vector<Action>& labels, std::size_t classes) {
  std::vector<double> v(labels.size() * classes, 0.0);
  for (std::size_t b = 0; b < labels.size(); ++b)
    v[b * classes + static_cast<std::size_t>(labels[b])] = 1.0;
  return Tensor::constant({labels.size(), classes}, std::move(v));
}

}  // namespace motionforge
