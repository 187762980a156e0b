#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "motionforge/tensor.hpp"

namespace motionforge {

struct AdamConfig {
  double alpha = 0.005;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const std::vector<Tensor>& params, AdamConfig config)
      : config_(config) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw std::invalid_argument("adam: parameter/gradient count mismatch");
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grads[i].shape() != params[i].shape())
        throw std::invalid_argument(
            "adam: grad shape " + shape_str(grads[i].shape()) +
            " does not match param " + shape_str(params[i].shape()));
      auto& p = params[i].mutable_values();
      const auto& g = grads[i].values();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        p[j] -= config_.alpha * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace motionforge
