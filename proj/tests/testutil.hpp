#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "motionforge/ops.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/tensor.hpp"

namespace mftest {

using motionforge::Rng;
using motionforge::Shape;
using motionforge::Tensor;

inline Tensor random_variable(const Shape& shape, Rng& rng, double lo = -1.0,
                              double hi = 1.0) {
  std::vector<double> v(motionforge::numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::variable(shape, v);
}

// Scalar loss rebuilt from leaf parameter values; the finite-difference side
// of every gradient check. Independent of the reverse-mode path by
// construction: it only ever evaluates forward passes.
using LossBuilder = std::function<Tensor(const std::vector<Tensor>& params)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  bool ok(double tol) const { return max_rel_err < tol; }
};

inline GradCheckResult gradcheck(const LossBuilder& f, std::vector<Tensor> params,
                                 double h = 1e-5) {
  Tensor loss = f(params);
  std::vector<Tensor> analytic = motionforge::gradients(loss, params);
  GradCheckResult res;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<double> fd(params[p].size());
    double fd_max = 0.0, diff_max = 0.0;
    for (std::size_t j = 0; j < params[p].size(); ++j) {
      auto& vals = params[p].mutable_values();
      const double orig = vals[j];
      vals[j] = orig + h;
      const double up = f(params).item();
      vals[j] = orig - h;
      const double down = f(params).item();
      vals[j] = orig;
      fd[j] = (up - down) / (2.0 * h);
      fd_max = std::max(fd_max, std::fabs(fd[j]));
      diff_max = std::max(diff_max, std::fabs(fd[j] - analytic[p].values()[j]));
    }
    res.max_rel_err =
        std::max(res.max_rel_err, diff_max / std::max(fd_max, 1e-6));
  }
  return res;
}

}  // namespace mftest
