#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "motionforge/tensor.hpp"

// Differentiable primitives. Every backward is itself expressed through these
// ops, so gradients of gradients (needed by the WGAN gradient penalty) come
// out of the same machinery.

namespace motionforge {

namespace detail {

inline void op_check(bool cond, const char* op, const std::string& msg) {
  if (!cond) throw std::invalid_argument(std::string(op) + ": " + msg);
}

inline void same_shape(const char* op, const Tensor& a, const Tensor& b) {
  op_check(a.shape() == b.shape(), op,
           "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

struct AxisDims {
  std::size_t outer, n, inner;
};

inline AxisDims axis_dims(const Shape& shape, std::size_t axis) {
  AxisDims d{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) d.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) d.inner *= shape[i];
  return d;
}

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::same_shape("add", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op("add", a.shape(), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{g, g};
                 });
}

inline Tensor sub(const Tensor& a, const Tensor& b);
inline Tensor mul(const Tensor& a, const Tensor& b);
inline Tensor div(const Tensor& a, const Tensor& b);
inline Tensor neg(const Tensor& a);
inline Tensor scale(const Tensor& a, double c);

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  return make_op("scale", a.shape(), std::move(out), {a},
                 [c](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{scale(g, c)};
                 });
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::same_shape("sub", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op("sub", a.shape(), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{g, neg(g)};
                 });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::same_shape("mul", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   std::vector<Tensor> r(2);
                   if (in[0].requires_grad()) r[0] = mul(g, in[1]);
                   if (in[1].requires_grad()) r[1] = mul(g, in[0]);
                   return r;
                 });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::same_shape("div", a, b);
  std::vector<double> out(a.size());
  const auto &av = a.values(), &bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  return make_op("div", a.shape(), std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   std::vector<Tensor> r(2);
                   if (in[0].requires_grad()) r[0] = div(g, in[1]);
                   if (in[1].requires_grad())
                     r[1] = neg(div(mul(g, in[0]), mul(in[1], in[1])));
                   return r;
                 });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  return make_op("add_scalar", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{g};
                 });
}

inline Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  return make_op("exp", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   return std::vector<Tensor>{mul(g, exp(in[0]))};
                 });
}

inline Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  return make_op("log", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   return std::vector<Tensor>{div(g, in[0])};
                 });
}

inline Tensor sqrt(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(av[i]);
  return make_op("sqrt", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   return std::vector<Tensor>{div(scale(g, 0.5), sqrt(in[0]))};
                 });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return make_op("tanh", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   Tensor t = tanh(in[0]);
                   return std::vector<Tensor>{
                       mul(g, add_scalar(neg(mul(t, t)), 1.0))};
                 });
}

inline Tensor leaky_relu(const Tensor& a, double slope = 0.2) {
  std::vector<double> out(a.size()), mask(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = av[i] >= 0.0 ? 1.0 : slope;
    mask[i] = m;
    out[i] = m * av[i];
  }
  Tensor mask_t = Tensor::constant(a.shape(), std::move(mask));
  return make_op("leaky_relu", a.shape(), std::move(out), {a},
                 [mask_t](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{mul(g, mask_t)};
                 });
}

inline Tensor clamp_min(const Tensor& a, double lo) {
  std::vector<double> out(a.size()), mask(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool pass = av[i] >= lo;
    mask[i] = pass ? 1.0 : 0.0;
    out[i] = pass ? av[i] : lo;
  }
  Tensor mask_t = Tensor::constant(a.shape(), std::move(mask));
  return make_op("clamp_min", a.shape(), std::move(out), {a},
                 [mask_t](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{mul(g, mask_t)};
                 });
}

inline Tensor square(const Tensor& a) { return mul(a, a); }

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

inline Tensor transpose(const Tensor& a);

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::op_check(a.shape().size() == 2 && b.shape().size() == 2, "matmul",
                   "needs 2-d operands, got " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  detail::op_check(b.shape()[0] == k, "matmul",
                   "inner extents differ: " + shape_str(a.shape()) + " * " +
                       shape_str(b.shape()));
  std::vector<double> out(m * n);
  Eigen::Map<const detail::MatRM> A(a.values().data(), m, k);
  Eigen::Map<const detail::MatRM> B(b.values().data(), k, n);
  Eigen::Map<detail::MatRM> C(out.data(), m, n);
  C.noalias() = A * B;
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [](const Tensor& g, const std::vector<Tensor>& in) {
                   std::vector<Tensor> r(2);
                   if (in[0].requires_grad()) r[0] = matmul(g, transpose(in[1]));
                   if (in[1].requires_grad()) r[1] = matmul(transpose(in[0]), g);
                   return r;
                 });
}

inline Tensor transpose(const Tensor& a) {
  detail::op_check(a.shape().size() == 2, "transpose",
                   "needs 2-d operand, got " + shape_str(a.shape()));
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  Eigen::Map<const detail::MatRM> A(a.values().data(), m, n);
  Eigen::Map<detail::MatRM> T(out.data(), n, m);
  T = A.transpose();
  return make_op("transpose", {n, m}, std::move(out), {a},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{transpose(g)};
                 });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  detail::op_check(numel(shape) == a.size(), "reshape",
                   "cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  Shape prev = a.shape();
  return make_op("reshape", std::move(shape), a.values(), {a},
                 [prev](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{reshape(g, prev)};
                 });
}

// ---------------------------------------------------------------------------
// reductions / broadcasts
// ---------------------------------------------------------------------------

inline Tensor expand_scalar(const Tensor& s, const Shape& shape);

inline Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  Shape prev = a.shape();
  return make_op("sum_all", {1}, {acc}, {a},
                 [prev](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{expand_scalar(g, prev)};
                 });
}

inline Tensor expand_scalar(const Tensor& s, const Shape& shape) {
  detail::op_check(s.size() == 1, "expand_scalar",
                   "source must be scalar, got " + shape_str(s.shape()));
  std::vector<double> out(numel(shape), s.values()[0]);
  return make_op("expand_scalar", shape, std::move(out), {s},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{sum_all(g)};
                 });
}

inline Tensor mean_all(const Tensor& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

inline Tensor broadcast_axis(const Tensor& a, std::size_t axis, std::size_t n);

// Keeps the reduced axis with extent 1.
inline Tensor sum_axis(const Tensor& a, std::size_t axis) {
  detail::op_check(axis < a.shape().size(), "sum_axis", "axis out of range");
  const auto d = detail::axis_dims(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = 1;
  std::vector<double> out(d.outer * d.inner, 0.0);
  const auto& av = a.values();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t j = 0; j < d.n; ++j) {
      const double* src = av.data() + (o * d.n + j) * d.inner;
      double* dst = out.data() + o * d.inner;
      for (std::size_t i = 0; i < d.inner; ++i) dst[i] += src[i];
    }
  const std::size_t n = d.n;
  return make_op("sum_axis", std::move(out_shape), std::move(out), {a},
                 [axis, n](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{broadcast_axis(g, axis, n)};
                 });
}

inline Tensor broadcast_axis(const Tensor& a, std::size_t axis, std::size_t n) {
  detail::op_check(axis < a.shape().size() && a.shape()[axis] == 1,
                   "broadcast_axis",
                   "axis extent must be 1 in " + shape_str(a.shape()));
  Shape out_shape = a.shape();
  out_shape[axis] = n;
  const auto d = detail::axis_dims(a.shape(), axis);
  std::vector<double> out(d.outer * n * d.inner);
  const auto& av = a.values();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      std::copy_n(av.data() + o * d.inner, d.inner,
                  out.data() + (o * n + j) * d.inner);
  return make_op("broadcast_axis", std::move(out_shape), std::move(out), {a},
                 [axis](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{sum_axis(g, axis)};
                 });
}

inline Tensor mean_axis(const Tensor& a, std::size_t axis) {
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(a.shape()[axis]));
}

// Per-slice max as a constant tensor (used for softmax stabilization; exact
// because softmax is shift-invariant along the reduced axis).
inline Tensor max_axis_const(const Tensor& a, std::size_t axis) {
  const auto d = detail::axis_dims(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = 1;
  std::vector<double> out(d.outer * d.inner,
                          -std::numeric_limits<double>::infinity());
  const auto& av = a.values();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t j = 0; j < d.n; ++j)
      for (std::size_t i = 0; i < d.inner; ++i)
        out[o * d.inner + i] =
            std::max(out[o * d.inner + i], av[(o * d.n + j) * d.inner + i]);
  return Tensor::constant(std::move(out_shape), std::move(out));
}

// ---------------------------------------------------------------------------
// slicing / concatenation
// ---------------------------------------------------------------------------

inline Tensor pad_axis(const Tensor& a, std::size_t axis, std::size_t before,
                       std::size_t after);

inline Tensor slice_axis(const Tensor& a, std::size_t axis, std::size_t start,
                         std::size_t len) {
  detail::op_check(axis < a.shape().size() && start + len <= a.shape()[axis],
                   "slice_axis",
                   "range [" + std::to_string(start) + ", " +
                       std::to_string(start + len) + ") exceeds " +
                       shape_str(a.shape()));
  const auto d = detail::axis_dims(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = len;
  std::vector<double> out(d.outer * len * d.inner);
  const auto& av = a.values();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t j = 0; j < len; ++j)
      std::copy_n(av.data() + (o * d.n + start + j) * d.inner, d.inner,
                  out.data() + (o * len + j) * d.inner);
  const std::size_t after = a.shape()[axis] - start - len;
  return make_op("slice_axis", std::move(out_shape), std::move(out), {a},
                 [axis, start, after](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{pad_axis(g, axis, start, after)};
                 });
}

inline Tensor pad_axis(const Tensor& a, std::size_t axis, std::size_t before,
                       std::size_t after) {
  detail::op_check(axis < a.shape().size(), "pad_axis", "axis out of range");
  const auto d = detail::axis_dims(a.shape(), axis);
  const std::size_t n_out = before + d.n + after;
  Shape out_shape = a.shape();
  out_shape[axis] = n_out;
  std::vector<double> out(d.outer * n_out * d.inner, 0.0);
  const auto& av = a.values();
  for (std::size_t o = 0; o < d.outer; ++o)
    for (std::size_t j = 0; j < d.n; ++j)
      std::copy_n(av.data() + (o * d.n + j) * d.inner, d.inner,
                  out.data() + (o * n_out + before + j) * d.inner);
  const std::size_t len = d.n;
  return make_op("pad_axis", std::move(out_shape), std::move(out), {a},
                 [axis, before, len](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{slice_axis(g, axis, before, len)};
                 });
}

inline Tensor concat_axis(const std::vector<Tensor>& parts, std::size_t axis) {
  detail::op_check(!parts.empty(), "concat_axis", "no operands");
  Shape out_shape = parts[0].shape();
  detail::op_check(axis < out_shape.size(), "concat_axis", "axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    detail::op_check(s.size() == out_shape.size(), "concat_axis",
                     "rank mismatch " + shape_str(s));
    for (std::size_t i = 0; i < s.size(); ++i)
      detail::op_check(i == axis || s[i] == out_shape[i], "concat_axis",
                       "extent mismatch " + shape_str(s) + " vs " +
                           shape_str(out_shape));
    total += s[axis];
  }
  out_shape[axis] = total;
  const auto d = detail::axis_dims(out_shape, axis);
  std::vector<double> out(numel(out_shape));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pn = p.shape()[axis];
    const auto& pv = p.values();
    for (std::size_t o = 0; o < d.outer; ++o)
      for (std::size_t j = 0; j < pn; ++j)
        std::copy_n(pv.data() + (o * pn + j) * d.inner, d.inner,
                    out.data() + (o * d.n + offset + j) * d.inner);
    offset += pn;
  }
  return make_op("concat_axis", std::move(out_shape), std::move(out), parts,
                 [axis](const Tensor& g, const std::vector<Tensor>& in) {
                   std::vector<Tensor> r(in.size());
                   std::size_t start = 0;
                   for (std::size_t i = 0; i < in.size(); ++i) {
                     const std::size_t len = in[i].shape()[axis];
                     if (in[i].requires_grad())
                       r[i] = slice_axis(g, axis, start, len);
                     start += len;
                   }
                   return r;
                 });
}

// ---------------------------------------------------------------------------
// convolution support (im2col)
// ---------------------------------------------------------------------------

inline std::size_t conv_out_len(std::size_t t, std::size_t k, std::size_t stride,
                                std::size_t pad) {
  detail::op_check(t + 2 * pad >= k, "conv1d", "kernel longer than padded input");
  return (t + 2 * pad - k) / stride + 1;
}

struct ConvDims {
  std::size_t batch, channels, time, kernel, stride, pad;
};

inline Tensor fold(const Tensor& cols, const ConvDims& cd);

// x: [B, C, T] -> columns [C*K, B*L]
inline Tensor unfold(const Tensor& x, std::size_t kernel, std::size_t stride,
                     std::size_t pad) {
  detail::op_check(x.shape().size() == 3, "unfold",
                   "needs [batch, channels, time], got " + shape_str(x.shape()));
  const ConvDims cd{x.shape()[0], x.shape()[1], x.shape()[2], kernel, stride, pad};
  const std::size_t L = conv_out_len(cd.time, kernel, stride, pad);
  std::vector<double> out(cd.channels * kernel * cd.batch * L, 0.0);
  const auto& xv = x.values();
  const std::size_t BL = cd.batch * L;
  for (std::size_t b = 0; b < cd.batch; ++b)
    for (std::size_t c = 0; c < cd.channels; ++c)
      for (std::size_t k = 0; k < kernel; ++k)
        for (std::size_t l = 0; l < L; ++l) {
          const std::ptrdiff_t t =
              static_cast<std::ptrdiff_t>(l * stride + k) -
              static_cast<std::ptrdiff_t>(pad);
          if (t < 0 || t >= static_cast<std::ptrdiff_t>(cd.time)) continue;
          out[(c * kernel + k) * BL + b * L + l] =
              xv[(b * cd.channels + c) * cd.time + t];
        }
  return make_op("unfold", {cd.channels * kernel, BL}, std::move(out), {x},
                 [cd](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{fold(g, cd)};
                 });
}

// columns [C*K, B*L] -> [B, C, T], scatter-add inverse of unfold
inline Tensor fold(const Tensor& cols, const ConvDims& cd) {
  const std::size_t L = conv_out_len(cd.time, cd.kernel, cd.stride, cd.pad);
  const std::size_t BL = cd.batch * L;
  detail::op_check(cols.shape() ==
                       Shape{cd.channels * cd.kernel, BL},
                   "fold", "column shape " + shape_str(cols.shape()) +
                               " does not match conv dims");
  std::vector<double> out(cd.batch * cd.channels * cd.time, 0.0);
  const auto& cv = cols.values();
  for (std::size_t b = 0; b < cd.batch; ++b)
    for (std::size_t c = 0; c < cd.channels; ++c)
      for (std::size_t k = 0; k < cd.kernel; ++k)
        for (std::size_t l = 0; l < L; ++l) {
          const std::ptrdiff_t t =
              static_cast<std::ptrdiff_t>(l * cd.stride + k) -
              static_cast<std::ptrdiff_t>(cd.pad);
          if (t < 0 || t >= static_cast<std::ptrdiff_t>(cd.time)) continue;
          out[(b * cd.channels + c) * cd.time + t] +=
              cv[(c * cd.kernel + k) * BL + b * L + l];
        }
  const std::size_t kernel = cd.kernel, stride = cd.stride, pad = cd.pad;
  return make_op("fold", {cd.batch, cd.channels, cd.time}, std::move(out), {cols},
                 [kernel, stride, pad](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{unfold(g, kernel, stride, pad)};
                 });
}

inline Tensor batch_to_cols(const Tensor& x);

// [C, B*L] -> [B, C, L]
inline Tensor cols_to_batch(const Tensor& y, std::size_t batch) {
  detail::op_check(y.shape().size() == 2 && y.shape()[1] % batch == 0,
                   "cols_to_batch",
                   "cannot split " + shape_str(y.shape()) + " into batch " +
                       std::to_string(batch));
  const std::size_t C = y.shape()[0], L = y.shape()[1] / batch;
  std::vector<double> out(batch * C * L);
  const auto& yv = y.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t b = 0; b < batch; ++b)
      std::copy_n(yv.data() + c * batch * L + b * L, L,
                  out.data() + (b * C + c) * L);
  return make_op("cols_to_batch", {batch, C, L}, std::move(out), {y},
                 [](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{batch_to_cols(g)};
                 });
}

// [B, C, L] -> [C, B*L]
inline Tensor batch_to_cols(const Tensor& x) {
  detail::op_check(x.shape().size() == 3, "batch_to_cols",
                   "needs [batch, channels, time], got " + shape_str(x.shape()));
  const std::size_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  std::vector<double> out(B * C * L);
  const auto& xv = x.values();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      std::copy_n(xv.data() + (b * C + c) * L, L,
                  out.data() + c * B * L + b * L);
  return make_op("batch_to_cols", {C, B * L}, std::move(out), {x},
                 [B](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{cols_to_batch(g, B)};
                 });
}

inline Tensor downsample_sum(const Tensor& x, std::size_t factor);

// Nearest-neighbour upsampling along the last (time) axis.
inline Tensor upsample_repeat(const Tensor& x, std::size_t factor) {
  const Shape& s = x.shape();
  detail::op_check(!s.empty() && factor >= 1, "upsample_repeat", "bad arguments");
  const std::size_t L = s.back(), outer = x.size() / L;
  Shape out_shape = s;
  out_shape.back() = L * factor;
  std::vector<double> out(x.size() * factor);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t f = 0; f < factor; ++f)
        out[(o * L + l) * factor + f] = xv[o * L + l];
  return make_op("upsample_repeat", std::move(out_shape), std::move(out), {x},
                 [factor](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{downsample_sum(g, factor)};
                 });
}

inline Tensor downsample_sum(const Tensor& x, std::size_t factor) {
  const Shape& s = x.shape();
  detail::op_check(!s.empty() && s.back() % factor == 0, "downsample_sum",
                   "time extent not divisible by factor");
  const std::size_t Lout = s.back() / factor, outer = x.size() / s.back();
  Shape out_shape = s;
  out_shape.back() = Lout;
  std::vector<double> out(outer * Lout, 0.0);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < Lout; ++l)
      for (std::size_t f = 0; f < factor; ++f)
        out[o * Lout + l] += xv[(o * Lout + l) * factor + f];
  return make_op("downsample_sum", std::move(out_shape), std::move(out), {x},
                 [factor](const Tensor& g, const std::vector<Tensor>&) {
                   return std::vector<Tensor>{upsample_repeat(g, factor)};
                 });
}

// ---------------------------------------------------------------------------
// composite layers
// ---------------------------------------------------------------------------

inline Tensor softmax(const Tensor& x, std::size_t axis) {
  const std::size_t n = x.shape()[axis];
  Tensor m = max_axis_const(x, axis);
  Tensor e = exp(sub(x, broadcast_axis(m, axis, n)));
  Tensor s = sum_axis(e, axis);
  return div(e, broadcast_axis(s, axis, n));
}

// Normalizes over all axes but the leading one (over everything for rank 1).
// The epsilon is a floor on the variance, not an addend, so well-conditioned
// inputs normalize exactly.
namespace detail {
inline std::size_t& layer_norm_calls() {
  static std::size_t n = 0;
  return n;
}
}  // namespace detail

inline Tensor layer_norm(const Tensor& x, double eps = 1e-5) {
  ++detail::layer_norm_calls();
  const Shape orig = x.shape();
  const std::size_t B = orig.size() >= 2 ? orig[0] : 1;
  const std::size_t N = x.size() / B;
  Tensor x2 = reshape(x, {B, N});
  const double inv_n = 1.0 / static_cast<double>(N);
  Tensor mu = scale(sum_axis(x2, 1), inv_n);
  Tensor xc = sub(x2, broadcast_axis(mu, 1, N));
  Tensor var = scale(sum_axis(square(xc), 1), inv_n);
  Tensor y = div(xc, broadcast_axis(sqrt(clamp_min(var, eps)), 1, N));
  return reshape(y, orig);
}

// x: [B, C, T], w: [Cout, C*K], bias: [Cout]
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
                     std::size_t kernel, std::size_t stride, std::size_t pad) {
  detail::op_check(x.shape().size() == 3, "conv1d",
                   "input must be [batch, channels, time], got " +
                       shape_str(x.shape()));
  detail::op_check(
      w.shape().size() == 2 && w.shape()[1] == x.shape()[1] * kernel, "conv1d",
      "weights " + shape_str(w.shape()) + " incompatible with input " +
          shape_str(x.shape()) + " and kernel " + std::to_string(kernel));
  detail::op_check(bias.shape() == Shape{w.shape()[0]}, "conv1d",
                   "bias " + shape_str(bias.shape()) + " must match " +
                       std::to_string(w.shape()[0]) + " output channels");
  Tensor cols = unfold(x, kernel, stride, pad);
  Tensor y = matmul(w, cols);
  y = add(y, broadcast_axis(reshape(bias, {bias.size(), 1}), 1, y.shape()[1]));
  return cols_to_batch(y, x.shape()[0]);
}

// Pointwise (1x1) convolution over channels; x: [B, C, N], w: [Cout, C].
inline Tensor conv1x1(const Tensor& x, const Tensor& w) {
  detail::op_check(x.shape().size() == 3 && w.shape().size() == 2 &&
                       w.shape()[1] == x.shape()[1],
                   "conv1x1", "weights " + shape_str(w.shape()) +
                                  " incompatible with input " + shape_str(x.shape()));
  return cols_to_batch(matmul(w, batch_to_cols(x)), x.shape()[0]);
}

// x: [B, F], w: [U, F], bias: [U]
inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
  detail::op_check(x.shape().size() == 2 && w.shape().size() == 2 &&
                       x.shape()[1] == w.shape()[1],
                   "dense", "input " + shape_str(x.shape()) +
                                " incompatible with weights " + shape_str(w.shape()));
  detail::op_check(bias.shape() == Shape{w.shape()[0]}, "dense",
                   "bias " + shape_str(bias.shape()) + " must have " +
                       std::to_string(w.shape()[0]) + " units");
  Tensor y = matmul(x, transpose(w));
  return add(y, broadcast_axis(reshape(bias, {1, bias.size()}), 0, x.shape()[0]));
}

inline Tensor l2_norm(const Tensor& x, double eps = 0.0) {
  Tensor s = sum_all(square(x));
  return sqrt(eps > 0.0 ? add_scalar(s, eps) : s);
}

}  // namespace motionforge
