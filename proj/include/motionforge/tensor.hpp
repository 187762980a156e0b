#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace motionforge {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

struct Node;

// Dense N-d array of doubles. Copies share the underlying node, so a Tensor
// behaves as an immutable value handle; only leaf tensors (parameters) may be
// mutated in place, and only between graph constructions.
class Tensor {
 public:
  Tensor() = default;

  static Tensor variable(Shape shape, std::vector<double> values);
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();  // leaf tensors only
  bool requires_grad() const;
  double item() const;

  // Same values, cut off from the graph.
  Tensor detach() const;

  Node* node() const { return node_.get(); }

  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

// Builds gradient tensors for the given op's inputs from the output adjoint.
// Implementations compose tensor ops so the result is itself differentiable.
using BackwardFn = std::function<std::vector<Tensor>(
    const Tensor& grad_out, const std::vector<Tensor>& inputs)>;

struct Node {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

inline Tensor Tensor::variable(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size())
    throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                " does not match value count " +
                                std::to_string(values.size()));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

inline Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  Tensor t = variable(std::move(shape), std::move(values));
  t.node()->requires_grad = false;
  return t;
}

inline Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  Tensor t = constant(shape, std::vector<double>(numel(shape), 0.0));
  t.node()->requires_grad = requires_grad;
  return t;
}

inline Tensor Tensor::scalar(double v, bool requires_grad) {
  Tensor t = constant({1}, {v});
  t.node()->requires_grad = requires_grad;
  return t;
}

inline const Shape& Tensor::shape() const { return node_->shape; }
inline std::size_t Tensor::size() const { return node_->values.size(); }
inline const std::vector<double>& Tensor::values() const { return node_->values; }

inline std::vector<double>& Tensor::mutable_values() {
  if (node_->backward)
    throw std::logic_error("tensor: only leaf tensors may be mutated");
  return node_->values;
}

inline bool Tensor::requires_grad() const { return node_->requires_grad; }

inline double Tensor::item() const {
  if (size() != 1)
    throw std::invalid_argument("tensor: item() on non-scalar " + shape_str(shape()));
  return node_->values[0];
}

inline Tensor Tensor::detach() const {
  return Tensor::constant(node_->shape, node_->values);
}

inline Tensor make_op(const char* op, Shape shape, std::vector<double> values,
                      std::vector<Tensor> inputs, BackwardFn backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = op;
  bool rg = false;
  for (const auto& in : inputs) rg = rg || in.requires_grad();
  n->requires_grad = rg;
  if (rg) {
    n->inputs = std::move(inputs);
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

namespace detail {

inline void topo_visit(Node* n, std::unordered_set<Node*>& seen,
                       std::vector<Node*>& order) {
  // Iterative DFS; graphs can be deep during training.
  struct Frame {
    Node* node;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{n}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == 0) {
      if (seen.count(f.node)) {
        stack.pop_back();
        continue;
      }
      seen.insert(f.node);
    }
    if (f.next < f.node->inputs.size()) {
      Node* child = f.node->inputs[f.next++].node();
      if (child->requires_grad && !seen.count(child)) stack.push_back({child});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
}

}  // namespace detail

Tensor add(const Tensor& a, const Tensor& b);  // defined in ops.hpp

// Reverse-mode gradient of a scalar with respect to each param. Adjoints are
// built out of tensor ops, so differentiating through the returned gradients
// (reverse-over-reverse) works as long as the params still require grad.
inline std::vector<Tensor> gradients(const Tensor& loss,
                                     const std::vector<Tensor>& params) {
  if (loss.size() != 1)
    throw std::invalid_argument("gradients: loss must be scalar, got " +
                                shape_str(loss.shape()));
  std::unordered_map<Node*, Tensor> adjoint;
  if (loss.requires_grad()) {
    std::unordered_set<Node*> seen;
    std::vector<Node*> order;
    detail::topo_visit(loss.node(), seen, order);
    adjoint[loss.node()] = Tensor::constant(loss.shape(), {1.0});
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      auto found = adjoint.find(n);
      if (found == adjoint.end() || !n->backward) continue;
      std::vector<Tensor> in_grads = n->backward(found->second, n->inputs);
      if (in_grads.size() != n->inputs.size())
        throw std::logic_error(std::string("gradients: op ") + n->op +
                               " returned wrong number of input grads");
      for (std::size_t i = 0; i < n->inputs.size(); ++i) {
        Node* in = n->inputs[i].node();
        if (!in->requires_grad || !in_grads[i].defined()) continue;
        auto slot = adjoint.find(in);
        if (slot == adjoint.end())
          adjoint[in] = in_grads[i];
        else
          slot->second = add(slot->second, in_grads[i]);
      }
    }
  }
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto it = adjoint.find(p.node());
    out.push_back(it != adjoint.end() ? it->second : Tensor::zeros(p.shape()));
  }
  return out;
}

inline bool all_finite(const Tensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace motionforge
