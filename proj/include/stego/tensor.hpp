#pragma once

#include "stego/common.hpp"

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>

namespace stego {

/// Dense n-d array with reverse-mode gradient tracking, templated on scalar so
/// the same graph code runs in float for training and double for gradient
/// verification. Values are row-major; a tensor is immutable once built except
/// for its grad buffer, which the backward pass populates.
template <typename S>
class Tensor {
 public:
  struct Node {
    Shape shape;
    ArrX<S> value;
    ArrX<S> grad;  // allocated lazily, same length as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // distributes this->grad to parents

    void ensure_grad() {
      if (grad.size() != value.size()) grad = ArrX<S>::Zero(value.size());
    }
  };

  Tensor() = default;

  static Tensor zeros(Shape shape) { return constant(std::move(shape), S(0)); }

  static Tensor constant(Shape shape, S v) {
    const Index n = shape_numel(shape);
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = ArrX<S>::Constant(n, v);
    return t;
  }

  static Tensor from_array(Shape shape, ArrX<S> value, bool requires_grad = false) {
    if (shape_numel(shape) != value.size())
      throw DimensionError("tensor data length does not match shape " + shape_str(shape));
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(value);
    t.node_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_data(Shape shape, const std::vector<S>& data, bool requires_grad = false) {
    ArrX<S> v(static_cast<Index>(data.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = data[static_cast<size_t>(i)];
    return from_array(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar_value(S v) { return from_array({1}, ArrX<S>::Constant(1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index dim(size_t i) const { return node_->shape.at(i); }
  size_t rank() const { return node_->shape.size(); }
  Index numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const ArrX<S>& values() const { return node_->value; }
  ArrX<S>& values_mut() { return node_->value; }
  const S* data() const { return node_->value.data(); }
  S* data_mut() { return node_->value.data(); }
  S value_at(Index i) const { return node_->value[i]; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  const ArrX<S>& grad() const {
    if (!has_grad()) throw NumericError("gradient not populated");
    return node_->grad;
  }
  void zero_grad() {
    node_->ensure_grad();
    node_->grad.setZero();
  }
  void clear_grad() { node_->grad.resize(0); }

  S scalar() const {
    if (numel() != 1) throw DimensionError("scalar() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  std::shared_ptr<Node> node() const { return node_; }

  /// Reverse pass from a scalar tensor: seeds d(self)/d(self) = 1 and
  /// accumulates gradients into every reachable requires_grad node.
  void backward() const {
    if (numel() != 1) throw DimensionError("backward() requires a scalar loss");
    if (!node_->requires_grad) return;
    node_->ensure_grad();
    node_->grad[0] += S(1);

    std::vector<Node*> order;
    topo_sort(order);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backprop && n->requires_grad) {
        n->ensure_grad();
        n->backprop(*n);
      }
    }
  }

 private:
  void topo_sort(std::vector<Node*>& order) const {
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node* p = n->parents[next++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node> node_;
};

namespace detail {

template <typename S>
inline void check_finite(const ArrX<S>& v, const char* op) {
  if (!v.isFinite().all())
    throw NumericError(std::string("non-finite values produced by ") + op);
}

}  // namespace detail

/// Builds an op node: records parents and the pull-style backward closure when
/// grad mode is on and any parent needs gradients.
template <typename S, typename BackFn>
Tensor<S> make_op(const char* name, Shape shape, ArrX<S> value,
                  std::initializer_list<Tensor<S>> parents, BackFn&& back) {
  if (CheckedMode::enabled()) detail::check_finite(value, name);
  Tensor<S> out = Tensor<S>::from_array(std::move(shape), std::move(value));
  if (!GradMode::enabled()) return out;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (!needs) return out;
  auto node = out.node();
  node->requires_grad = true;
  node->parents.reserve(parents.size());
  for (const auto& p : parents) node->parents.push_back(p.node());
  node->backprop = std::forward<BackFn>(back);
  return out;
}

}  // namespace stego
