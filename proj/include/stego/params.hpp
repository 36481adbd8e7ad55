#pragma once

#include "stego/rng.hpp"
#include "stego/tensor.hpp"

#include <map>

namespace stego {

/// Named trainable tensors. Iteration order is lexicographic by name, which
/// fixes optimizer update order and checkpoint layout.
template <typename S>
class ParamStore {
 public:
  Tensor<S>& add(const std::string& name, Tensor<S> t) {
    if (params_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    t.node()->requires_grad = true;
    return params_.emplace(name, std::move(t)).first->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Tensor<S>& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor<S>& get(const std::string& name) const {
    return const_cast<ParamStore*>(this)->get(name);
  }

  size_t size() const { return params_.size(); }
  Index total_values() const {
    Index n = 0;
    for (const auto& [k, v] : params_) n += v.numel();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grads() {
    for (auto& [k, v] : params_) v.zero_grad();
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& [k, v] : params_) {
      ArrX<T> data = v.values().template cast<T>();
      out.add(k, Tensor<T>::from_array(v.shape(), std::move(data), true));
    }
    return out;
  }

 private:
  std::map<std::string, Tensor<S>> params_;
};

namespace init {

template <typename S>
Tensor<S> truncated_normal(Shape shape, double stddev, Rng& rng) {
  const Index n = shape_numel(shape);
  ArrX<S> v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<S>(rng.truncated_normal(stddev));
  return Tensor<S>::from_array(std::move(shape), std::move(v));
}

/// Uniform in +-1/sqrt(fan_in), the usual convolution default.
template <typename S>
Tensor<S> fanin_uniform(Shape shape, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  const Index n = shape_numel(shape);
  ArrX<S> v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<S>(rng.uniform(-bound, bound));
  return Tensor<S>::from_array(std::move(shape), std::move(v));
}

template <typename S>
Tensor<S> zeros(Shape shape) {
  return Tensor<S>::zeros(std::move(shape));
}

template <typename S>
Tensor<S> ones(Shape shape) {
  return Tensor<S>::constant(std::move(shape), S(1));
}

}  // namespace init
}  // namespace stego
