#pragma once

#include "stego/params.hpp"

namespace stego {

/// Bias-corrected Adam. Moment buffers are keyed by parameter name and
/// allocated on first use.
template <typename S>
struct AdamState {
  S lr = static_cast<S>(1e-4);
  S beta1 = static_cast<S>(0.9);
  S beta2 = static_cast<S>(0.999);
  S eps = static_cast<S>(1e-8);
  long t = 0;

  struct Moments {
    ArrX<S> m, v;
  };
  std::map<std::string, Moments> moments;
};

template <typename S>
void adam_step(ParamStore<S>& store, AdamState<S>& state) {
  state.t += 1;
  const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(state.beta1), state.t));
  const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(state.beta2), state.t));
  for (auto& [name, param] : store) {
    if (!param.has_grad())
      throw NumericError("adam_step: missing gradient for parameter " + name);
    auto& mom = state.moments[name];
    if (mom.m.size() != param.numel()) {
      mom.m = ArrX<S>::Zero(param.numel());
      mom.v = ArrX<S>::Zero(param.numel());
    }
    const ArrX<S>& g = param.grad();
    mom.m = state.beta1 * mom.m + (S(1) - state.beta1) * g;
    mom.v = state.beta2 * mom.v + (S(1) - state.beta2) * g.square();
    param.values_mut() -= state.lr * (mom.m / bc1) / ((mom.v / bc2).sqrt() + state.eps);
  }
}

}  // namespace stego
