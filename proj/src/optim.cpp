#include "complat/optim.hpp"

#include <cmath>

#include "complat/errors.hpp"

namespace complat {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& opt, std::uint64_t t) {
  if (params.size() != grads.size()) throw DataError("adam_step: shape mismatch");
  if (t < 1) throw ConfigError("adam_step: t is 1-based");
  if (state.m.size() != params.size()) state.resize(params.size());

  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    double g = grads[k];
    if (!std::isfinite(g))
      throw NumericalError("non-finite gradient encountered; training aborted");
    g += opt.weight_decay * params[k];
    state.m[k] = opt.beta1 * state.m[k] + (1.0 - opt.beta1) * g;
    state.v[k] = opt.beta2 * state.v[k] + (1.0 - opt.beta2) * g * g;
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    params[k] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

}  // namespace complat
