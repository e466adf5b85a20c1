#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace complat {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient before moment updates
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  void resize(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

// One bias-corrected Adam update; t is 1-based. Throws NumericalError on a
// non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& opt, std::uint64_t t);

}  // namespace complat
