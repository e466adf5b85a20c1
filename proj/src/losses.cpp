#include "complat/losses.hpp"

#include <algorithm>
#include <cmath>

#include "complat/errors.hpp"
#include "complat/matrix.hpp"

namespace complat {

double log_sigmoid(double x) {
  // -softplus(-x) = min(x, 0) - log1p(exp(-|x|))
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

double bpr_loss(double score_pos, double score_neg) {
  return -log_sigmoid(score_pos - score_neg);
}

BprGrad bpr_grad(double score_pos, double score_neg) {
  const double delta = score_pos - score_neg;
  // 1 - sigma(delta) = sigma(-delta)
  const double coeff = 1.0 / (1.0 + std::exp(delta));
  return {-coeff, coeff};
}

InfoNceSims infonce_from_sims(double sim_pos, std::span<const double> sim_neg, double tau) {
  if (tau <= 0.0) throw ConfigError("InfoNCE temperature must be positive");
  if (sim_neg.empty()) throw ConfigError("InfoNCE needs at least one negative");

  const double lp = sim_pos / tau;
  double m = lp;
  for (double s : sim_neg) m = std::max(m, s / tau);

  double denom = std::exp(lp - m);
  std::vector<double> en(sim_neg.size());
  for (std::size_t j = 0; j < sim_neg.size(); ++j) {
    en[j] = std::exp(sim_neg[j] / tau - m);
    denom += en[j];
  }

  InfoNceSims out;
  out.loss = std::log(denom) + m - lp;
  const double p_pos = std::exp(lp - m) / denom;
  out.d_pos = (p_pos - 1.0) / tau;
  out.d_neg.resize(sim_neg.size());
  for (std::size_t j = 0; j < sim_neg.size(); ++j) out.d_neg[j] = (en[j] / denom) / tau;
  return out;
}

void cosine_backward(std::span<const double> a, std::span<const double> b, double g,
                     std::span<double> ga, std::span<double> gb) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return;
  const double ab = dot(a, b);
  const double inv = 1.0 / (na * nb);
  const double c = ab * inv;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ga[k] += g * (b[k] * inv - c * a[k] / (na * na));
    gb[k] += g * (a[k] * inv - c * b[k] / (nb * nb));
  }
}

InfoNceVectors infonce_loss(std::span<const double> anchor, std::span<const double> positive,
                            const std::vector<std::vector<double>>& negatives, double tau) {
  std::vector<double> sims(negatives.size());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    if (negatives[j].size() != anchor.size())
      throw DataError("InfoNCE: negative dimension mismatch");
    sims[j] = cosine(anchor, negatives[j]);
  }
  if (positive.size() != anchor.size()) throw DataError("InfoNCE: positive dimension mismatch");
  const auto base = infonce_from_sims(cosine(anchor, positive), sims, tau);

  InfoNceVectors out;
  out.loss = base.loss;
  out.d_anchor.assign(anchor.size(), 0.0);
  out.d_positive.assign(anchor.size(), 0.0);
  out.d_negatives.assign(negatives.size(), std::vector<double>(anchor.size(), 0.0));
  cosine_backward(anchor, positive, base.d_pos, out.d_anchor, out.d_positive);
  for (std::size_t j = 0; j < negatives.size(); ++j)
    cosine_backward(anchor, negatives[j], base.d_neg[j], out.d_anchor, out.d_negatives[j]);
  return out;
}

}  // namespace complat
