#pragma once

#include <span>
#include <vector>

namespace complat {

// log(sigmoid(x)) computed without overflow for large |x|
double log_sigmoid(double x);

// -ln sigma(score_pos - score_neg)
double bpr_loss(double score_pos, double score_neg);

struct BprGrad {
  double pos = 0.0;
  double neg = 0.0;
};

BprGrad bpr_grad(double score_pos, double score_neg);

// InfoNCE over precomputed similarities, log-sum-exp stabilized.
// Returns the loss and its gradient with respect to each similarity.
struct InfoNceSims {
  double loss = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_neg;
};

InfoNceSims infonce_from_sims(double sim_pos, std::span<const double> sim_neg, double tau);

// InfoNCE on raw vectors with cosine similarity; gradients flow through the
// cosine to every input vector.
struct InfoNceVectors {
  double loss = 0.0;
  std::vector<double> d_anchor;
  std::vector<double> d_positive;
  std::vector<std::vector<double>> d_negatives;
};

InfoNceVectors infonce_loss(std::span<const double> anchor, std::span<const double> positive,
                            const std::vector<std::vector<double>>& negatives, double tau);

// d cos(a,b) / da accumulated into ga (and symmetrically for b), scaled by g
void cosine_backward(std::span<const double> a, std::span<const double> b, double g,
                     std::span<double> ga, std::span<double> gb);

}  // namespace complat
