#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "complat/dataset.hpp"
#include "complat/matrix.hpp"

namespace complat {

// Capacity ladder for the semantic-to-collaborative mapping.
enum class ProbeArch { Identity, Linear, Mlp0, Mlp1, Mlp2, Mlp3 };

const char* to_string(ProbeArch arch);
ProbeArch probe_arch_from_string(const std::string& name);
std::vector<std::size_t> probe_hidden_widths(ProbeArch arch);

// Feed-forward mapping with ReLU hidden layers; Identity has no parameters.
struct ProbeMapping {
  ProbeArch arch = ProbeArch::Linear;
  std::vector<Matrix> weights;               // per layer, out x in
  std::vector<std::vector<double>> biases;   // per layer

  Matrix apply(const Matrix& x) const;
};

struct ProbeFitConfig {
  double lr = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t full_batch_limit = 65536;  // mini-batches beyond this many rows
  std::size_t batch_size = 8192;
  double plateau_rel = 1e-6;     // relative improvement threshold
  std::size_t plateau_window = 50;  // epochs without that improvement
  std::uint64_t seed = 1;
};

// Seeded shuffle of item ids; first ceil(fraction*n) go to the fit set.
// Both halves are returned sorted ascending.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split_items(
    std::size_t n_items, double fraction, std::uint64_t seed);

// Minimizes mean squared error of mapping(sem) against cf over the given rows.
ProbeMapping fit_probe(const Matrix& sem, const Matrix& cf,
                       std::span<const std::uint32_t> fit_ids, ProbeArch arch,
                       const ProbeFitConfig& cfg);

// 1 - SS_res/SS_tot pooled over all entries, SS_tot centered per target column.
double r_squared(const Matrix& pred, const Matrix& target);

// Mean over rows of cosine(pred_i, target_i); zero rows contribute 0.
double mean_cosine(const Matrix& pred, const Matrix& target);

// Mean Jaccard of each row's top-k cosine neighbor sets (self excluded) in the
// two spaces; ties broken by ascending id.
double geo_jaccard(const Matrix& pred, const Matrix& target, std::size_t k);

// Spearman rho with average-rank tie handling.
double spearman_rho(std::span<const double> a, std::span<const double> b);

// Mean over rows of the Spearman correlation between cosine rankings of a
// fixed seeded sample of other rows in the two spaces.
double rank_correlation(const Matrix& pred, const Matrix& target, std::size_t sample_size,
                        std::uint64_t seed);

// Mean Jaccard between each user's top-K lists retrieved against the target
// item embeddings versus the projected ones (CF user embeddings fixed;
// catalog restricted to `catalog`; each user's train positives excluded).
double probe_list_jaccard(const Matrix& cf_users, const Matrix& cf_items, const Matrix& projected,
                          const SplitDataset& split, std::span<const std::uint32_t> catalog,
                          std::size_t k);

enum class RecallScope { PartitionOnly, FullCatalog };

// Downstream Recall@K against target vs projected item embeddings with the CF
// user side fixed. PartitionOnly restricts candidates and truths to `catalog`;
// FullCatalog scores everything with only `catalog` rows projected.
std::pair<double, double> probe_downstream_recall(const Matrix& cf_users, const Matrix& cf_items,
                                                  const Matrix& projected,
                                                  const SplitDataset& split,
                                                  std::span<const std::uint32_t> catalog,
                                                  std::size_t k, RecallScope scope);

struct ProbeMetrics {
  double r2 = 0.0;
  double cos = 0.0;
  double geo_jac = 0.0;
  double rank_cor = 0.0;
  double list_jac = 0.0;
  double recall_cf = 0.0;
  double recall_ps = 0.0;
};

struct ProbeRow {
  std::string model;
  ProbeMetrics train;
  ProbeMetrics test;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  std::size_t geo_k = 10;
  std::size_t rank_sample = 500;
  std::size_t k = 20;
  RecallScope scope = RecallScope::PartitionOnly;
  double item_fraction = 0.8;
  std::uint64_t seed = 1;
};

// Contrastive alignment baseline: two projection heads trained with the
// in-batch item-level contrastive objective (anchor = mapped CF embedding,
// positive = the same item's mapped semantic embedding).
struct AlignmentConfig {
  double tau = 0.15;
  double lr = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t batch_size = 1024;
  double plateau_rel = 1e-6;
  std::size_t plateau_window = 50;
  std::uint64_t seed = 1;
  std::size_t d_out = 64;
};

std::pair<ProbeMapping, ProbeMapping> train_contrastive_alignment(
    const Matrix& sem, const Matrix& cf, std::span<const std::uint32_t> fit_ids,
    const AlignmentConfig& cfg);

// Mean in-batch contrastive loss over one batch of item ids (test helper).
double alignment_batch_loss(const ProbeMapping& g_cf, const ProbeMapping& g_sem,
                            const Matrix& cf, const Matrix& sem,
                            std::span<const std::uint32_t> batch, double tau);

}  // namespace complat
