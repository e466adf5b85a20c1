#pragma once

#include <cstdint>
#include <vector>

#include "complat/dataset.hpp"
#include "complat/graph.hpp"
#include "complat/matrix.hpp"
#include "complat/sem_model.hpp"
#include "complat/train_loop.hpp"

namespace complat {

// Dual-encoder fusion: an affine semantic branch over frozen item vectors and
// a graph-propagated collaborative branch, combined per side by L2-normalizing
// each branch, concatenating, and renormalizing.
struct FusionModel {
  Matrix cf_user;  // ID embeddings, layer 0
  Matrix cf_item;
  SemModel sem;
  int layers = 2;
  std::size_t branch_dim() const { return sem.d_out(); }
};

// Norm(h_cf ⊕ h_sem); inputs are expected to be unit or zero vectors.
std::vector<double> fuse(std::span<const double> h_cf, std::span<const double> h_sem);

enum class FusionView : std::uint8_t { Full, CfOnly, SemOnly };

// Fused representations for every user and item (rows are unit or zero
// vectors of width 2d). Branch views zero the other half before fusing.
struct FusedEmbeddings {
  Matrix user;
  Matrix item;
  std::size_t branch_dim = 0;
};

FusedEmbeddings fusion_embeddings(const FusionModel& model, const BipartiteGraph& graph,
                                  const Matrix& item_vecs, const Matrix& pooled_users,
                                  FusionView view = FusionView::Full);

// Dot of fused user and item vectors; equals the mean of the two branch
// cosines when both branches are non-zero.
double fusion_score(const FusedEmbeddings& emb, std::uint32_t user, std::uint32_t item);

// Top-m pool items by fused score, ties by ascending item id. Pool entries in
// `exclusions` (sorted) are dropped; if fewer than m survive the whole
// filtered pool is returned and *short_pool is bumped when provided.
std::vector<std::uint32_t> mine_hard_negatives(std::span<const double> z_user,
                                               const Matrix& z_items,
                                               std::span<const std::uint32_t> pool, std::size_t m,
                                               std::span<const std::uint32_t> exclusions,
                                               std::size_t* short_pool = nullptr);

struct FusionBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> pos_items;
  std::vector<std::vector<std::uint32_t>> mined;  // per anchor, held fixed in the step
};

// Mean InfoNCE with per-anchor denominator = positive ∪ (unique in-batch
// items minus the user's train positives) ∪ mined negatives. Gradients
// (zeroed first) cover both ID tables and the semantic projection.
double fusion_batch_loss_and_grad(const FusionModel& model, const BipartiteGraph& graph,
                                  const SplitDataset& split, const Matrix& item_vecs,
                                  const Matrix& pooled_users, const FusionBatch& batch, double tau,
                                  Matrix& g_cf_user, Matrix& g_cf_item, Matrix& g_w,
                                  std::vector<double>& g_b);

FusionModel train_fusion(const SplitDataset& split, const Matrix& item_vecs,
                         const TrainConfig& cfg, std::size_t dim, int layers = 2,
                         TrainInfo* info = nullptr);

}  // namespace complat
