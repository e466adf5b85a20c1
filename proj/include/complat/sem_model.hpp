#pragma once

#include <cstdint>
#include <vector>

#include "complat/dataset.hpp"
#include "complat/matrix.hpp"
#include "complat/train_loop.hpp"

namespace complat {

// Pure content view: one affine projection over frozen item vectors, trained
// with InfoNCE against mean-pooled user histories. The item vectors are never
// mutated.
struct SemModel {
  Matrix w;               // d_out x d_in
  std::vector<double> b;  // d_out; empty when the bias is disabled
  std::size_t d_in() const { return w.cols; }
  std::size_t d_out() const { return w.rows; }
};

// Norm(mean of the user's train-history item vectors); zero vector for an
// empty history.
std::vector<double> user_semantic_input(const SplitDataset& split, const Matrix& item_vecs,
                                        std::uint32_t user);

// All users' pooled inputs as rows.
Matrix pooled_user_inputs(const SplitDataset& split, const Matrix& item_vecs);

// Projections of every row of x: W x + b, optionally L2-normalized per row.
Matrix sem_project_all(const SemModel& model, const Matrix& x, bool normalize);

struct SemBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> pos_items;
  std::vector<std::vector<std::uint32_t>> negatives;  // per anchor
};

// Mean InfoNCE over the batch; anchors and candidates are normalized
// projections, similarities are therefore cosines. Gradients (zeroed first)
// cover W and b only.
double sem_batch_loss_and_grad(const SemModel& model, const Matrix& item_vecs,
                               const Matrix& pooled_users, const SemBatch& batch, double tau,
                               Matrix& g_w, std::vector<double>& g_b);

SemModel train_sem(const SplitDataset& split, const Matrix& item_vecs, const TrainConfig& cfg,
                   std::size_t dim, bool use_bias = true, TrainInfo* info = nullptr);

}  // namespace complat
