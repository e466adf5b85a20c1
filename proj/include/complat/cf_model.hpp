#pragma once

#include <cstdint>
#include <vector>

#include "complat/dataset.hpp"
#include "complat/graph.hpp"
#include "complat/matrix.hpp"
#include "complat/rng.hpp"
#include "complat/train_loop.hpp"

namespace complat {

// Graph-propagated ID-embedding recommender trained with BPR. The tables are
// the layer-0 parameters; scoring uses the layer-averaged propagation.
struct CfModel {
  Matrix user_emb;
  Matrix item_emb;
  int layers = 2;
};

CfModel init_cf_model(std::size_t n_users, std::size_t n_items, std::size_t dim, int layers,
                      Rng rng);

// Layer-averaged representations used for scoring.
void cf_final(const CfModel& model, const BipartiteGraph& graph, Matrix& user_out,
              Matrix& item_out);

struct BprBatch {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> pos_items;
  std::vector<std::uint32_t> neg_items;
};

// Mean BPR loss over the batch with gradients w.r.t. the raw embedding
// tables (through propagation). Gradient outputs are zeroed first.
double cf_batch_loss_and_grad(const CfModel& model, const BipartiteGraph& graph,
                              const BprBatch& batch, Matrix& g_user, Matrix& g_item);

CfModel train_cf(const SplitDataset& split, const TrainConfig& cfg, int layers, std::size_t dim,
                 TrainInfo* info = nullptr);

}  // namespace complat
