#pragma once

#include <cstdint>
#include <vector>

#include "complat/dataset.hpp"
#include "complat/matrix.hpp"

namespace complat {

// Symmetrically normalized user-item adjacency D^{-1/2} A D^{-1/2} built from
// train interactions only, stored as CSR over each side. Edge weight is
// 1/sqrt(deg_u * deg_i); no self-loops.
struct BipartiteGraph {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::size_t> user_ptr;
  std::vector<std::uint32_t> user_nbr;  // item ids
  std::vector<double> user_w;
  std::vector<std::size_t> item_ptr;
  std::vector<std::uint32_t> item_nbr;  // user ids
  std::vector<double> item_w;
};

BipartiteGraph build_graph(const SplitDataset& split);

// One application of the stacked operator: out = Â · [user_in; item_in].
void propagate_once(const BipartiteGraph& g, const Matrix& user_in, const Matrix& item_in,
                    Matrix& user_out, Matrix& item_out);

// Layer-averaged embedding propagation: mean of Â^l e over l = 0..layers.
// layers == 0 returns the inputs unchanged. Because Â is symmetric this is
// also its own adjoint, which the trainers use for backprop.
void propagate(const BipartiteGraph& g, const Matrix& user_emb, const Matrix& item_emb,
               int layers, Matrix& user_out, Matrix& item_out);

}  // namespace complat
