#include "complat/graph.hpp"

#include <cmath>

#include "complat/errors.hpp"

namespace complat {

BipartiteGraph build_graph(const SplitDataset& split) {
  BipartiteGraph g;
  g.n_users = split.base.n_users;
  g.n_items = split.base.n_items;

  std::vector<std::size_t> user_deg(g.n_users, 0);
  std::vector<std::size_t> item_deg(g.n_items, 0);
  for (std::size_t u = 0; u < g.n_users; ++u) user_deg[u] = split.train_by_user[u].size();
  for (std::size_t i = 0; i < g.n_items; ++i) item_deg[i] = split.train_count_by_item[i];

  g.user_ptr.assign(g.n_users + 1, 0);
  for (std::size_t u = 0; u < g.n_users; ++u) g.user_ptr[u + 1] = g.user_ptr[u] + user_deg[u];
  g.user_nbr.resize(g.user_ptr.back());
  g.user_w.resize(g.user_ptr.back());

  g.item_ptr.assign(g.n_items + 1, 0);
  for (std::size_t i = 0; i < g.n_items; ++i) g.item_ptr[i + 1] = g.item_ptr[i] + item_deg[i];
  g.item_nbr.resize(g.item_ptr.back());
  g.item_w.resize(g.item_ptr.back());

  std::vector<std::size_t> user_fill(g.n_users, 0);
  std::vector<std::size_t> item_fill(g.n_items, 0);
  for (std::size_t u = 0; u < g.n_users; ++u) {
    for (std::uint32_t i : split.train_by_user[u]) {
      const double w = 1.0 / std::sqrt(static_cast<double>(user_deg[u]) *
                                       static_cast<double>(item_deg[i]));
      const std::size_t up = g.user_ptr[u] + user_fill[u]++;
      g.user_nbr[up] = i;
      g.user_w[up] = w;
      const std::size_t ip = g.item_ptr[i] + item_fill[i]++;
      g.item_nbr[ip] = static_cast<std::uint32_t>(u);
      g.item_w[ip] = w;
    }
  }
  return g;
}

void propagate_once(const BipartiteGraph& g, const Matrix& user_in, const Matrix& item_in,
                    Matrix& user_out, Matrix& item_out) {
  if (user_in.rows != g.n_users || item_in.rows != g.n_items || user_in.cols != item_in.cols)
    throw DataError("propagate: embedding shapes do not match the graph");
  const std::size_t d = user_in.cols;
  user_out = Matrix(g.n_users, d);
  item_out = Matrix(g.n_items, d);
  for (std::size_t u = 0; u < g.n_users; ++u) {
    double* out = user_out.row(u);
    for (std::size_t p = g.user_ptr[u]; p < g.user_ptr[u + 1]; ++p) {
      const double w = g.user_w[p];
      const double* src = item_in.row(g.user_nbr[p]);
      for (std::size_t c = 0; c < d; ++c) out[c] += w * src[c];
    }
  }
  for (std::size_t i = 0; i < g.n_items; ++i) {
    double* out = item_out.row(i);
    for (std::size_t p = g.item_ptr[i]; p < g.item_ptr[i + 1]; ++p) {
      const double w = g.item_w[p];
      const double* src = user_in.row(g.item_nbr[p]);
      for (std::size_t c = 0; c < d; ++c) out[c] += w * src[c];
    }
  }
}

void propagate(const BipartiteGraph& g, const Matrix& user_emb, const Matrix& item_emb,
               int layers, Matrix& user_out, Matrix& item_out) {
  if (layers < 0) throw ConfigError("propagation layer count must be >= 0");
  user_out = user_emb;
  item_out = item_emb;
  if (layers == 0) return;

  Matrix cur_u = user_emb;
  Matrix cur_i = item_emb;
  Matrix next_u, next_i;
  for (int l = 0; l < layers; ++l) {
    propagate_once(g, cur_u, cur_i, next_u, next_i);
    for (std::size_t k = 0; k < user_out.data.size(); ++k) user_out.data[k] += next_u.data[k];
    for (std::size_t k = 0; k < item_out.data.size(); ++k) item_out.data[k] += next_i.data[k];
    cur_u.data.swap(next_u.data);
    cur_i.data.swap(next_i.data);
  }
  const double inv = 1.0 / static_cast<double>(layers + 1);
  for (double& x : user_out.data) x *= inv;
  for (double& x : item_out.data) x *= inv;
}

}  // namespace complat
