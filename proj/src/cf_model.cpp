#include "complat/cf_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "complat/losses.hpp"
#include "complat/metrics.hpp"
#include "complat/optim.hpp"

namespace complat {

CfModel init_cf_model(std::size_t n_users, std::size_t n_items, std::size_t dim, int layers,
                      Rng rng) {
  CfModel m;
  m.layers = layers;
  m.user_emb = Matrix(n_users, dim);
  m.item_emb = Matrix(n_items, dim);
  const double scale = 0.1 / std::sqrt(static_cast<double>(dim));
  for (double& x : m.user_emb.data) x = rng.normal(0.0, scale);
  for (double& x : m.item_emb.data) x = rng.normal(0.0, scale);
  return m;
}

void cf_final(const CfModel& model, const BipartiteGraph& graph, Matrix& user_out,
              Matrix& item_out) {
  propagate(graph, model.user_emb, model.item_emb, model.layers, user_out, item_out);
}

double cf_batch_loss_and_grad(const CfModel& model, const BipartiteGraph& graph,
                              const BprBatch& batch, Matrix& g_user, Matrix& g_item) {
  Matrix fu, fi;
  cf_final(model, graph, fu, fi);
  const std::size_t d = fu.cols;
  const double inv_b = 1.0 / static_cast<double>(batch.users.size());

  Matrix gfu(fu.rows, d), gfi(fi.rows, d);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.users.size(); ++b) {
    const std::uint32_t u = batch.users[b];
    const std::uint32_t ip = batch.pos_items[b];
    const std::uint32_t in = batch.neg_items[b];
    const double* eu = fu.row(u);
    const double* ep = fi.row(ip);
    const double* en = fi.row(in);
    const double sp = dot({eu, d}, {ep, d});
    const double sn = dot({eu, d}, {en, d});
    loss += bpr_loss(sp, sn);
    const BprGrad g = bpr_grad(sp, sn);
    double* gu = gfu.row(u);
    double* gp = gfi.row(ip);
    double* gn = gfi.row(in);
    for (std::size_t c = 0; c < d; ++c) {
      gu[c] += inv_b * (g.pos * ep[c] + g.neg * en[c]);
      gp[c] += inv_b * g.pos * eu[c];
      gn[c] += inv_b * g.neg * eu[c];
    }
  }

  // The layer-averaged operator is symmetric, so the adjoint of the forward
  // propagation is the propagation itself.
  propagate(graph, gfu, gfi, model.layers, g_user, g_item);
  return loss * inv_b;
}

namespace {

double val_recall(const CfModel& model, const BipartiteGraph& graph, const SplitDataset& split,
                  std::size_t k) {
  Matrix fu, fi;
  cf_final(model, graph, fu, fi);
  const std::size_t d = fu.cols;
  auto result = evaluate_ranking(split, Split::Val, k, [&](std::uint32_t u, std::span<double> out) {
    const double* eu = fu.row(u);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot({eu, d}, {fi.row(i), d});
  });
  return recall_at_k(result);
}

}  // namespace

CfModel train_cf(const SplitDataset& split, const TrainConfig& cfg, int layers, std::size_t dim,
                 TrainInfo* info) {
  cfg.validate();
  bool has_val = false;
  for (const auto& v : split.val_by_user)
    if (!v.empty()) {
      has_val = true;
      break;
    }
  if (!has_val) throw ConfigError("train_cf: no users with validation interactions");

  const BipartiteGraph graph = build_graph(split);
  const Rng root(cfg.seed);
  CfModel model = init_cf_model(split.base.n_users, split.base.n_items, dim, layers,
                                root.fork("init"));

  std::vector<std::uint32_t> train_idx;
  for (std::size_t idx = 0; idx < split.base.interactions.size(); ++idx)
    if (split.assignment[idx] == Split::Train) train_idx.push_back(static_cast<std::uint32_t>(idx));

  AdamParams opt{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState st_user, st_item;
  std::uint64_t t = 0;

  EarlyStopper stopper(cfg.patience);
  CfModel best = model;
  TrainInfo ti;

  Matrix g_user, g_item;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng order_rng = root.fork("order", epoch);
    order_rng.shuffle(train_idx);
    Rng neg_rng = root.fork("neg", epoch);

    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + cfg.batch_size);
      BprBatch batch;
      batch.users.reserve(end - start);
      for (std::size_t p = start; p < end; ++p) {
        const auto& e = split.base.interactions[train_idx[p]];
        batch.users.push_back(e.user);
        batch.pos_items.push_back(e.item);
        const auto& positives = split.train_by_user[e.user];
        if (positives.size() >= split.base.n_items)
          throw DataError("train_cf: a user interacted with the entire catalog; no negative exists");
        std::uint32_t neg;
        do {
          neg = static_cast<std::uint32_t>(neg_rng.below(split.base.n_items));
        } while (std::binary_search(positives.begin(), positives.end(), neg));
        batch.neg_items.push_back(neg);
      }
      cf_batch_loss_and_grad(model, graph, batch, g_user, g_item);
      ++t;
      adam_step(model.user_emb.data, g_user.data, st_user, opt, t);
      adam_step(model.item_emb.data, g_item.data, st_item, opt, t);
    }
    ti.epochs_run = epoch;

    if (epoch % cfg.eval_every == 0) {
      const double recall = val_recall(model, graph, split, cfg.eval_k);
      ++ti.evaluations;
      const bool stop = stopper.update(recall);
      if (stopper.improved_last()) {
        best = model;
        ti.best_val = recall;
        ti.best_epoch = epoch;
      }
      if (stop) break;
    }
  }

  if (ti.evaluations == 0) {
    best = model;
    ti.best_epoch = ti.epochs_run;
  }
  if (info) *info = ti;
  return best;
}

}  // namespace complat
