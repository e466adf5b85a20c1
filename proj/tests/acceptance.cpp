// Acceptance suite: runs every criterion end to end and prints one PASS/FAIL
// line per criterion. Exits nonzero if any criterion fails.
//
// Usage: acceptance [path-to-complat-cli]
// The CLI path is needed for the determinism criterion (A9), which re-runs
// every command twice and byte-compares the artifacts.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "complat/cf_model.hpp"
#include "complat/dataset.hpp"
#include "complat/fusion.hpp"
#include "complat/losses.hpp"
#include "complat/metrics.hpp"
#include "complat/probe.hpp"
#include "complat/sem_model.hpp"
#include "complat/synthetic.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using namespace complat;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("[%s] %s - %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix subset_rows(const Matrix& m, const std::vector<std::uint32_t>& ids) {
  Matrix out(ids.size(), m.cols);
  for (std::size_t r = 0; r < ids.size(); ++r) std::copy_n(m.row(ids[r]), m.cols, out.row(r));
  return out;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ------------------------------------------------------------------ A1 + A2

void run_a1_a2() {
  const auto t0 = Clock::now();
  Rng rng(20260810);
  bool a1 = true;
  bool a2 = true;
  std::string a1_detail, a2_detail;
  const std::size_t ks[3] = {5, 10, 20};

  for (int rep = 0; rep < 1000 && a1; ++rep) {
    const std::size_t n_users = 1 + rng.below(50);
    const std::size_t n_items = 10 + rng.below(191);
    const std::size_t k = ks[rep % 3];
    auto pair = testutil::random_paired_results(rng, n_users, n_items, k);

    const auto check = [&](const char* what, double got, double want) {
      if (std::isnan(got) && std::isnan(want)) return;
      if (!close(got, want, 1e-12)) {
        a1 = false;
        a1_detail = std::string(what) + " mismatch (" + std::to_string(got) + " vs " +
                    std::to_string(want) + ")";
      }
    };
    check("recall", recall_at_k(pair.a), oracle::recall(pair.a));
    check("ndcg", ndcg_at_k(pair.a), oracle::ndcg(pair.a));
    check("hit", hit_at_k(pair.a), oracle::hit_rate(pair.a));
    check("list_jaccard", list_jaccard(pair.a, pair.b), oracle::list_jaccard(pair.a, pair.b));
    check("hit_jaccard", hit_jaccard(pair.a, pair.b), oracle::hit_jaccard(pair.a, pair.b));
    check("comp_macro", comp_ratio(pair.a, pair.b, CompMode::Macro),
          oracle::comp_ratio_macro(pair.a, pair.b));
    check("comp_micro", comp_ratio(pair.a, pair.b, CompMode::Micro),
          oracle::comp_ratio_micro(pair.a, pair.b));
    check("uub", union_upper_bound(pair.a, pair.b), oracle::uub(pair.a, pair.b));

    PopularityTable table;
    table.train_count.assign(n_items, 0);
    table.stratum.resize(n_items);
    for (auto& s : table.stratum) s = static_cast<Stratum>(rng.below(3));
    const auto strat = stratified_recall(pair.a, table);
    const auto ostrat = oracle::stratified(pair.a, table);
    check("strata_head", strat.head.value, ostrat[0]);
    check("strata_mid", strat.mid.value, ostrat[1]);
    check("strata_cold", strat.cold.value, ostrat[2]);

    const auto comp = hit_composition(pair.a, pair.b);
    const auto ocomp = oracle::composition(pair.a, pair.b);
    check("composition_a", comp.a_unique, ocomp[0]);
    check("composition_b", comp.b_unique, ocomp[1]);
    check("composition_common", comp.common, ocomp[2]);

    // A2: algebraic identities on the same instances
    const double hj = hit_jaccard(pair.a, pair.b);
    const double cm = comp_ratio(pair.a, pair.b, CompMode::Macro);
    if (!std::isnan(hj) && !close(hj + cm, 1.0, 1e-12)) {
      a2 = false;
      a2_detail = "macro comp_ratio + hit_jaccard != 1";
    }
    for (std::size_t u = 0; u < pair.a.users.size() && a2; ++u) {
      const auto& truth = pair.a.truths[u];
      const auto ha = hit_set(pair.a.lists[u], truth);
      const auto hb = hit_set(pair.b.lists[u], truth);
      std::vector<std::uint32_t> uni = pair.a.lists[u];
      uni.insert(uni.end(), pair.b.lists[u].begin(), pair.b.lists[u].end());
      std::sort(uni.begin(), uni.end());
      uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
      std::size_t covered = 0;
      for (auto i : uni)
        if (std::binary_search(truth.begin(), truth.end(), i)) ++covered;
      const double denom = static_cast<double>(truth.size());
      const double uub_u = static_cast<double>(covered) / denom;
      if (uub_u < static_cast<double>(ha.size()) / denom ||
          uub_u < static_cast<double>(hb.size()) / denom) {
        a2 = false;
        a2_detail = "per-user UUB dominance violated";
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (a1 && elapsed >= 60.0) {
    a1 = false;
    a1_detail = "runtime over 60s";
  }
  if (a1) {
    std::ostringstream d;
    d << "1000 instances, nine metrics match brute-force oracles to 1e-12 (" << elapsed << "s)";
    a1_detail = d.str();
  }
  report("A1", a1, a1_detail);

  // fused-score identity on 10,000 random pairs
  Rng frng(99);
  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    std::vector<double> a(6), b(6), c(6), d(6);
    for (auto* v : {&a, &b, &c, &d})
      for (auto& x : *v) x = frng.normal();
    l2_normalize(a);
    l2_normalize(b);
    l2_normalize(c);
    l2_normalize(d);
    const double lhs = dot(fuse(a, b), fuse(c, d));
    const double rhs = 0.5 * (dot(a, c) + dot(b, d));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  if (worst > 1e-10) {
    a2 = false;
    a2_detail = "fused-score identity off by " + std::to_string(worst);
  }
  if (a2) {
    std::ostringstream d;
    d << "comp+jaccard identity, per-user UUB dominance, fused score = half-sum of branch "
         "cosines on 10k pairs (worst dev " << worst << ")";
    a2_detail = d.str();
  }
  report("A2", a2, a2_detail);
}

// ---------------------------------------------------------------------- A3

void run_a3() {
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  const auto note = [&](const char* what, double err, double tol) {
    worst = std::max(worst, err);
    if (err >= tol) {
      pass = false;
      detail = std::string(what) + " gradient error " + std::to_string(err);
    }
  };

  Rng rng(31337);
  // BPR
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s{3.0 * rng.normal(), 3.0 * rng.normal()};
    const auto grad = bpr_grad(s[0], s[1]);
    const auto fd = oracle::finite_diff(s, [&] { return bpr_loss(s[0], s[1]); });
    note("bpr", oracle::max_rel_err({grad.pos, grad.neg}, fd), 1e-4);
  }

  // InfoNCE at tau = 0.15 through cosine
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> anchor(5), positive(5);
    std::vector<std::vector<double>> negatives(4, std::vector<double>(5));
    for (auto& x : anchor) x = rng.normal();
    for (auto& x : positive) x = rng.normal();
    for (auto& v : negatives)
      for (auto& x : v) x = rng.normal();
    const auto res = infonce_loss(anchor, positive, negatives, 0.15);
    const auto loss_fn = [&] { return infonce_loss(anchor, positive, negatives, 0.15).loss; };
    note("infonce/anchor", oracle::max_rel_err(res.d_anchor, oracle::finite_diff(anchor, loss_fn)),
         1e-4);
    note("infonce/positive",
         oracle::max_rel_err(res.d_positive, oracle::finite_diff(positive, loss_fn)), 1e-4);
  }

  // semantic projection (norm + InfoNCE over W, b)
  {
    testutil::Rng drng(14);
    const auto ds = testutil::random_dataset(drng, 6, 8, 5, 8);
    const auto split = split_per_user(ds, {0.6, 0.2, 0.2}, 11);
    Matrix vecs(8, 5);
    for (double& x : vecs.data) x = drng.normal();
    const Matrix pooled = pooled_user_inputs(split, vecs);
    for (int rep = 0; rep < 20; ++rep) {
      SemModel model;
      model.w = Matrix(3, 5);
      Rng init(500 + rep);
      for (double& x : model.w.data) x = init.normal(0.0, 0.5);
      model.b.assign(3, 0.0);
      SemBatch batch;
      for (int b = 0; b < 3; ++b) {
        batch.users.push_back(static_cast<std::uint32_t>(rng.below(6)));
        batch.pos_items.push_back(static_cast<std::uint32_t>(rng.below(8)));
        std::vector<std::uint32_t> negs(4);
        for (auto& n : negs) n = static_cast<std::uint32_t>(rng.below(8));
        batch.negatives.push_back(negs);
      }
      Matrix gw;
      std::vector<double> gb;
      sem_batch_loss_and_grad(model, vecs, pooled, batch, 0.15, gw, gb);
      const auto loss_fn = [&] {
        Matrix tw;
        std::vector<double> tb;
        return sem_batch_loss_and_grad(model, vecs, pooled, batch, 0.15, tw, tb);
      };
      note("sem/W", oracle::max_rel_err(gw.data, oracle::finite_diff(model.w.data, loss_fn)),
           1e-4);
      note("sem/b", oracle::max_rel_err(gb, oracle::finite_diff(model.b, loss_fn)), 1e-4);
    }
  }

  // full fusion forward with frozen mined negatives
  {
    testutil::Rng drng(31);
    const auto ds = testutil::random_dataset(drng, 6, 8, 5, 8);
    const auto split = split_per_user(ds, {0.6, 0.2, 0.2}, 11);
    const auto graph = build_graph(split);
    Matrix vecs(8, 5);
    for (double& x : vecs.data) x = drng.normal();
    const Matrix pooled = pooled_user_inputs(split, vecs);
    for (int rep = 0; rep < 20; ++rep) {
      FusionModel model;
      model.layers = 2;
      Rng init(900 + rep);
      model.cf_user = Matrix(6, 3);
      model.cf_item = Matrix(8, 3);
      for (double& x : model.cf_user.data) x = init.normal(0.0, 0.3);
      for (double& x : model.cf_item.data) x = init.normal(0.0, 0.3);
      model.sem.w = Matrix(3, 5);
      for (double& x : model.sem.w.data) x = init.normal(0.0, 0.5);
      model.sem.b.assign(3, 0.0);

      FusionBatch batch;
      for (int b = 0; b < 3; ++b) {
        const std::uint32_t u = static_cast<std::uint32_t>(rng.below(6));
        const auto& tp = split.train_by_user[u];
        batch.users.push_back(u);
        batch.pos_items.push_back(tp[rng.below(tp.size())]);
        std::vector<std::uint32_t> mined{static_cast<std::uint32_t>(rng.below(8)),
                                         static_cast<std::uint32_t>(rng.below(8))};
        std::sort(mined.begin(), mined.end());
        mined.erase(std::unique(mined.begin(), mined.end()), mined.end());
        batch.mined.push_back(mined);
      }
      Matrix gcu, gci, gw;
      std::vector<double> gb;
      fusion_batch_loss_and_grad(model, graph, split, vecs, pooled, batch, 0.15, gcu, gci, gw,
                                 gb);
      const auto loss_fn = [&] {
        Matrix a, b, c;
        std::vector<double> d;
        return fusion_batch_loss_and_grad(model, graph, split, vecs, pooled, batch, 0.15, a, b,
                                          c, d);
      };
      note("fusion/cf_user",
           oracle::max_rel_err(gcu.data, oracle::finite_diff(model.cf_user.data, loss_fn)), 1e-4);
      note("fusion/cf_item",
           oracle::max_rel_err(gci.data, oracle::finite_diff(model.cf_item.data, loss_fn)), 1e-4);
      note("fusion/W",
           oracle::max_rel_err(gw.data, oracle::finite_diff(model.sem.w.data, loss_fn)), 1e-4);
      note("fusion/b", oracle::max_rel_err(gb, oracle::finite_diff(model.sem.b, loss_fn)), 1e-4);
    }
  }

  if (pass) {
    std::ostringstream d;
    d << "BPR, InfoNCE, semantic projection, full fusion forward vs central differences on 20+ "
         "instances each; worst relative error " << worst;
    detail = d.str();
  }
  report("A3", pass, detail);
}

// ---------------------------------------------------------------------- A4

void run_a4() {
  bool pass = true;
  std::string detail;
  double worst = 0.0;
  for (int rep = 0; rep < 20 && pass; ++rep) {
    testutil::Rng rng(1000 + rep);
    const std::size_t n_users = 5 + rng.below(20);  // users + items <= 50 nodes
    const std::size_t n_items = 5 + rng.below(21);
    const auto ds = testutil::random_dataset(rng, n_users, n_items, 1, 5);
    const auto split = split_per_user(ds, {0.7, 0.15, 0.15}, 1000 + rep);
    const auto graph = build_graph(split);
    Matrix ue(n_users, 4), ie(n_items, 4);
    for (double& x : ue.data) x = rng.normal();
    for (double& x : ie.data) x = rng.normal();

    Matrix u0, i0;
    propagate(graph, ue, ie, 0, u0, i0);
    if (u0.data != ue.data || i0.data != ie.data) {
      pass = false;
      detail = "L=0 propagation is not the identity";
      break;
    }

    Matrix u2, i2, ou, oi;
    propagate(graph, ue, ie, 2, u2, i2);
    oracle::dense_propagation(split, ue, ie, 2, ou, oi);
    for (std::size_t k = 0; k < u2.data.size(); ++k)
      worst = std::max(worst, std::abs(u2.data[k] - ou.data[k]));
    for (std::size_t k = 0; k < i2.data.size(); ++k)
      worst = std::max(worst, std::abs(i2.data[k] - oi.data[k]));
    if (worst > 1e-10) {
      pass = false;
      detail = "sparse vs dense propagation deviate by " + std::to_string(worst);
    }
  }
  if (pass) {
    std::ostringstream d;
    d << "20 random graphs: L=2 matches the dense operator (worst dev " << worst
      << "), L=0 is the identity";
    detail = d.str();
  }
  report("A4", pass, detail);
}

// ----------------------------------------------------------------- A5 + A6

struct ProbeCell {
  Matrix cf_items;  // propagated item representations (targets)
  Matrix inputs;    // trained semantic projections (probe inputs)
  std::vector<std::uint32_t> fit_ids, held_ids;
};

// Desk-scale configuration for the probe experiments, frozen after
// calibration against the brute-force synthetic pipeline.
ProbeCell train_probe_cell(double alpha, std::uint64_t seed) {
  LatentWorldConfig wc;
  wc.n_users = 500;
  wc.n_items = 400;
  wc.alpha = alpha;
  wc.seed = seed;
  wc.noise_sigma = 0.0;
  wc.interactions_per_user = 80;
  const auto world = generate_world(wc);
  const auto split = split_per_user(world.dataset, {0.8, 0.1, 0.1}, seed);
  const auto graph = build_graph(split);

  TrainConfig cf_cfg;
  cf_cfg.lr = 0.015;
  cf_cfg.batch_size = 2048;
  cf_cfg.max_epochs = 300;
  cf_cfg.eval_every = 5;
  cf_cfg.patience = 5;
  cf_cfg.seed = seed;
  const CfModel cf = train_cf(split, cf_cfg, 2, 64);

  TrainConfig sem_cfg = cf_cfg;
  sem_cfg.lr = 0.01;
  sem_cfg.n_neg = 64;
  sem_cfg.max_epochs = 200;
  const SemModel sem = train_sem(split, world.sem_vectors, sem_cfg, 64, true);

  ProbeCell cell;
  Matrix cf_users;
  cf_final(cf, graph, cf_users, cell.cf_items);
  cell.inputs = sem_project_all(sem, world.sem_vectors, false);
  auto [fit_ids, held_ids] = split_items(split.base.n_items, 0.8, seed);
  cell.fit_ids = std::move(fit_ids);
  cell.held_ids = std::move(held_ids);
  return cell;
}

double held_out_r2(const ProbeCell& cell, ProbeArch arch, std::uint64_t seed, double* train_r2) {
  ProbeFitConfig pc;
  pc.seed = seed;
  const auto map = fit_probe(cell.inputs, cell.cf_items, cell.fit_ids, arch, pc);
  if (train_r2)
    *train_r2 = r_squared(subset_rows(map.apply(cell.inputs), cell.fit_ids),
                          subset_rows(cell.cf_items, cell.fit_ids));
  return r_squared(subset_rows(map.apply(cell.inputs), cell.held_ids),
                   subset_rows(cell.cf_items, cell.held_ids));
}

void run_a5_a6() {
  const auto t0 = Clock::now();
  bool a5 = true;
  std::string a5_detail;
  std::ostringstream values;
  ProbeCell a6_cell;  // alpha=0.2 world of seed 1, reused by A6

  for (std::uint64_t seed : {1, 2, 3}) {
    double prev = -std::numeric_limits<double>::infinity();
    values << " s" << seed << ":";
    for (double alpha : {0.2, 0.6, 1.0}) {
      ProbeCell cell = train_probe_cell(alpha, seed);
      const double r2 = held_out_r2(cell, ProbeArch::Linear, seed, nullptr);
      values << " " << alpha << "->" << std::round(r2 * 1000) / 1000;
      if (r2 <= prev) {
        a5 = false;
        a5_detail = "held-out R2 not strictly increasing (seed " + std::to_string(seed) + ")";
      }
      if (alpha == 1.0 && r2 <= 0.9) {
        a5 = false;
        a5_detail = "alpha=1 held-out linear R2 " + std::to_string(r2) + " <= 0.9";
      }
      prev = r2;
      if (seed == 1 && alpha == 0.2) a6_cell = std::move(cell);
    }
  }
  const double elapsed = seconds_since(t0);
  if (a5 && elapsed >= 600.0) {
    a5 = false;
    a5_detail = "runtime over 10 minutes";
  }
  if (a5)
    a5_detail = "held-out linear R2 strictly increasing in alpha;" + values.str() + " (" +
                std::to_string(static_cast<int>(elapsed)) + "s)";
  report("A5", a5, a5_detail);

  // A6 on the alpha=0.2 world of seed 1
  double lin_train = 0.0, mlp_train = 0.0;
  const double lin_test = held_out_r2(a6_cell, ProbeArch::Linear, 1, &lin_train);
  const double mlp_test = held_out_r2(a6_cell, ProbeArch::Mlp2, 1, &mlp_train);
  const bool train_gap = mlp_train >= lin_train + 0.1;
  const bool test_gap = mlp_test <= lin_test + 0.05;
  std::ostringstream d6;
  d6 << "alpha=0.2: linear train/test " << lin_train << "/" << lin_test << ", mlp2 train/test "
     << mlp_train << "/" << mlp_test;
  report("A6", train_gap && test_gap, d6.str());
}

// ----------------------------------------------------------------- A7 + A8

struct FusionCell {
  double recall_cf = 0.0, recall_sem = 0.0, recall_fused = 0.0, uub = 0.0;
  double hit_jac20 = 0.0, comp20 = 0.0, comp5 = 0.0;
};

// Desk-scale configuration for the fusion experiments, frozen after
// calibration. Sparser worlds than the probe cells keep the two single views
// comparable, mirroring the fair-baseline setup.
FusionCell train_fusion_cell(std::uint64_t seed) {
  LatentWorldConfig wc;
  wc.n_users = 500;
  wc.n_items = 400;
  wc.alpha = 0.5;
  wc.seed = seed;
  wc.noise_sigma = 0.1;
  wc.interactions_per_user = 20;
  const auto world = generate_world(wc);
  const auto split = split_per_user(world.dataset, {0.8, 0.1, 0.1}, seed);
  const auto graph = build_graph(split);

  TrainConfig cf_cfg;
  cf_cfg.lr = 0.01;
  cf_cfg.batch_size = 1024;
  cf_cfg.max_epochs = 500;
  cf_cfg.eval_every = 5;
  cf_cfg.patience = 10;
  cf_cfg.seed = seed;
  const CfModel cf = train_cf(split, cf_cfg, 2, 64);

  TrainConfig sem_cfg = cf_cfg;
  sem_cfg.n_neg = 256;
  sem_cfg.max_epochs = 300;
  sem_cfg.patience = 8;
  const SemModel sem = train_sem(split, world.sem_vectors, sem_cfg, 64, true);

  TrainConfig fus_cfg = cf_cfg;
  fus_cfg.max_epochs = 200;
  fus_cfg.patience = 5;
  fus_cfg.hard_pool = 512;
  fus_cfg.hard_m = 16;
  const FusionModel fm = train_fusion(split, world.sem_vectors, fus_cfg, 64, 2);

  Matrix cf_u, cf_i;
  cf_final(cf, graph, cf_u, cf_i);
  const Matrix sem_items = sem_project_all(sem, world.sem_vectors, true);
  const Matrix pooled = pooled_user_inputs(split, world.sem_vectors);
  const Matrix sem_users = sem_project_all(sem, pooled, true);
  const auto emb = fusion_embeddings(fm, graph, world.sem_vectors, pooled);

  const auto scorer = [](const Matrix& u_mat, const Matrix& i_mat) {
    return [&u_mat, &i_mat](std::uint32_t u, std::span<double> out) {
      const std::size_t d = u_mat.cols;
      const double* eu = u_mat.row(u);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot({eu, d}, {i_mat.row(i), d});
    };
  };

  FusionCell cell;
  const auto v_cf = evaluate_ranking(split, Split::Val, 20, scorer(cf_u, cf_i));
  const auto v_sem = evaluate_ranking(split, Split::Val, 20, scorer(sem_users, sem_items));
  const auto v_fus = evaluate_ranking(split, Split::Val, 20, scorer(emb.user, emb.item));
  cell.recall_cf = recall_at_k(v_cf);
  cell.recall_sem = recall_at_k(v_sem);
  cell.recall_fused = recall_at_k(v_fus);
  cell.uub = union_upper_bound(v_cf, v_sem);

  const auto t_cf20 = evaluate_ranking(split, Split::Test, 20, scorer(cf_u, cf_i));
  const auto t_sem20 = evaluate_ranking(split, Split::Test, 20, scorer(sem_users, sem_items));
  const auto t_cf5 = evaluate_ranking(split, Split::Test, 5, scorer(cf_u, cf_i));
  const auto t_sem5 = evaluate_ranking(split, Split::Test, 5, scorer(sem_users, sem_items));
  cell.hit_jac20 = hit_jaccard(t_cf20, t_sem20);
  cell.comp20 = comp_ratio(t_cf20, t_sem20, CompMode::Macro);
  cell.comp5 = comp_ratio(t_cf5, t_sem5, CompMode::Macro);
  return cell;
}

void run_a7_a8() {
  bool a7 = true, a8 = true;
  std::ostringstream d7, d8;
  const double random_baseline = 20.0 / 400.0;  // K / catalog
  for (std::uint64_t seed : {1, 2, 3}) {
    const FusionCell cell = train_fusion_cell(seed);
    const double best = std::max(cell.recall_cf, cell.recall_sem);
    const double gain = cell.recall_fused / best - 1.0;
    d7 << " s" << seed << ": fused " << cell.recall_fused << " vs best " << best << " (+"
       << std::round(gain * 1000) / 10 << "%), uub " << cell.uub << ";";
    if (cell.recall_fused < best * 1.05) a7 = false;
    if (cell.recall_fused > cell.uub) a7 = false;
    // trained views must clear a random ranking by a wide margin
    if (cell.recall_cf <= random_baseline || cell.recall_sem <= random_baseline) a7 = false;

    d8 << " s" << seed << ": hitJ " << std::round(cell.hit_jac20 * 1000) / 1000 << " comp@20 "
       << std::round(cell.comp20 * 1000) / 1000 << " comp@5 "
       << std::round(cell.comp5 * 1000) / 1000 << ";";
    if (!(cell.hit_jac20 < 0.5) || !(cell.comp20 > 0.5) || !(cell.comp5 >= cell.comp20))
      a8 = false;
  }
  report("A7", a7,
         "fused val Recall@20 beats best single view by >=5% and stays under UUB:" + d7.str());
  report("A8", a8, "hit_jaccard@20 < 0.5, comp_ratio@20 > 0.5, comp@5 >= comp@20:" + d8.str());
}

// ---------------------------------------------------------------------- A9

bool run_cli(const std::string& cli, const std::string& cwd, const std::string& args) {
  const std::string cmd = "cd " + cwd + " && " + cli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) {
    why = "file sets differ";
    return false;
  }
  for (const auto& r : rel_a) {
    std::ifstream fa(a / r, std::ios::binary), fb(b / r, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    if (ca != cb) {
      why = "byte mismatch in " + r.string();
      return false;
    }
  }
  return true;
}

void run_a9(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "complat_accept_a9";
  fs::remove_all(root);
  fs::create_directories(root);

  // small deterministic interaction file for the ingest path
  {
    std::ofstream tsv(root / "raw.tsv");
    Rng rng(5150);
    for (int u = 0; u < 40; ++u)
      for (int n = 0; n < 8; ++n)
        tsv << "user" << u << "\titem" << rng.below(25) << "\t" << 1000 + n << "\n";
  }

  bool pass = true;
  std::string detail;
  for (const char* run : {"r1", "r2"}) {
    // identical relative-path configs from two working directories, so every
    // artifact (including the resolved configs) must come out byte-identical;
    // the ingest bundle lives outside the report scope because report
    // refuses to mix dataset hashes
    const std::string cwd = (root / run).string();
    fs::create_directories(fs::path(cwd) / "run");
    fs::create_directories(fs::path(cwd) / "aux");
    fs::copy_file(root / "raw.tsv", fs::path(cwd) / "raw.tsv");
    const std::string common = " --seed 7";
    bool ok =
        run_cli(cli, cwd, "ingest --interactions raw.tsv --kcore 2" + common +
                              " --out aux/ingested") &&
        run_cli(cli, cwd, "synth --users 60 --items 50 --per-user 10 --alpha 0.5" + common +
                              " --out run/world") &&
        run_cli(cli, cwd, "train-cf --data run/world --out run/cf --dim 16 --batch 128 "
                              "--lr 0.02 --max-epochs 20 --eval-every 5" + common) &&
        run_cli(cli, cwd, "train-sem --data run/world --out run/sem --dim 16 --batch 128 "
                              "--lr 0.02 --max-epochs 20 --eval-every 5 --n-neg 16" + common) &&
        run_cli(cli, cwd, "train-fusion --data run/world --out run/fusion --dim 16 --batch 128 "
                              "--lr 0.02 --max-epochs 15 --eval-every 5 --hard-pool 30 "
                              "--hard-m 5" + common) &&
        run_cli(cli, cwd, "probe --data run/world --cf run/cf --sem run/sem --arch linear,mlp0 "
                              "--fit-epochs 300 --geo-k 5 --rank-sample 20 --k 10" + common +
                              " --out run/probe") &&
        run_cli(cli, cwd, "diagnose --data run/world --a run/cf --b run/sem --fused run/fusion "
                              "--k 5,10 --out run/diag") &&
        run_cli(cli, cwd, "report --run run --out run/report");
    if (!ok) {
      pass = false;
      detail = std::string("a command failed during run ") + run;
      break;
    }
  }
  if (pass) pass = dirs_identical(root / "r1", root / "r2", detail);
  if (pass)
    detail = "ingest/synth/train-cf/train-sem/train-fusion/probe/diagnose/report re-run with "
             "identical configs produced byte-identical artifacts";
  report("A9", pass, detail);
}

// --------------------------------------------------------------------- A10

void run_a10() {
  const double sparsity = sparsity_from_counts(27292, 24608, 331049);
  const bool pass = std::abs(sparsity - 0.9995) <= 0.0001;
  std::ostringstream d;
  d << "Movies-scale sparsity " << sparsity * 100
    << "% within 99.95% +/- 0.01pp; full-data recipe documented in README (not CI-gated)";
  report("A10", pass, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = argc > 1 ? argv[1] : "complat";
  if (cli.find('/') != std::string::npos) cli = fs::absolute(cli).string();
  const auto t0 = Clock::now();

  run_a1_a2();
  run_a3();
  run_a4();
  run_a5_a6();
  run_a7_a8();
  run_a9(cli);
  run_a10();

  std::printf("acceptance: %s (%d failed, %.0fs)\n", g_failures == 0 ? "PASS" : "FAIL",
              g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
