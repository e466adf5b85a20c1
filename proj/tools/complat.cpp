// complat: workbench CLI for the complementarity experiments.
// Subcommands: ingest, synth, train-cf, train-sem, train-fusion, probe,
// diagnose, report. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numerical failure.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "complat/artifacts.hpp"
#include "complat/cf_model.hpp"
#include "complat/dataset.hpp"
#include "complat/embedding_io.hpp"
#include "complat/errors.hpp"
#include "complat/fusion.hpp"
#include "complat/graph.hpp"
#include "complat/metrics.hpp"
#include "complat/probe.hpp"
#include "complat/sem_model.hpp"
#include "complat/synthetic.hpp"
#include "complat/train_loop.hpp"

namespace fs = std::filesystem;
using namespace complat;

namespace {

// ---------------------------------------------------------------- utilities

using KV = std::map<std::string, std::string>;

std::string resolved_config_text(const std::string& command, const KV& kv) {
  std::string out = "[" + command + "]\n";
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t config_hash(const std::string& resolved) { return fnv1a64(resolved); }

void emit_resolved_config(const std::string& out_dir, const std::string& command, const KV& kv,
                          std::uint64_t* hash_out) {
  const std::string text = resolved_config_text(command, kv);
  fs::create_directories(out_dir);
  write_text_file(out_dir + "/config.resolved.txt", text);
  if (hash_out) *hash_out = config_hash(text);
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list, got '" + csv + "'");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(csv)) {
    if (v < 1 || v != std::floor(v)) throw ConfigError("expected positive integers: " + csv);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

SplitRatios parse_ratios(const std::string& csv) {
  const auto v = parse_double_list(csv);
  if (v.size() != 3) throw ConfigError("ratios need exactly three values: " + csv);
  return {v[0], v[1], v[2]};
}

std::string alpha_tag(double alpha) {
  std::ostringstream ss;
  ss << "alpha" << alpha;
  return ss.str();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void log_run(const std::string& command, std::uint64_t seed, std::uint64_t hash,
             const Timer& timer) {
  std::cerr << "[complat] " << command << " seed=" << seed << " config=" << hash_hex(hash)
            << " wall=" << fmt_double(timer.seconds()) << "s\n";
}

Matrix load_item_vectors(const std::string& data_dir, const std::string& override_path,
                         std::size_t n_items) {
  const std::string path = override_path.empty() ? data_dir + "/items_sem.embf" : override_path;
  if (!fs::exists(path))
    throw DataError("item vectors not found at " + path +
                    " (synthetic bundles include items_sem.embf; otherwise pass --embeddings)");
  Matrix m = load_embeddings(path);
  if (m.rows != n_items)
    throw DataError("item vector rows (" + std::to_string(m.rows) +
                    ") do not cover the catalog (" + std::to_string(n_items) + ")");
  return m;
}

void require_same_dataset(const Json& meta, const std::string& what, const std::string& hash) {
  if (!meta.contains("dataset_hash")) return;
  if (meta.at("dataset_hash").get<std::string>() != hash)
    throw DataError(what + " was produced from a different dataset (hash mismatch)");
}

// Shared trainer flag block.
struct TrainFlags {
  std::string data;
  std::string out;
  std::string embeddings;
  std::size_t dim = 64;
  int layers = 2;
  TrainConfig cfg;

  void add_common(CLI::App* cmd, bool with_embeddings) {
    cmd->add_option("--data", data, "dataset bundle directory")->required();
    cmd->add_option("--out", out, "checkpoint output directory")->required();
    if (with_embeddings)
      cmd->add_option("--embeddings", embeddings,
                      "item vector file (default: <data>/items_sem.embf)");
    cmd->add_option("--dim", dim, "embedding dimension");
    cmd->add_option("--lr", cfg.lr, "Adam learning rate");
    cmd->add_option("--batch", cfg.batch_size, "batch size");
    cmd->add_option("--weight-decay", cfg.weight_decay, "L2 weight decay");
    cmd->add_option("--eval-every", cfg.eval_every, "epochs between evaluations");
    cmd->add_option("--patience", cfg.patience, "evaluations without improvement before stopping");
    cmd->add_option("--max-epochs", cfg.max_epochs, "epoch cap");
    cmd->add_option("--seed", cfg.seed, "training seed");
    cmd->add_option("--eval-k", cfg.eval_k, "validation Recall@K cutoff");
  }

  KV common_kv() const {
    KV kv;
    kv["data"] = data;
    kv["out"] = out;
    kv["dim"] = std::to_string(dim);
    kv["lr"] = fmt_double(cfg.lr);
    kv["batch"] = std::to_string(cfg.batch_size);
    kv["weight_decay"] = fmt_double(cfg.weight_decay);
    kv["eval_every"] = std::to_string(cfg.eval_every);
    kv["patience"] = std::to_string(cfg.patience);
    kv["max_epochs"] = std::to_string(cfg.max_epochs);
    kv["seed"] = std::to_string(cfg.seed);
    kv["eval_k"] = std::to_string(cfg.eval_k);
    return kv;
  }
};

Json train_meta(const TrainFlags& f, const SplitDataset& split, const TrainInfo& info,
                std::uint64_t cfg_hash) {
  Json meta;
  meta["dataset_hash"] = hash_hex(dataset_hash(split));
  meta["config_hash"] = hash_hex(cfg_hash);
  meta["seed"] = f.cfg.seed;
  meta["best_val_recall"] = info.best_val;
  meta["best_epoch"] = info.best_epoch;
  meta["epochs_run"] = info.epochs_run;
  meta["evaluations"] = info.evaluations;
  meta["eval_k"] = f.cfg.eval_k;
  return meta;
}

// ---------------------------------------------------------------- scorers

struct ModelScorers {
  // Per named model: fills scores for one user over all items.
  std::map<std::string, UserScorer> scorers;
  std::vector<std::string> order;  // insertion order for stable reports

  void add(const std::string& name, UserScorer scorer) {
    scorers[name] = std::move(scorer);
    order.push_back(name);
  }
};

struct LoadedCheckpoint {
  std::string kind;
  Json meta;
  // Kept alive for the scorer closures.
  std::shared_ptr<Matrix> user_repr;
  std::shared_ptr<Matrix> item_repr;
};

LoadedCheckpoint make_scorer(const std::string& dir, const BipartiteGraph& graph,
                             const Matrix* item_vecs, const Matrix* pooled,
                             const std::string& ds_hash, ModelScorers& out,
                             const std::string& name, FusionView view = FusionView::Full) {
  LoadedCheckpoint lc;
  lc.kind = checkpoint_kind(dir);
  if (lc.kind == "cf") {
    CfModel m = load_cf_checkpoint(dir, &lc.meta);
    require_same_dataset(lc.meta, dir, ds_hash);
    auto fu = std::make_shared<Matrix>();
    auto fi = std::make_shared<Matrix>();
    cf_final(m, graph, *fu, *fi);
    lc.user_repr = fu;
    lc.item_repr = fi;
  } else if (lc.kind == "sem") {
    SemModel m = load_sem_checkpoint(dir, &lc.meta);
    require_same_dataset(lc.meta, dir, ds_hash);
    if (!item_vecs || !pooled) throw DataError("semantic checkpoint needs item vectors");
    lc.user_repr = std::make_shared<Matrix>(sem_project_all(m, *pooled, true));
    lc.item_repr = std::make_shared<Matrix>(sem_project_all(m, *item_vecs, true));
  } else if (lc.kind == "fusion") {
    FusionModel m = load_fusion_checkpoint(dir, &lc.meta);
    require_same_dataset(lc.meta, dir, ds_hash);
    if (!item_vecs || !pooled) throw DataError("fusion checkpoint needs item vectors");
    const auto emb = fusion_embeddings(m, graph, *item_vecs, *pooled, view);
    lc.user_repr = std::make_shared<Matrix>(emb.user);
    lc.item_repr = std::make_shared<Matrix>(emb.item);
  } else {
    throw DataError("unknown checkpoint kind in " + dir);
  }

  auto users = lc.user_repr;
  auto items = lc.item_repr;
  out.add(name, [users, items](std::uint32_t u, std::span<double> scores) {
    const std::size_t d = users->cols;
    const double* eu = users->row(u);
    for (std::size_t i = 0; i < scores.size(); ++i)
      scores[i] = dot({eu, d}, {items->row(i), d});
  });
  return lc;
}

// Union of two ranked lists as a pseudo-result for stratified UUB columns.
RankingResult union_result(const RankingResult& a, const RankingResult& b) {
  RankingResult u = a;
  u.k = 2 * a.k;
  for (std::size_t i = 0; i < a.users.size(); ++i) {
    std::vector<std::uint32_t> merged = a.lists[i];
    for (auto item : b.lists[i])
      if (std::find(merged.begin(), merged.end(), item) == merged.end()) merged.push_back(item);
    u.lists[i] = std::move(merged);
  }
  return u;
}

std::string nan_csv(double v) { return std::isnan(v) ? "nan" : fmt_double(v); }

// ---------------------------------------------------------------- commands

int cmd_ingest(const std::string& interactions, std::size_t kcore, const std::string& ratios_csv,
               std::uint64_t seed, const std::string& out) {
  Timer timer;
  const SplitRatios ratios = parse_ratios(ratios_csv);
  KV kv{{"interactions", interactions}, {"kcore", std::to_string(kcore)},
        {"ratios", ratios_csv}, {"seed", std::to_string(seed)}, {"out", out}};
  std::uint64_t hash = 0;
  emit_resolved_config(out, "ingest", kv, &hash);

  InteractionDataset ds = load_interactions(interactions);
  const std::size_t raw_interactions = ds.interactions.size();
  if (kcore >= 1) ds = kcore_filter(ds, kcore);
  const SplitDataset split = split_per_user(ds, ratios, seed);

  Json extra;
  extra["source"] = "ingest";
  extra["input_file"] = interactions;
  extra["kcore"] = kcore;
  extra["raw_interactions"] = raw_interactions;
  extra["config_hash"] = hash_hex(hash);
  save_dataset_bundle(split, out, extra);

  std::cout << "ingested " << split.base.n_users << " users, " << split.base.n_items
            << " items, " << split.base.interactions.size() << " interactions (sparsity "
            << fmt_double(100.0 * compute_sparsity(split.base)) << "%)\n";
  if (split.short_history_users > 0)
    std::cerr << "[complat] warning: " << split.short_history_users
              << " users had fewer than 3 interactions\n";
  log_run("ingest", seed, hash, timer);
  return 0;
}

int cmd_synth(const LatentWorldConfig& base, const std::string& alphas_csv,
              const std::string& ratios_csv, const std::string& out) {
  Timer timer;
  const auto alphas = parse_double_list(alphas_csv);
  const SplitRatios ratios = parse_ratios(ratios_csv);

  for (double alpha : alphas) {
    LatentWorldConfig cfg = base;
    cfg.alpha = alpha;
    const std::string dir = alphas.size() == 1 ? out : out + "/world_" + alpha_tag(alpha);

    KV kv{{"users", std::to_string(cfg.n_users)},
          {"items", std::to_string(cfg.n_items)},
          {"k_shared", std::to_string(cfg.k_shared)},
          {"k_cf", std::to_string(cfg.k_cf)},
          {"k_sem", std::to_string(cfg.k_sem)},
          {"alpha", fmt_double(alpha)},
          {"per_user", std::to_string(cfg.interactions_per_user)},
          {"noise", fmt_double(cfg.noise_sigma)},
          {"gumbel_scale", fmt_double(cfg.gumbel_scale)},
          {"d_sem", std::to_string(cfg.d_sem)},
          {"seed", std::to_string(cfg.seed)},
          {"ratios", ratios_csv},
          {"out", dir}};
    std::uint64_t hash = 0;
    emit_resolved_config(dir, "synth", kv, &hash);

    const LatentWorld world = generate_world(cfg);
    const SplitDataset split = split_per_user(world.dataset, ratios, cfg.seed);

    Json extra;
    extra["source"] = "synth";
    extra["config_hash"] = hash_hex(hash);
    save_dataset_bundle(split, dir, extra);
    save_embeddings(world.sem_vectors, dir + "/items_sem.embf");

    Json manifest;
    manifest["n_users"] = cfg.n_users;
    manifest["n_items"] = cfg.n_items;
    manifest["k_shared"] = cfg.k_shared;
    manifest["k_cf"] = cfg.k_cf;
    manifest["k_sem"] = cfg.k_sem;
    manifest["alpha"] = cfg.alpha;
    manifest["interactions_per_user"] = cfg.interactions_per_user;
    manifest["noise_sigma"] = cfg.noise_sigma;
    manifest["gumbel_scale"] = cfg.gumbel_scale;
    manifest["d_sem"] = cfg.d_sem;
    manifest["seed"] = cfg.seed;
    manifest["ratios"] = {{"train", ratios.train}, {"val", ratios.val}, {"test", ratios.test}};
    manifest["emitted_items"] = split.base.n_items;
    manifest["config_hash"] = hash_hex(hash);
    manifest["dataset_hash"] = hash_hex(dataset_hash(split));
    write_json_file(dir + "/manifest.json", manifest);

    std::cout << "world alpha=" << fmt_double(alpha) << " -> " << dir << " ("
              << split.base.n_items << " items after 1-core)\n";
    log_run("synth", cfg.seed, hash, timer);
  }
  return 0;
}

int cmd_train_cf(TrainFlags& f) {
  Timer timer;
  KV kv = f.common_kv();
  kv["layers"] = std::to_string(f.layers);
  std::uint64_t hash = 0;
  emit_resolved_config(f.out, "train-cf", kv, &hash);

  const SplitDataset split = load_dataset_bundle(f.data);
  TrainInfo info;
  const CfModel model = train_cf(split, f.cfg, f.layers, f.dim, &info);
  save_cf_checkpoint(f.out, model, train_meta(f, split, info, hash));
  std::cout << "cf checkpoint " << f.out << " best val Recall@" << f.cfg.eval_k << " = "
            << fmt_double(info.best_val) << " (epoch " << info.best_epoch << ")\n";
  log_run("train-cf", f.cfg.seed, hash, timer);
  return 0;
}

int cmd_train_sem(TrainFlags& f, bool no_bias) {
  Timer timer;
  KV kv = f.common_kv();
  kv["embeddings"] = f.embeddings;
  kv["tau"] = fmt_double(f.cfg.tau);
  kv["n_neg"] = std::to_string(f.cfg.n_neg);
  kv["bias"] = no_bias ? "false" : "true";
  std::uint64_t hash = 0;
  emit_resolved_config(f.out, "train-sem", kv, &hash);

  const SplitDataset split = load_dataset_bundle(f.data);
  const Matrix vecs = load_item_vectors(f.data, f.embeddings, split.base.n_items);
  TrainInfo info;
  const SemModel model = train_sem(split, vecs, f.cfg, f.dim, !no_bias, &info);
  save_sem_checkpoint(f.out, model, train_meta(f, split, info, hash));
  std::cout << "sem checkpoint " << f.out << " best val Recall@" << f.cfg.eval_k << " = "
            << fmt_double(info.best_val) << " (epoch " << info.best_epoch << ")\n";
  log_run("train-sem", f.cfg.seed, hash, timer);
  return 0;
}

int cmd_train_fusion(TrainFlags& f) {
  Timer timer;
  KV kv = f.common_kv();
  kv["embeddings"] = f.embeddings;
  kv["layers"] = std::to_string(f.layers);
  kv["tau"] = fmt_double(f.cfg.tau);
  kv["hard_pool"] = std::to_string(f.cfg.hard_pool);
  kv["hard_m"] = std::to_string(f.cfg.hard_m);
  std::uint64_t hash = 0;
  emit_resolved_config(f.out, "train-fusion", kv, &hash);

  const SplitDataset split = load_dataset_bundle(f.data);
  const Matrix vecs = load_item_vectors(f.data, f.embeddings, split.base.n_items);
  TrainInfo info;
  const FusionModel model = train_fusion(split, vecs, f.cfg, f.dim, f.layers, &info);
  save_fusion_checkpoint(f.out, model, train_meta(f, split, info, hash));
  std::cout << "fusion checkpoint " << f.out << " best val Recall@" << f.cfg.eval_k << " = "
            << fmt_double(info.best_val) << " (epoch " << info.best_epoch << ")\n";
  log_run("train-fusion", f.cfg.seed, hash, timer);
  return 0;
}

struct ProbeFlags {
  std::string data, cf_dir, sem_dir, out, embeddings;
  std::string archs = "identity,linear,mlp1,mlp2";
  double item_split = 0.8;
  std::uint64_t seed = 1;
  std::size_t geo_k = 10;
  std::size_t rank_sample = 500;
  std::size_t k = 20;
  std::string scope = "partition";
  std::string input = "proj";
  bool alignment = false;
  double align_tau = 0.15;
  ProbeFitConfig fit;
};

int cmd_probe(ProbeFlags& f) {
  Timer timer;
  KV kv{{"data", f.data},       {"cf", f.cf_dir},
        {"sem", f.sem_dir},     {"arch", f.archs},
        {"item_split", fmt_double(f.item_split)}, {"seed", std::to_string(f.seed)},
        {"geo_k", std::to_string(f.geo_k)},       {"rank_sample", std::to_string(f.rank_sample)},
        {"k", std::to_string(f.k)},               {"recall_scope", f.scope},
        {"probe_input", f.input},                 {"alignment", f.alignment ? "true" : "false"},
        {"align_tau", fmt_double(f.align_tau)},   {"out", f.out},
        {"fit_lr", fmt_double(f.fit.lr)},         {"fit_epochs", std::to_string(f.fit.max_epochs)}};
  std::uint64_t hash = 0;
  emit_resolved_config(f.out, "probe", kv, &hash);

  const SplitDataset split = load_dataset_bundle(f.data);
  const std::string ds_hash = hash_hex(dataset_hash(split));
  const BipartiteGraph graph = build_graph(split);

  Json cf_meta;
  const CfModel cf = load_cf_checkpoint(f.cf_dir, &cf_meta);
  require_same_dataset(cf_meta, f.cf_dir, ds_hash);
  Matrix cf_users, cf_items;
  cf_final(cf, graph, cf_users, cf_items);

  const Matrix vecs = load_item_vectors(f.data, f.embeddings, split.base.n_items);
  Matrix inputs;
  if (f.input == "raw") {
    inputs = vecs;
  } else if (f.input == "proj") {
    Json sem_meta;
    const SemModel sem = load_sem_checkpoint(f.sem_dir, &sem_meta);
    require_same_dataset(sem_meta, f.sem_dir, ds_hash);
    inputs = sem_project_all(sem, vecs, false);
  } else {
    throw ConfigError("--probe-input must be proj or raw");
  }

  const RecallScope scope = f.scope == "full" ? RecallScope::FullCatalog
                                              : RecallScope::PartitionOnly;
  if (f.scope != "full" && f.scope != "partition")
    throw ConfigError("--recall-scope must be partition or full");

  const auto [fit_ids, held_ids] = split_items(split.base.n_items, f.item_split, f.seed);

  ProbeReport report;
  report.geo_k = f.geo_k;
  report.rank_sample = f.rank_sample;
  report.k = f.k;
  report.scope = scope;
  report.item_fraction = f.item_split;
  report.seed = f.seed;

  const auto subset = [&](const Matrix& m, const std::vector<std::uint32_t>& ids) {
    Matrix out(ids.size(), m.cols);
    for (std::size_t r = 0; r < ids.size(); ++r) std::copy_n(m.row(ids[r]), m.cols, out.row(r));
    return out;
  };

  const auto metrics_for = [&](const Matrix& projected, const std::vector<std::uint32_t>& ids,
                               const Matrix& user_side, const Matrix& item_side) {
    ProbeMetrics pm;
    const Matrix target = subset(item_side, ids);
    pm.r2 = r_squared(projected, target);
    pm.cos = mean_cosine(projected, target);
    pm.geo_jac = geo_jaccard(projected, target, std::min(f.geo_k, ids.size() - 1));
    pm.rank_cor = rank_correlation(projected, target,
                                   std::min(f.rank_sample, ids.size() - 1), f.seed);
    pm.list_jac = probe_list_jaccard(user_side, item_side, projected, split, ids, f.k);
    const auto [rcf, rps] =
        probe_downstream_recall(user_side, item_side, projected, split, ids, f.k, scope);
    pm.recall_cf = rcf;
    pm.recall_ps = rps;
    return pm;
  };

  for (const std::string& name : [&] {
         std::vector<std::string> names;
         std::stringstream ss(f.archs);
         std::string tok;
         while (std::getline(ss, tok, ',')) names.push_back(tok);
         return names;
       }()) {
    const ProbeArch arch = probe_arch_from_string(name);
    if (arch == ProbeArch::Identity && inputs.cols != cf_items.cols) {
      std::cerr << "[complat] skipping identity probe (dims " << inputs.cols << " vs "
                << cf_items.cols << ")\n";
      continue;
    }
    ProbeFitConfig fit = f.fit;
    fit.seed = f.seed;
    const ProbeMapping map = fit_probe(inputs, cf_items, fit_ids, arch, fit);
    ProbeRow row;
    row.model = to_string(arch);
    row.train = metrics_for(map.apply(subset(inputs, fit_ids)), fit_ids, cf_users, cf_items);
    row.test = metrics_for(map.apply(subset(inputs, held_ids)), held_ids, cf_users, cf_items);
    report.rows.push_back(row);
  }

  if (f.alignment) {
    AlignmentConfig ac;
    ac.tau = f.align_tau;
    ac.seed = f.seed;
    ac.d_out = cf_items.cols;
    const auto [g_cf, g_sem] = train_contrastive_alignment(inputs, cf_items, fit_ids, ac);
    const Matrix aligned_items = g_cf.apply(cf_items);
    const Matrix aligned_users = g_cf.apply(cf_users);
    ProbeRow row;
    row.model = "contrastive";
    const auto aligned_metrics = [&](const std::vector<std::uint32_t>& ids) {
      ProbeMetrics pm = metrics_for(g_sem.apply(subset(inputs, ids)), ids, aligned_users,
                                    aligned_items);
      // the recall ceiling stays the raw target-space one, as in the probe rows
      const auto [rcf, unused] = probe_downstream_recall(
          cf_users, cf_items, subset(cf_items, ids), split, ids, f.k, scope);
      (void)unused;
      pm.recall_cf = rcf;
      return pm;
    };
    row.train = aligned_metrics(fit_ids);
    row.test = aligned_metrics(held_ids);
    report.rows.push_back(row);
  }

  // emit CSV mirroring the probe table column order, one block per partition
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : report.rows) {
    const auto push = [&](const char* part, const ProbeMetrics& m) {
      rows.push_back({part, row.model, fmt_double(m.r2), fmt_double(m.cos),
                      fmt_double(m.geo_jac), fmt_double(m.rank_cor), fmt_double(m.list_jac),
                      fmt_double(m.recall_cf), fmt_double(m.recall_ps)});
    };
    push("train", row.train);
    push("test", row.test);
  }
  write_csv(f.out + "/probe.csv",
            {"partition", "model", "r2", "cos", "geojac", "rankcor", "listjac", "recall_cf",
             "recall_ps"},
            rows);

  Json j;
  j["dataset_hash"] = ds_hash;
  j["config_hash"] = hash_hex(hash);
  j["geo_k"] = f.geo_k;
  j["rank_sample"] = f.rank_sample;
  j["k"] = f.k;
  j["recall_scope"] = f.scope;
  j["probe_input"] = f.input;
  j["item_split"] = f.item_split;
  j["seed"] = f.seed;
  j["fit_items"] = fit_ids.size();
  j["held_items"] = held_ids.size();
  Json jrows = Json::array();
  for (const auto& row : report.rows) {
    const auto jm = [](const ProbeMetrics& m) {
      return Json{{"r2", m.r2},           {"cos", m.cos},
                  {"geojac", m.geo_jac},  {"rankcor", m.rank_cor},
                  {"listjac", m.list_jac}, {"recall_cf", m.recall_cf},
                  {"recall_ps", m.recall_ps}};
    };
    jrows.push_back({{"model", row.model}, {"train", jm(row.train)}, {"test", jm(row.test)}});
  }
  j["rows"] = jrows;
  write_json_file(f.out + "/probe.json", j);

  std::cout << "probe report -> " << f.out << "/probe.csv (" << report.rows.size()
            << " mappings)\n";
  log_run("probe", f.seed, hash, timer);
  return 0;
}

struct DiagnoseFlags {
  std::string data, a_dir, b_dir, fused_dir, out, embeddings;
  std::string ks = "5,10,20";
  std::string target = "test";
};

int cmd_diagnose(DiagnoseFlags& f) {
  Timer timer;
  if (f.a_dir.empty() && f.b_dir.empty() && f.fused_dir.empty())
    throw ConfigError("diagnose needs --a/--b checkpoints or --fused");
  if (f.a_dir.empty() != f.b_dir.empty())
    throw ConfigError("--a and --b must be given together");

  KV kv{{"data", f.data},  {"a", f.a_dir},       {"b", f.b_dir}, {"fused", f.fused_dir},
        {"k", f.ks},       {"target", f.target}, {"out", f.out}};
  std::uint64_t hash = 0;
  emit_resolved_config(f.out, "diagnose", kv, &hash);

  const SplitDataset split = load_dataset_bundle(f.data);
  const std::string ds_hash = hash_hex(dataset_hash(split));
  const BipartiteGraph graph = build_graph(split);
  const Split target = f.target == "val" ? Split::Val : Split::Test;
  if (f.target != "val" && f.target != "test")
    throw ConfigError("--target must be val or test");

  // Item vectors are needed by sem/fusion checkpoints; load lazily.
  std::optional<Matrix> vecs;
  std::optional<Matrix> pooled;
  const auto need_vecs = [&] {
    if (!vecs) {
      vecs = load_item_vectors(f.data, f.embeddings, split.base.n_items);
      pooled = pooled_user_inputs(split, *vecs);
    }
  };
  const auto kind_of = [&](const std::string& dir) { return checkpoint_kind(dir); };

  ModelScorers scorers;
  if (!f.a_dir.empty()) {
    if (kind_of(f.a_dir) != "cf") need_vecs();
    make_scorer(f.a_dir, graph, vecs ? &*vecs : nullptr, pooled ? &*pooled : nullptr, ds_hash,
                scorers, "a");
    if (kind_of(f.b_dir) != "cf") need_vecs();
    make_scorer(f.b_dir, graph, vecs ? &*vecs : nullptr, pooled ? &*pooled : nullptr, ds_hash,
                scorers, "b");
  }
  if (!f.fused_dir.empty()) {
    need_vecs();
    make_scorer(f.fused_dir, graph, &*vecs, &*pooled, ds_hash, scorers, "fused",
                FusionView::Full);
    make_scorer(f.fused_dir, graph, &*vecs, &*pooled, ds_hash, scorers, "fused_cf",
                FusionView::CfOnly);
    make_scorer(f.fused_dir, graph, &*vecs, &*pooled, ds_hash, scorers, "fused_sem",
                FusionView::SemOnly);
  }

  const PopularityTable strata = popularity_strata(split);
  const auto k_list = parse_size_list(f.ks);

  std::vector<std::vector<std::string>> single_rows, comp_rows, fusion_rows, strata_rows,
      composition_rows, curve_rows;

  for (std::size_t k : k_list) {
    std::map<std::string, RankingResult> results;
    for (const auto& name : scorers.order)
      results.emplace(name, evaluate_ranking(split, target, k, scorers.scorers.at(name)));

    for (const auto& name : scorers.order) {
      const auto& r = results.at(name);
      MetricCounts counts;
      const double recall = recall_at_k(r, &counts);
      single_rows.push_back({name, std::to_string(k), fmt_double(recall),
                             fmt_double(ndcg_at_k(r)), fmt_double(hit_at_k(r)),
                             std::to_string(counts.evaluated)});
      const auto sr = stratified_recall(r, strata);
      strata_rows.push_back({name, std::to_string(k), nan_csv(sr.head.value),
                             nan_csv(sr.mid.value), nan_csv(sr.cold.value)});
    }

    const auto pair_block = [&](const std::string& label, const RankingResult& ra,
                                const RankingResult& rb) {
      MetricCounts cj;
      const double hj = hit_jaccard(ra, rb, &cj);
      const double lj = list_jaccard(ra, rb);
      const double cm = comp_ratio(ra, rb, CompMode::Macro);
      const double cmi = comp_ratio(ra, rb, CompMode::Micro);
      const double u = union_upper_bound(ra, rb);
      comp_rows.push_back({label, std::to_string(k), nan_csv(lj), nan_csv(hj), nan_csv(cm),
                           nan_csv(cmi), nan_csv(u), fmt_double(recall_at_k(ra)),
                           fmt_double(recall_at_k(rb)), std::to_string(cj.skipped)});
      if (label == "a_vs_b")
        curve_rows.push_back({std::to_string(k), nan_csv(lj), nan_csv(cm), nan_csv(cmi)});
      const auto comp = hit_composition(ra, rb);
      composition_rows.push_back({label, std::to_string(k), nan_csv(comp.a_unique),
                                  nan_csv(comp.b_unique), nan_csv(comp.common),
                                  std::to_string(comp.pool)});
      // stratified UUB from the union of the two lists
      const auto su = stratified_recall(union_result(ra, rb), strata);
      strata_rows.push_back({label + "_uub", std::to_string(k), nan_csv(su.head.value),
                             nan_csv(su.mid.value), nan_csv(su.cold.value)});
      return u;
    };

    if (!f.a_dir.empty()) pair_block("a_vs_b", results.at("a"), results.at("b"));

    if (!f.fused_dir.empty()) {
      const double uub_branches =
          pair_block("branches", results.at("fused_cf"), results.at("fused_sem"));
      const double r_sem = recall_at_k(results.at("fused_sem"));
      const double r_cf = recall_at_k(results.at("fused_cf"));
      const double r_val = recall_at_k(results.at("fused"));
      const double best = std::max(r_sem, r_cf);
      fusion_rows.push_back({std::to_string(k), fmt_double(r_sem), fmt_double(r_cf),
                             fmt_double(r_val), fmt_double(uub_branches),
                             fmt_double(best > 0 ? (r_val - best) / best : 0.0)});
    }
  }

  write_csv(f.out + "/singleview.csv", {"model", "k", "recall", "ndcg", "hit", "users"},
            single_rows);
  if (!comp_rows.empty())
    write_csv(f.out + "/complementarity.csv",
              {"pair", "k", "list_jaccard", "hit_jaccard", "comp_ratio_macro",
               "comp_ratio_micro", "uub", "recall_a", "recall_b", "skipped_users"},
              comp_rows);
  if (!fusion_rows.empty())
    write_csv(f.out + "/fusion.csv",
              {"k", "sem_view_recall", "collab_view_recall", "fused_recall", "uub",
               "gain_vs_best"},
              fusion_rows);
  write_csv(f.out + "/strata.csv", {"model", "k", "head", "mid", "cold"}, strata_rows);
  if (!composition_rows.empty())
    write_csv(f.out + "/composition.csv",
              {"pair", "k", "a_unique", "b_unique", "common", "pool"}, composition_rows);
  if (!curve_rows.empty())
    write_csv(f.out + "/curves.csv",
              {"k", "list_jaccard", "comp_ratio_macro", "comp_ratio_micro"}, curve_rows);

  Json j;
  j["dataset_hash"] = ds_hash;
  j["config_hash"] = hash_hex(hash);
  j["target"] = f.target;
  j["k"] = k_list;
  j["models"] = scorers.order;
  write_json_file(f.out + "/diagnose.json", j);

  std::cout << "diagnostics -> " << f.out << "\n";
  log_run("diagnose", 0, hash, timer);
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_dir) {
  Timer timer;
  const std::string out = out_dir.empty() ? run_dir : out_dir;

  // collect artifacts
  std::vector<std::string> stats, probes, diagnoses;
  std::string ds_hash;
  bool mixed = false;
  if (!fs::exists(run_dir)) throw DataError("run directory not found: " + run_dir);
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name != "stats.json" && name != "probe.json" && name != "diagnose.json") continue;
    const Json j = read_json_file(entry.path().string());
    if (j.contains("dataset_hash")) {
      const std::string h = j.at("dataset_hash").get<std::string>();
      if (ds_hash.empty())
        ds_hash = h;
      else if (ds_hash != h)
        mixed = true;
    }
    if (name == "stats.json") stats.push_back(entry.path().string());
    if (name == "probe.json") probes.push_back(entry.path().string());
    if (name == "diagnose.json") diagnoses.push_back(entry.path().string());
  }
  if (stats.empty() && probes.empty() && diagnoses.empty()) {
    std::cout << "nothing to report in " << run_dir << " (no artifacts found)\n";
    return 0;
  }
  if (mixed)
    throw DataError("refusing to mix artifacts from different datasets in " + run_dir);

  std::sort(stats.begin(), stats.end());
  std::sort(probes.begin(), probes.end());
  std::sort(diagnoses.begin(), diagnoses.end());

  Json report;
  report["dataset_hash"] = ds_hash;
  report["stats"] = Json::array();
  for (const auto& p : stats) report["stats"].push_back(read_json_file(p));
  report["probe"] = Json::array();
  for (const auto& p : probes) report["probe"].push_back(read_json_file(p));

  // UUB dominance cross-check on every complementarity table
  report["tables"] = Json::array();
  for (const auto& d : diagnoses) {
    const std::string dir = fs::path(d).parent_path().string();
    Json entry = read_json_file(d);
    for (const char* table : {"singleview.csv", "complementarity.csv", "fusion.csv",
                              "strata.csv", "composition.csv", "curves.csv"}) {
      const std::string path = dir + "/" + table;
      if (fs::exists(path)) entry["files"].push_back(path);
    }
    const std::string comp_path = dir + "/complementarity.csv";
    if (fs::exists(comp_path)) {
      std::istringstream in(read_text_file(comp_path));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 10 || cells[6] == "nan") continue;
        const double uub = std::stod(cells[6]);
        const double ra = std::stod(cells[7]);
        const double rb = std::stod(cells[8]);
        if (uub + 1e-12 < std::max(ra, rb))
          throw NumericalError("UUB dominance violated in " + comp_path + " row: " + line);
      }
    }
    report["tables"].push_back(entry);
  }

  fs::create_directories(out);
  write_json_file(out + "/report.json", report);
  std::cout << "consolidated report -> " << out << "/report.json (" << stats.size()
            << " stats, " << probes.size() << " probe, " << diagnoses.size()
            << " diagnose artifacts)\n";
  log_run("report", 0, config_hash(run_dir), timer);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"complat: semantic/collaborative complementarity workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file with [command] sections");

  // ingest
  std::string in_interactions, in_ratios = "0.8,0.1,0.1", in_out;
  std::size_t in_kcore = 5;
  std::uint64_t in_seed = 42;
  auto* ingest = app.add_subcommand("ingest", "load, k-core filter, and split interactions");
  ingest->configurable();
  ingest->add_option("--interactions", in_interactions, "TSV interaction file")->required();
  ingest->add_option("--kcore", in_kcore, "k-core threshold (default 5)");
  ingest->add_option("--ratios", in_ratios, "train,val,test ratios");
  ingest->add_option("--seed", in_seed, "split seed");
  ingest->add_option("--out", in_out, "output bundle directory")->required();

  // synth
  LatentWorldConfig synth_cfg;
  std::string synth_alphas = "0.5", synth_ratios = "0.8,0.1,0.1", synth_out;
  auto* synth = app.add_subcommand("synth", "generate shared-plus-private synthetic worlds");
  synth->configurable();
  synth->add_option("--users", synth_cfg.n_users, "user count");
  synth->add_option("--items", synth_cfg.n_items, "item count");
  synth->add_option("--alpha", synth_alphas, "shared-variance fraction(s), comma separated");
  synth->add_option("--k-shared", synth_cfg.k_shared, "shared latent dims");
  synth->add_option("--k-cf", synth_cfg.k_cf, "collaborative-only latent dims");
  synth->add_option("--k-sem", synth_cfg.k_sem, "semantic-only latent dims");
  synth->add_option("--per-user", synth_cfg.interactions_per_user, "interactions per user");
  synth->add_option("--noise", synth_cfg.noise_sigma, "semantic noise sigma");
  synth->add_option("--gumbel-scale", synth_cfg.gumbel_scale, "exposure noise scale");
  synth->add_option("--d-sem", synth_cfg.d_sem, "semantic vector width");
  synth->add_option("--seed", synth_cfg.seed, "world seed");
  synth->add_option("--ratios", synth_ratios, "train,val,test ratios");
  synth->add_option("--out", synth_out, "output directory")->required();

  // trainers
  TrainFlags cf_flags;
  auto* traincf = app.add_subcommand("train-cf", "train the collaborative view");
  traincf->configurable();
  cf_flags.add_common(traincf, false);
  traincf->add_option("--layers", cf_flags.layers, "propagation layers");

  TrainFlags sem_flags;
  bool sem_no_bias = false;
  auto* trainsem = app.add_subcommand("train-sem", "train the semantic view");
  trainsem->configurable();
  sem_flags.add_common(trainsem, true);
  trainsem->add_option("--tau", sem_flags.cfg.tau, "InfoNCE temperature");
  trainsem->add_option("--n-neg", sem_flags.cfg.n_neg, "global negatives per anchor");
  trainsem->add_flag("--no-bias", sem_no_bias, "drop the projection bias");

  TrainFlags fus_flags;
  auto* trainfus = app.add_subcommand("train-fusion", "train the dual-encoder fusion");
  trainfus->configurable();
  fus_flags.add_common(trainfus, true);
  trainfus->add_option("--layers", fus_flags.layers, "propagation layers");
  trainfus->add_option("--tau", fus_flags.cfg.tau, "InfoNCE temperature");
  trainfus->add_option("--hard-pool", fus_flags.cfg.hard_pool, "mining candidate pool size");
  trainfus->add_option("--hard-m", fus_flags.cfg.hard_m, "mined negatives per anchor");

  // probe
  ProbeFlags probe_flags;
  auto* probe = app.add_subcommand("probe", "capacity-swept alignment probe");
  probe->configurable();
  probe->add_option("--data", probe_flags.data, "dataset bundle")->required();
  probe->add_option("--cf", probe_flags.cf_dir, "cf checkpoint (targets)")->required();
  probe->add_option("--sem", probe_flags.sem_dir, "sem checkpoint (probe inputs)");
  probe->add_option("--embeddings", probe_flags.embeddings, "item vector file override");
  probe->add_option("--arch", probe_flags.archs, "mapping ladder, comma separated");
  probe->add_option("--item-split", probe_flags.item_split, "fit fraction of items");
  probe->add_option("--seed", probe_flags.seed, "probe seed");
  probe->add_option("--geo-k", probe_flags.geo_k, "neighbor count for GeoJac");
  probe->add_option("--rank-sample", probe_flags.rank_sample, "sampled items for RankCor");
  probe->add_option("--k", probe_flags.k, "cutoff for ListJac and Recall");
  probe->add_option("--recall-scope", probe_flags.scope, "partition or full");
  probe->add_option("--probe-input", probe_flags.input, "proj (trained sem output) or raw");
  probe->add_flag("--alignment", probe_flags.alignment, "add the contrastive-alignment row");
  probe->add_option("--align-tau", probe_flags.align_tau, "alignment temperature");
  probe->add_option("--fit-lr", probe_flags.fit.lr, "probe Adam learning rate");
  probe->add_option("--fit-epochs", probe_flags.fit.max_epochs, "probe epoch cap");
  probe->add_option("--out", probe_flags.out, "output directory")->required();

  // diagnose
  DiagnoseFlags diag_flags;
  auto* diagnose = app.add_subcommand("diagnose", "complementarity diagnostics between models");
  diagnose->configurable();
  diagnose->add_option("--data", diag_flags.data, "dataset bundle")->required();
  diagnose->add_option("--a", diag_flags.a_dir, "first checkpoint");
  diagnose->add_option("--b", diag_flags.b_dir, "second checkpoint");
  diagnose->add_option("--fused", diag_flags.fused_dir, "fusion checkpoint for branch analysis");
  diagnose->add_option("--embeddings", diag_flags.embeddings, "item vector file override");
  diagnose->add_option("--k", diag_flags.ks, "cutoffs, comma separated");
  diagnose->add_option("--target", diag_flags.target, "val or test ground truth");
  diagnose->add_option("--out", diag_flags.out, "output directory")->required();

  // report
  std::string report_run, report_out;
  auto* report = app.add_subcommand("report", "consolidate artifacts from a run directory");
  report->configurable();
  report->add_option("--run", report_run, "run directory to scan")->required();
  report->add_option("--out", report_out, "output directory (default: run dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(in_interactions, in_kcore, in_ratios, in_seed, in_out);
    if (*synth) return cmd_synth(synth_cfg, synth_alphas, synth_ratios, synth_out);
    if (*traincf) return cmd_train_cf(cf_flags);
    if (*trainsem) return cmd_train_sem(sem_flags, sem_no_bias);
    if (*trainfus) return cmd_train_fusion(fus_flags);
    if (*probe) return cmd_probe(probe_flags);
    if (*diagnose) return cmd_diagnose(diag_flags);
    if (*report) return cmd_report(report_run, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
