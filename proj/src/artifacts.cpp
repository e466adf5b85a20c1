#include "complat/artifacts.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "complat/embedding_io.hpp"
#include "complat/errors.hpp"
#include "complat/rng.hpp"

namespace complat {

namespace fs = std::filesystem;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void hash_bytes(std::uint64_t& h, const void* p, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t dataset_hash(const SplitDataset& split) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto u64 = [&](std::uint64_t v) { hash_bytes(h, &v, sizeof(v)); };
  u64(split.base.n_users);
  u64(split.base.n_items);
  u64(split.base.interactions.size());
  for (const auto& s : split.base.user_raw_ids) hash_bytes(h, s.data(), s.size());
  for (const auto& s : split.base.item_raw_ids) hash_bytes(h, s.data(), s.size());
  for (std::size_t idx = 0; idx < split.base.interactions.size(); ++idx) {
    const auto& e = split.base.interactions[idx];
    u64(e.user);
    u64(e.item);
    u64(static_cast<std::uint64_t>(e.timestamp));
    u64(static_cast<std::uint64_t>(split.assignment[idx]));
  }
  return h;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw DataError("bad JSON in " + path + ": " + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  write_text_file(path, out);
}

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw DataError("unknown split label: " + s);
}

}  // namespace

void save_dataset_bundle(const SplitDataset& split, const std::string& dir, Json extra_meta) {
  fs::create_directories(dir);

  std::string users;
  for (const auto& s : split.base.user_raw_ids) users += s + "\n";
  write_text_file(dir + "/users.txt", users);
  std::string items;
  for (const auto& s : split.base.item_raw_ids) items += s + "\n";
  write_text_file(dir + "/items.txt", items);

  std::string tsv;
  for (std::size_t idx = 0; idx < split.base.interactions.size(); ++idx) {
    const auto& e = split.base.interactions[idx];
    tsv += std::to_string(e.user) + "\t" + std::to_string(e.item) + "\t" +
           std::to_string(e.timestamp) + "\t" + split_name(split.assignment[idx]) + "\n";
  }
  write_text_file(dir + "/split.tsv", tsv);

  Json meta = std::move(extra_meta);
  meta["schema"] = "complat.dataset/1";
  meta["n_users"] = split.base.n_users;
  meta["n_items"] = split.base.n_items;
  meta["n_interactions"] = split.base.interactions.size();
  meta["has_timestamps"] = split.base.has_timestamps;
  meta["duplicates_dropped"] = split.base.duplicates_dropped;
  meta["seed"] = split.seed;
  meta["ratios"] = {{"train", split.ratios.train}, {"val", split.ratios.val},
                    {"test", split.ratios.test}};
  meta["counts"] = {{"train", split.count(Split::Train)}, {"val", split.count(Split::Val)},
                    {"test", split.count(Split::Test)}};
  meta["short_history_users"] = split.short_history_users;
  meta["dataset_hash"] = hash_hex(dataset_hash(split));
  write_json_file(dir + "/dataset.json", meta);

  Json stats;
  stats["users"] = split.base.n_users;
  stats["items"] = split.base.n_items;
  stats["interactions"] = split.base.interactions.size();
  stats["sparsity"] = compute_sparsity(split.base);
  stats["dataset_hash"] = meta["dataset_hash"];
  write_json_file(dir + "/stats.json", stats);
}

SplitDataset load_dataset_bundle(const std::string& dir) {
  if (!fs::exists(dir + "/dataset.json"))
    throw DataError("no dataset bundle at " + dir + " (produce one with `ingest` or `synth`)");
  const Json meta = read_json_file(dir + "/dataset.json");

  SplitDataset split;
  split.base.n_users = meta.at("n_users").get<std::size_t>();
  split.base.n_items = meta.at("n_items").get<std::size_t>();
  split.base.has_timestamps = meta.at("has_timestamps").get<bool>();
  split.base.duplicates_dropped = meta.value("duplicates_dropped", std::size_t{0});
  split.seed = meta.at("seed").get<std::uint64_t>();
  split.ratios.train = meta.at("ratios").at("train").get<double>();
  split.ratios.val = meta.at("ratios").at("val").get<double>();
  split.ratios.test = meta.at("ratios").at("test").get<double>();
  split.short_history_users = meta.value("short_history_users", std::size_t{0});

  {
    std::istringstream in(read_text_file(dir + "/users.txt"));
    std::string line;
    while (std::getline(in, line)) split.base.user_raw_ids.push_back(line);
    if (split.base.user_raw_ids.size() != split.base.n_users)
      throw DataError("users.txt does not match dataset.json in " + dir);
  }
  {
    std::istringstream in(read_text_file(dir + "/items.txt"));
    std::string line;
    while (std::getline(in, line)) split.base.item_raw_ids.push_back(line);
    if (split.base.item_raw_ids.size() != split.base.n_items)
      throw DataError("items.txt does not match dataset.json in " + dir);
  }

  std::istringstream in(read_text_file(dir + "/split.tsv"));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::uint32_t u, i;
    std::int64_t ts;
    std::string tag;
    if (!(ls >> u >> i >> ts >> tag))
      throw DataError("bad split.tsv line " + std::to_string(line_no) + " in " + dir);
    split.base.interactions.push_back({u, i, ts});
    split.assignment.push_back(split_from_name(tag));
  }
  if (split.base.interactions.size() != meta.at("n_interactions").get<std::size_t>())
    throw DataError("split.tsv does not match dataset.json in " + dir);

  split.rebuild_index();
  const std::string expect = meta.at("dataset_hash").get<std::string>();
  if (hash_hex(dataset_hash(split)) != expect)
    throw DataError("dataset bundle content does not match its recorded hash in " + dir);
  return split;
}

void save_cf_checkpoint(const std::string& dir, const CfModel& model, Json meta) {
  fs::create_directories(dir);
  save_embeddings(model.user_emb, dir + "/user_emb.embf");
  save_embeddings(model.item_emb, dir + "/item_emb.embf");
  meta["schema"] = "complat.checkpoint/1";
  meta["kind"] = "cf";
  meta["d"] = model.user_emb.cols;
  meta["layers"] = model.layers;
  write_json_file(dir + "/model.json", meta);
}

CfModel load_cf_checkpoint(const std::string& dir, Json* meta_out) {
  const Json meta = read_json_file(dir + "/model.json");
  if (meta.at("kind") != "cf") throw DataError(dir + " is not a cf checkpoint");
  CfModel m;
  m.user_emb = load_embeddings(dir + "/user_emb.embf");
  m.item_emb = load_embeddings(dir + "/item_emb.embf");
  m.layers = meta.at("layers").get<int>();
  if (meta_out) *meta_out = meta;
  return m;
}

void save_sem_checkpoint(const std::string& dir, const SemModel& model, Json meta) {
  fs::create_directories(dir);
  save_embeddings(model.w, dir + "/proj_w.embf");
  Matrix b(1, model.b.size());
  std::copy(model.b.begin(), model.b.end(), b.data.begin());
  save_embeddings(b, dir + "/proj_b.embf");
  meta["schema"] = "complat.checkpoint/1";
  meta["kind"] = "sem";
  meta["d"] = model.d_out();
  meta["d_in"] = model.d_in();
  meta["use_bias"] = !model.b.empty();
  write_json_file(dir + "/model.json", meta);
}

SemModel load_sem_checkpoint(const std::string& dir, Json* meta_out) {
  const Json meta = read_json_file(dir + "/model.json");
  if (meta.at("kind") != "sem") throw DataError(dir + " is not a sem checkpoint");
  SemModel m;
  m.w = load_embeddings(dir + "/proj_w.embf");
  const Matrix b = load_embeddings(dir + "/proj_b.embf");
  m.b.assign(b.data.begin(), b.data.end());
  if (meta_out) *meta_out = meta;
  return m;
}

void save_fusion_checkpoint(const std::string& dir, const FusionModel& model, Json meta) {
  fs::create_directories(dir);
  save_embeddings(model.cf_user, dir + "/cf_user.embf");
  save_embeddings(model.cf_item, dir + "/cf_item.embf");
  // projection augmented with the bias as its last column
  Matrix proj(model.sem.w.rows, model.sem.w.cols + 1);
  for (std::size_t r = 0; r < proj.rows; ++r) {
    std::copy_n(model.sem.w.row(r), model.sem.w.cols, proj.row(r));
    proj.at(r, model.sem.w.cols) = model.sem.b.empty() ? 0.0 : model.sem.b[r];
  }
  save_embeddings(proj, dir + "/sem_proj.embf");
  meta["schema"] = "complat.checkpoint/1";
  meta["kind"] = "fusion";
  meta["sem_proj_layout"] = "weights with bias as last column";
  meta["d"] = model.branch_dim();
  meta["d_in"] = model.sem.d_in();
  meta["layers"] = model.layers;
  write_json_file(dir + "/model.json", meta);
}

FusionModel load_fusion_checkpoint(const std::string& dir, Json* meta_out) {
  const Json meta = read_json_file(dir + "/model.json");
  if (meta.at("kind") != "fusion") throw DataError(dir + " is not a fusion checkpoint");
  FusionModel m;
  m.cf_user = load_embeddings(dir + "/cf_user.embf");
  m.cf_item = load_embeddings(dir + "/cf_item.embf");
  const Matrix proj = load_embeddings(dir + "/sem_proj.embf");
  m.sem.w = Matrix(proj.rows, proj.cols - 1);
  m.sem.b.resize(proj.rows);
  for (std::size_t r = 0; r < proj.rows; ++r) {
    std::copy_n(proj.row(r), proj.cols - 1, m.sem.w.row(r));
    m.sem.b[r] = proj.at(r, proj.cols - 1);
  }
  m.layers = meta.at("layers").get<int>();
  if (meta_out) *meta_out = meta;
  return m;
}

std::string checkpoint_kind(const std::string& dir) {
  if (!fs::exists(dir + "/model.json"))
    throw DataError("no checkpoint at " + dir + " (produce one with a train command)");
  return read_json_file(dir + "/model.json").at("kind").get<std::string>();
}

}  // namespace complat
