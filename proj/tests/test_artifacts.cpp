#include <doctest.h>

#include <filesystem>

#include "complat/artifacts.hpp"
#include "complat/errors.hpp"
#include "complat/rng.hpp"
#include "test_helpers.hpp"

using namespace complat;

namespace {

std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("dataset bundle round trips with a stable hash") {
  testutil::Rng rng(1);
  const auto ds = testutil::random_dataset(rng, 20, 15, 4, 8);
  const auto split = split_per_user(ds, {0.7, 0.15, 0.15}, 5);
  const auto dir = temp_dir("complat_bundle");

  save_dataset_bundle(split, dir, Json::object());
  const auto loaded = load_dataset_bundle(dir);

  CHECK(loaded.base.n_users == split.base.n_users);
  CHECK(loaded.base.n_items == split.base.n_items);
  CHECK(loaded.assignment == split.assignment);
  CHECK(loaded.base.user_raw_ids == split.base.user_raw_ids);
  CHECK(dataset_hash(loaded) == dataset_hash(split));

  // corrupting the split invalidates the recorded hash
  auto text = read_text_file(dir + "/split.tsv");
  text.replace(text.find("train"), 5, "val");
  write_text_file(dir + "/split.tsv", text);
  CHECK_THROWS_AS(static_cast<void>(load_dataset_bundle(dir)), DataError);
}

TEST_CASE("checkpoints round trip") {
  Rng rng(2);
  const auto dir = temp_dir("complat_ckpts");

  CfModel cf;
  cf.layers = 2;
  cf.user_emb = Matrix(5, 4);
  cf.item_emb = Matrix(7, 4);
  for (double& x : cf.user_emb.data) x = rng.normal();
  for (double& x : cf.item_emb.data) x = rng.normal();
  save_cf_checkpoint(dir + "/cf", cf, {{"dataset_hash", "abc"}});
  Json meta;
  const auto cf2 = load_cf_checkpoint(dir + "/cf", &meta);
  CHECK(meta.at("dataset_hash") == "abc");
  CHECK(cf2.layers == 2);
  CHECK(cf2.user_emb.rows == 5);
  // values survive at float32 precision
  for (std::size_t k = 0; k < cf.user_emb.data.size(); ++k)
    CHECK(cf2.user_emb.data[k] == doctest::Approx(cf.user_emb.data[k]).epsilon(1e-6));

  SemModel sem;
  sem.w = Matrix(4, 9);
  sem.b.assign(4, 0.25);
  for (double& x : sem.w.data) x = rng.normal();
  save_sem_checkpoint(dir + "/sem", sem, Json::object());
  const auto sem2 = load_sem_checkpoint(dir + "/sem");
  CHECK(sem2.w.rows == 4);
  CHECK(sem2.w.cols == 9);
  CHECK(sem2.b.size() == 4);
  CHECK(sem2.b[0] == doctest::Approx(0.25));

  FusionModel fm;
  fm.layers = 2;
  fm.cf_user = cf.user_emb;
  fm.cf_item = cf.item_emb;
  fm.sem = sem;
  save_fusion_checkpoint(dir + "/fusion", fm, Json::object());
  const auto fm2 = load_fusion_checkpoint(dir + "/fusion");
  CHECK(fm2.sem.w.cols == 9);
  CHECK(fm2.sem.b[2] == doctest::Approx(0.25));
  CHECK(fm2.cf_item.rows == 7);

  CHECK(checkpoint_kind(dir + "/cf") == "cf");
  CHECK(checkpoint_kind(dir + "/sem") == "sem");
  CHECK(checkpoint_kind(dir + "/fusion") == "fusion");
  CHECK_THROWS_AS(static_cast<void>(checkpoint_kind(dir + "/nope")), DataError);
  CHECK_THROWS_AS(static_cast<void>(load_cf_checkpoint(dir + "/sem")), DataError);
}

TEST_CASE("csv and json writers are deterministic") {
  const auto dir = temp_dir("complat_reportio");
  write_csv(dir + "/t.csv", {"a", "b"}, {{"1", "2"}, {fmt_double(0.5), fmt_double(1.0 / 3.0)}});
  const auto text = read_text_file(dir + "/t.csv");
  CHECK(text == "a,b\n1,2\n0.5,0.3333333333\n");

  Json j;
  j["z"] = 1;
  j["a"] = 2;
  write_json_file(dir + "/t.json", j);
  write_json_file(dir + "/t2.json", j);
  CHECK(read_text_file(dir + "/t.json") == read_text_file(dir + "/t2.json"));
}

TEST_CASE("stats.json carries the dataset statistics table") {
  testutil::Rng rng(8);
  const auto ds = testutil::random_dataset(rng, 10, 8, 3, 6);
  const auto split = split_per_user(ds, {0.7, 0.15, 0.15}, 2);
  const auto dir = temp_dir("complat_stats");
  save_dataset_bundle(split, dir, Json::object());
  const Json stats = read_json_file(dir + "/stats.json");
  CHECK(stats.at("users").get<std::size_t>() == 10);
  CHECK(stats.at("items").get<std::size_t>() == 8);
  CHECK(stats.at("interactions").get<std::size_t>() == ds.interactions.size());
  CHECK(stats.contains("sparsity"));
}
