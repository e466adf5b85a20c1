#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "complat/cf_model.hpp"
#include "complat/dataset.hpp"
#include "complat/fusion.hpp"
#include "complat/matrix.hpp"
#include "complat/sem_model.hpp"

namespace complat {

using Json = nlohmann::json;

std::string hash_hex(std::uint64_t h);

// Content hash over ids, interactions, and split assignment; artifacts carry
// it so downstream commands can refuse mixed inputs.
std::uint64_t dataset_hash(const SplitDataset& split);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// Fixed-format float for CSV cells (%.10g).
std::string fmt_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Dataset bundle directory: dataset.json, stats.json, users.txt, items.txt,
// split.tsv (+ items_sem.embf and manifest.json for synthetic worlds).
void save_dataset_bundle(const SplitDataset& split, const std::string& dir, Json extra_meta);
SplitDataset load_dataset_bundle(const std::string& dir);

// Checkpoint directories; model.json carries kind, shapes, and hashes.
void save_cf_checkpoint(const std::string& dir, const CfModel& model, Json meta);
CfModel load_cf_checkpoint(const std::string& dir, Json* meta = nullptr);

void save_sem_checkpoint(const std::string& dir, const SemModel& model, Json meta);
SemModel load_sem_checkpoint(const std::string& dir, Json* meta = nullptr);

// Fusion checkpoints store three matrices; the projection is augmented with
// the bias as its last column.
void save_fusion_checkpoint(const std::string& dir, const FusionModel& model, Json meta);
FusionModel load_fusion_checkpoint(const std::string& dir, Json* meta = nullptr);

// Reads model.json and returns its "kind" field (cf/sem/fusion).
std::string checkpoint_kind(const std::string& dir);

}  // namespace complat
