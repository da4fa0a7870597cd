#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/e2e_trainer.hpp"
#include "eqa/eval_harness.hpp"
#include "eqa/nav_policy.hpp"
#include "eqa/qa_model.hpp"

namespace eqa::io {

using Json = nlohmann::json;

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);
void ensure_dir(const std::string& path);

// --- dataset directory: manifest.json + envs/<env_id>.json ------------------

Json env_to_json(const EnvRecord& record);
EnvRecord env_from_json(const Json& j);
Json dataset_config_to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const Json& j);

void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);  // throws FormatError

// --- checkpoints -----------------------------------------------------------

// Byte layout is documented in docs/FORMATS.md. Loading rejects a bad magic,
// an unknown version, a kind mismatch, a parameter name/shape mismatch or a
// checksum failure with FormatError.
std::string checkpoint_bytes(const NavModel& model, const Json& meta = Json::object());
std::string checkpoint_bytes(const QAModel& model, const Json& meta = Json::object());
std::string checkpoint_bytes(const BlindfoldModel& model, const Json& meta = Json::object());

NavModel nav_from_bytes(const std::string& bytes, Json* meta = nullptr);
QAModel qa_from_bytes(const std::string& bytes, Json* meta = nullptr);
BlindfoldModel blindfold_from_bytes(const std::string& bytes, Json* meta = nullptr);

// Reads only the header; returns the kind ("nav", "qa", "blindfold").
std::string checkpoint_kind(const std::string& bytes);

template <typename Model>
void save_checkpoint(const std::string& path, const Model& model, const Json& meta = Json::object()) {
  write_file_atomic(path, checkpoint_bytes(model, meta));
}
NavModel load_nav(const std::string& path, Json* meta = nullptr);
QAModel load_qa(const std::string& path, Json* meta = nullptr);
BlindfoldModel load_blindfold(const std::string& path, Json* meta = nullptr);

Json nav_config_to_json(const NavConfig& c);
NavConfig nav_config_from_json(const Json& j);
Json qa_config_to_json(const QAConfig& c);
QAConfig qa_config_from_json(const Json& j);

// --- reports -----------------------------------------------------------------

Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);
// One row per tier: k, episodes, skipped, d_delta (cells, m), QA accuracy,
// stop rate, mean length, mean initial distance.
std::string report_csv(const EvalReport& report);
std::string training_curve_csv(const std::vector<EpochLog>& log);

Json comparison_to_json(const Comparison& cmp);
// Aligned plain-text table: one row per setting, d_delta and QA columns per
// tier, mean +- std over seeds.
std::string comparison_table(const Comparison& cmp);

Json curve_to_json(const Curve& curve);
// One row per (tier, statistic), one column per swept value.
std::string curve_csv(const Curve& curve);

}  // namespace eqa::io
