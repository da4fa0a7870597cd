#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqa/calibration.hpp"
#include "eqa/dataset.hpp"
#include "eqa/e2e_trainer.hpp"
#include "eqa/eval_harness.hpp"
#include "eqa/qa_model.hpp"

namespace eqa::io {

// Everything a run needs, read from one YAML document. Sections: data, train,
// calibration, eval, sweep; top-level `out_dir` and `jobs`.
struct RunConfig {
  std::string out_dir = "out";
  int jobs = 1;

  DatasetConfig data;

  // train
  std::string train_mode = "e2e";  // nav | qa | e2e
  std::uint64_t train_seed = 1;
  JointConfig joint;
  BlindfoldTrainConfig blindfold;

  // calibration
  CalibrationMethod calibration_method = CalibrationMethod::Distill;
  CalibrationConfig calibration = default_calibration();

  // eval
  std::string eval_split = "test";
  EvalOptions eval;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  // sweep
  std::vector<int> sweep_markers = {1, 2, 3, 4, 5};
  std::vector<double> sweep_lambdas = {0.0, 0.1, 0.2, 0.5, 0.8, 1.0};

  static CalibrationConfig default_calibration();
  void validate() const;  // throws ConfigError
  ExperimentConfig experiment() const;
};

// Parses YAML text. Unknown keys and ill-typed values raise ConfigError naming
// the key and its line. `source` labels messages.
RunConfig parse_config(const std::string& yaml_text, const std::string& source = "config");
RunConfig load_config(const std::string& path);

// Applies "a.b.c=value" overrides (value parsed as YAML) on top of a document
// before parsing.
RunConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides,
                       const std::string& source = "config");

// Fully resolved configuration as YAML; parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

}  // namespace eqa::io
