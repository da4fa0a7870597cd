#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "eqa/calibration.hpp"
#include "eqa/dataset.hpp"
#include "eqa/e2e_trainer.hpp"
#include "eqa/nav_policy.hpp"
#include "eqa/qa_model.hpp"

namespace eqa {

// Geodesic progress towards the target: dist(spawn) - dist(stop), in cells.
int d_delta(const GridEnvironment& env, Position target, Position spawn, Position stop);

struct AgentEpisode {
  AgentState stop;
  std::vector<Action> actions;
  Termination terminated_by = Termination::MaxSteps;
  std::string answer;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual AgentEpisode run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                           int max_steps) const = 0;
};

// Navigation + QA models evaluated with greedy decoding.
class E2EAgent : public Agent {
 public:
  E2EAgent(const NavModel& nav, const QAModel& qa, const Dataset& dataset, std::string name = "e2e");
  std::string name() const override { return name_; }
  AgentEpisode run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                   int max_steps) const override;

 private:
  const NavModel& nav_;
  const QAModel& qa_;
  const Dataset& ds_;
  std::string name_;
};

// Never moves; answers from the question alone.
class BlindfoldAgent : public Agent {
 public:
  BlindfoldAgent(const BlindfoldModel& model, const Dataset& dataset);
  std::string name() const override { return "blindfold"; }
  AgentEpisode run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                   int max_steps) const override;

 private:
  const BlindfoldModel& model_;
  const Dataset& ds_;
};

// Replays the shortest action path into the goal set, then answers with the
// QA model on the frames along that path.
class OracleAgent : public Agent {
 public:
  OracleAgent(const QAModel& qa, const Dataset& dataset);
  std::string name() const override { return "oracle"; }
  AgentEpisode run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                   int max_steps) const override;

 private:
  const QAModel& qa_;
  const Dataset& ds_;
};

// One adapted navigation model per environment, navigating the
// marker-augmented copy of that environment. Environments without an entry
// fall back to the pretrained model on the original environment.
struct CalibratedEnv {
  GridEnvironment augmented;
  NavModel nav;
};

class CalibratedAgent : public Agent {
 public:
  CalibratedAgent(const NavModel& pretrained, const QAModel& qa, const Dataset& dataset,
                  std::map<std::string, CalibratedEnv> adapted, std::string name);
  std::string name() const override { return name_; }
  AgentEpisode run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                   int max_steps) const override;
  const std::map<std::string, CalibratedEnv>& adapted() const { return adapted_; }

 private:
  const NavModel& pretrained_;
  const QAModel& qa_;
  const Dataset& ds_;
  std::map<std::string, CalibratedEnv> adapted_;
  std::string name_;
};

struct EvalOptions {
  std::vector<int> tiers = {10, 20, 30};
  std::uint64_t seed = 1;
  int max_steps_base = 20;  // max steps = min(cap, mult * k + base)
  int max_steps_mult = 2;
  int max_steps_cap = 120;
  int jobs = 1;

  int max_steps(int k) const;
};

struct EpisodeRecord {
  std::string env_id;
  std::string question_id;
  QuestionType qtype = QuestionType::Color;
  int k = 0;
  AgentState spawn;
  AgentState stop;
  int initial_distance = 0;
  int final_distance = 0;
  int d_delta = 0;
  int steps = 0;
  bool stopped = false;
  std::string answer;
  std::string truth;
  bool correct = false;
};

struct TierStats {
  int k = 0;
  int episodes = 0;
  int skipped = 0;  // questions where no spawn k actions away exists
  double mean_d_delta = 0.0;  // cells
  double mean_d_delta_m = 0.0;
  double qa_accuracy = 0.0;
  double stop_rate = 0.0;
  double mean_length = 0.0;
  double mean_initial_distance = 0.0;
};

struct EvalReport {
  std::string agent;
  std::string split;
  EvalOptions options;
  std::vector<TierStats> tiers;
  std::vector<EpisodeRecord> episodes;
};

// Per-tier aggregates recomputed from episode records (skips must be given).
std::vector<TierStats> aggregate(const std::vector<EpisodeRecord>& episodes, const std::vector<int>& tiers,
                                 const std::map<int, int>& skipped);

// Spawn for (question, k) drawn from a stream keyed by
// (seed, env_id, question_id, k), so every agent sees the same spawns.
EvalReport evaluate(const Agent& agent, const std::vector<EnvRecord>& records, const Dataset& dataset,
                    const EvalOptions& options, const std::string& split = "test");

// ---------------------------------------------------------------------------
// Experiment protocols.

enum class CalibrationMethod { Finetune, Distill };
const char* to_string(CalibrationMethod m);

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  JointConfig train;  // train.seed is overridden per seed
  BlindfoldTrainConfig blindfold;
  CalibrationConfig calibration;
  EvalOptions eval;
  std::vector<int> marker_counts = {1, 2, 3, 4, 5};
  std::vector<double> lambdas = {0.0, 0.1, 0.2, 0.5, 0.8, 1.0};
};

struct SeedModels {
  std::uint64_t seed = 0;
  NavModel nav;
  QAModel qa;
  BlindfoldModel blindfold;
  std::vector<EpochLog> log;
};

SeedModels train_seed(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed);

struct CalibrationRun {
  std::map<std::string, CalibratedEnv> adapted;
  std::vector<std::string> placement_failures;  // env ids
};

// Places markers and adapts the navigation model for every environment in
// `records`. Marker layouts are drawn from a stream keyed by (seed, env_id)
// and placed greedily, so n markers are a prefix of n + 1 markers.
CalibrationRun calibrate_environments(const NavModel& pretrained, const std::vector<EnvRecord>& records,
                                      const Dataset& dataset, CalibrationMethod method,
                                      const CalibrationConfig& config, std::uint64_t seed, int jobs = 1);

// Mean and sample standard deviation over seeds for one tier.
struct TierSummary {
  int k = 0;
  double d_delta_mean = 0.0;
  double d_delta_std = 0.0;
  double qa_mean = 0.0;
  double qa_std = 0.0;
  std::vector<double> d_delta_per_seed;
  std::vector<double> qa_per_seed;
};

struct SettingRow {
  std::string name;
  std::vector<TierSummary> tiers;
  std::vector<EvalReport> reports;  // one per seed
};

std::vector<TierSummary> summarize(const std::vector<EvalReport>& reports);
double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);

struct Comparison {
  std::vector<int> tiers;
  std::vector<SettingRow> rows;  // blindfold, oracle, standard, finetune, distill
  const SettingRow& row(const std::string& name) const;
};

// Blindfold, oracle, standard, finetune and distill agents on the test split.
// `models` holds one trained set per seed.
Comparison compare_settings(const Dataset& dataset, const std::vector<SeedModels>& models,
                            const ExperimentConfig& config);

struct CurvePoint {
  double x = 0.0;  // marker count or lambda
  std::vector<TierSummary> tiers;
};

struct Curve {
  std::string parameter;  // "markers" or "lambda"
  std::string split;
  std::vector<int> tiers;
  std::vector<CurvePoint> points;
};

// Distillation with each marker count on the test split. A count of 0 is the
// uncalibrated standard agent.
Curve sweep_markers(const Dataset& dataset, const std::vector<SeedModels>& models, const ExperimentConfig& config);

// Distillation with each lambda on the validation split.
Curve sweep_lambda(const Dataset& dataset, const std::vector<SeedModels>& models, const ExperimentConfig& config);

}  // namespace eqa
