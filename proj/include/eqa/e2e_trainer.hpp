#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/nav_policy.hpp"
#include "eqa/qa_model.hpp"

namespace eqa {

// Fraction p(e) of QA samples in epoch e that use frames from a greedy rollout
// instead of the shortest path. Zero during warm start; afterwards either a
// linear ramp to `mix_max` over `ramp_fraction` of the remaining epochs, or a
// constant.
struct TrainSchedule {
  enum class Kind { Ramp, Constant };
  int total_epochs = 12;
  int warm_start_epochs = 3;
  Kind kind = Kind::Ramp;
  double mix_max = 0.5;
  double ramp_fraction = 0.5;

  double mix_at(int epoch) const;
};

struct JointConfig {
  double w_nav = 1.0;
  double w_qa = 1.0;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 1;
  TrainSchedule schedule;
  NavConfig nav;  // vocab_size/obs_dim filled in from the dataset when zero
  QAConfig qa;
};

struct EpochLog {
  int epoch = 0;
  double nav_loss = 0.0;
  double nav_accuracy = 0.0;  // teacher-forced
  double qa_loss = 0.0;
  double qa_accuracy = 0.0;
  double mix = 0.0;
  double val_d_delta = std::numeric_limits<double>::quiet_NaN();
  double val_qa_accuracy = std::numeric_limits<double>::quiet_NaN();
};

// Optional per-epoch validation hook returning (mean d_delta, QA accuracy).
using Validator = std::function<std::pair<double, double>(const NavModel&, const QAModel&, int epoch)>;

struct JointResult {
  NavModel nav;
  QAModel qa;
  std::vector<EpochLog> log;
  double first_batch_nav_loss = 0.0;
};

// Fills model dimensions that depend on the dataset.
NavConfig resolve_nav_config(NavConfig cfg, const Dataset& dataset);
QAConfig resolve_qa_config(QAConfig cfg, const Dataset& dataset);

// Joint imitation + QA training. Each batch accumulates
// w_nav * imitation_loss + w_qa * qa_loss and takes one Adam step on each
// model. Rollouts used for QA frames carry no gradient.
JointResult joint_train(const Dataset& dataset, const JointConfig& config, const Validator& validator = {});

struct NavTrainConfig {
  int epochs = 12;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 1;
  NavConfig model;
};

struct NavTrainResult {
  NavModel model;
  std::vector<EpochLog> curve;
  double first_batch_loss = 0.0;
};

// Teacher-forced imitation of shortest paths.
NavTrainResult train_navigation(const Dataset& dataset, const NavTrainConfig& config);

struct QATrainConfig {
  int epochs = 12;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 1;
  QAConfig model;
};

struct QATrainResult {
  QAModel model;
  std::vector<EpochLog> curve;
  double initial_accuracy = 0.0;
};

// QA on the final five frames of ground-truth shortest paths.
QATrainResult train_qa(const Dataset& dataset, const QATrainConfig& config);

struct EvalOutcome {
  Trajectory trajectory;
  std::string answer;
  Vec distribution;
};

// Greedy rollout, then answer() on the trajectory's last five observations.
EvalOutcome eval_forward(const NavModel& nav, const QAModel& qa, const GridEnvironment& env, const Question& question,
                         const AgentState& spawn, int max_steps, const Vocabulary& words, const Vocabulary& answers,
                         const ObservationSpec& spec);

}  // namespace eqa
