#pragma once

#include <cstdint>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/grid_env.hpp"
#include "eqa/nn/optim.hpp"
#include "eqa/path_oracle.hpp"
#include "eqa/question_encoder.hpp"

namespace eqa {

// Reserved previous-action index for the first step of an episode.
inline constexpr int kStartToken = kNumActions;

struct NavConfig {
  int vocab_size = 0;
  int obs_dim = 0;
  int word_dim = 64;
  int question_hidden = 64;
  int question_layers = 2;
  int obs_embed = 64;
  int action_embed = 16;
  int hidden = 128;
  int layers = 2;
  double init_scale = 0.08;
  double forget_bias = 1.0;

  int core_input() const { return obs_embed + question_hidden + action_embed; }
  friend bool operator==(const NavConfig&, const NavConfig&) = default;
};

// Navigation policy: question encoder, linear observation encoder, action
// embedding, stacked LSTM core, linear action head over the four actions.
class NavModel {
 public:
  NavModel() = default;
  NavModel(const NavConfig& config, std::uint64_t seed);

  NavConfig config;
  Store store;
  QuestionEncoder question;
  nn::LinearLayer obs_encoder;
  nn::EmbeddingLayer action_embedding;  // kNumActions + 1 rows
  nn::LstmStack core;
  nn::LinearLayer head;
};

// Teacher-forced supervision for one shortest path: T = |path| + 1 steps with a
// final Stop label.
struct NavEpisode {
  std::vector<int> question_ids;
  Mat observations;               // obs_dim x T
  std::vector<int> prev_actions;  // T entries, kStartToken first
  std::vector<int> labels;        // T entries, Stop last

  int length() const { return static_cast<int>(labels.size()); }
};

NavEpisode make_nav_episode(const GridEnvironment& env, const std::vector<int>& question_ids, const ActionPath& path,
                            const ObservationSpec& spec);

Vec encode_question(const NavModel& model, const std::vector<int>& question_ids);

struct NavStepOutput {
  Vec logits;
  nn::LstmState<double> hidden;
};

nn::LstmState<double> initial_hidden(const NavModel& model);

NavStepOutput nav_step(const NavModel& model, const Vec& obs_features, const Vec& qvec, int prev_action,
                       const nn::LstmState<double>& hidden);

// Full teacher-forced forward pass, retained for backpropagation.
struct NavTrace {
  QuestionTrace question;
  Vec qvec;
  Mat core_input;  // core_input() x T
  nn::LstmTrace<double> core;
  Mat logits;      // 4 x T

  const Mat& top_hidden() const { return core.top_h(); }
};

NavTrace nav_forward(const NavModel& model, const NavEpisode& episode);

// Accumulates parameter gradients given dL/dlogits and, optionally, an extra
// gradient on the top-layer hidden states (H x T).
void nav_backward(NavModel& model, const NavEpisode& episode, const NavTrace& trace, const Mat& dlogits,
                  const Mat* dh_top_extra = nullptr);

struct StepStats {
  double loss = 0.0;  // mean per-step cross-entropy
  int correct = 0;
  int steps = 0;
};

StepStats imitation_loss(const NavModel& model, const NavEpisode& episode);

// Forward and backward; gradients of weight * loss are accumulated.
StepStats imitation_loss_backward(NavModel& model, const NavEpisode& episode, double weight);

enum class Termination { Stop, MaxSteps };

struct TrajectoryStep {
  Observation observation;  // seen before taking `action`
  Action action = Action::Forward;
  AgentState state_after;
};

struct Trajectory {
  AgentState spawn;
  std::vector<TrajectoryStep> steps;
  Observation final_observation;
  Termination terminated_by = Termination::MaxSteps;

  AgentState stop_state() const { return steps.empty() ? spawn : steps.back().state_after; }
  std::vector<Action> actions() const;
  // Observations at every visited state, spawn first.
  std::vector<const Observation*> observations() const;
};

// Greedy decoding until Stop or max_steps.
Trajectory rollout(const NavModel& model, const GridEnvironment& env, const std::vector<int>& question_ids,
                   const AgentState& spawn, int max_steps, const ObservationSpec& spec);

}  // namespace eqa
