#pragma once

#include <cstdint>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/nav_policy.hpp"
#include "eqa/path_oracle.hpp"
#include "eqa/rng.hpp"

namespace eqa {

struct CalibrationConfig {
  int n_markers = 5;
  int min_distance = 4;  // cells; 2 m at 0.5 m per cell
  double lambda = 0.2;
  int epochs = 20;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  int max_placement_attempts = 200;

  void validate() const;
};

// Places `n_markers` distinct marker types on free, unoccupied room cells with
// pairwise geodesic distance >= min_distance, each painted a random color.
// Throws PlacementError when the constraints cannot be met.
GridEnvironment place_markers(const GridEnvironment& env, const CalibrationConfig& config,
                              const std::vector<std::string>& colors, Rng& rng);

struct MarkerEpisode {
  Question question;
  ActionPath path;
};

// One color question per marker and one shortest path from a random start to
// the marker's goal set.
std::vector<MarkerEpisode> gen_marker_questions(const GridEnvironment& augmented, const ObservationSpec& spec, Rng& rng);

struct CalibrationStats {
  std::vector<double> policy_loss;   // per epoch, mean over episodes
  std::vector<double> distill_loss;  // per epoch, mean over episodes
  std::vector<double> accuracy;      // teacher-forced, per epoch
  double first_step_grad_norm = 0.0;
};

// Adapts a copy of `pretrained` on the marker episodes with
// lambda * sum_i (1 - cos(h_i, h_i^teacher)) + (1 - lambda) * CE, where h_i is
// the top core-layer hidden state and the teacher is the frozen pretrained
// model run on identical inputs. One Adam step per episode.
NavModel calibrate_distill(const NavModel& pretrained, const GridEnvironment& augmented,
                           const std::vector<MarkerEpisode>& episodes, const CalibrationConfig& config,
                           const Vocabulary& words, const ObservationSpec& spec, CalibrationStats* stats = nullptr);

// Policy loss only: calibrate_distill with lambda = 0.
NavModel calibrate_finetune(const NavModel& pretrained, const GridEnvironment& augmented,
                            const std::vector<MarkerEpisode>& episodes, const CalibrationConfig& config,
                            const Vocabulary& words, const ObservationSpec& spec, CalibrationStats* stats = nullptr);

// Teacher-forced action accuracy of `model` on marker episodes.
double marker_accuracy(const NavModel& model, const GridEnvironment& augmented,
                       const std::vector<MarkerEpisode>& episodes, const Vocabulary& words,
                       const ObservationSpec& spec);

}  // namespace eqa
