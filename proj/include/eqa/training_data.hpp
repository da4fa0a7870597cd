#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/path_oracle.hpp"

namespace eqa {

struct QuestionRef {
  std::size_t env = 0;
  std::size_t question = 0;
};

std::vector<QuestionRef> all_questions(const std::vector<EnvRecord>& records);

// Goal sets for every (environment, target object) pair referenced by the
// records' questions, computed once.
class GoalCache {
 public:
  GoalCache(const std::vector<EnvRecord>& records, const ObservationSpec& spec);
  const GoalSet& get(std::size_t env, int object_id) const;

 private:
  std::map<std::pair<std::size_t, int>, GoalSet> goals_;
};

// One supervised episode: a random start and its shortest path to the goal.
struct TrainItem {
  QuestionRef ref;
  ActionPath path;
};

// Every question once per epoch, in a shuffled order. Starts are drawn from a
// stream keyed by (seed, epoch, question position), so the same seed yields
// the same items regardless of which modules consume them.
std::vector<TrainItem> sample_epoch(const std::vector<EnvRecord>& records, const GoalCache& goals,
                                    std::uint64_t seed, int epoch);

// Episode step budget: 2k + 20 capped at 120.
int max_steps_for(int k);

}  // namespace eqa
