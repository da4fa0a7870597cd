#include "eqa/training_data.hpp"

#include <algorithm>

#include "eqa/errors.hpp"
#include "eqa/rng.hpp"

namespace eqa {

std::vector<QuestionRef> all_questions(const std::vector<EnvRecord>& records) {
  std::vector<QuestionRef> refs;
  for (std::size_t e = 0; e < records.size(); ++e)
    for (std::size_t q = 0; q < records[e].questions.size(); ++q) refs.push_back({e, q});
  return refs;
}

GoalCache::GoalCache(const std::vector<EnvRecord>& records, const ObservationSpec& spec) {
  for (std::size_t e = 0; e < records.size(); ++e)
    for (const auto& q : records[e].questions) {
      const auto key = std::make_pair(e, q.target_object_id);
      if (!goals_.count(key)) goals_.emplace(key, goal_set(records[e].env, q.target_object_id, spec));
    }
}

const GoalSet& GoalCache::get(std::size_t env, int object_id) const {
  auto it = goals_.find({env, object_id});
  if (it == goals_.end()) throw PreconditionError("GoalCache: no goal set for requested target");
  return it->second;
}

std::vector<TrainItem> sample_epoch(const std::vector<EnvRecord>& records, const GoalCache& goals,
                                    std::uint64_t seed, int epoch) {
  auto refs = all_questions(records);
  std::vector<TrainItem> items;
  items.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& rec = records[refs[i].env];
    const auto& q = rec.questions[refs[i].question];
    Rng rng(seed, {"train-start", epoch, static_cast<std::uint64_t>(i)});
    const AgentState start = random_state(rec.env, rng);
    items.push_back({refs[i], shortest_action_path(rec.env, start, goals.get(refs[i].env, q.target_object_id))});
  }
  Rng shuffle_rng(seed, {"train-shuffle", epoch});
  shuffle_rng.shuffle(items);
  return items;
}

int max_steps_for(int k) { return std::min(2 * k + 20, 120); }

}  // namespace eqa
