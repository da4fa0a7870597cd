#include "eqa/path_oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <queue>
#include <tuple>

#include "eqa/errors.hpp"

namespace eqa {

std::vector<AgentState> all_states(const GridEnvironment& env) {
  std::vector<AgentState> states;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x)
      if (env.is_free(x, y))
        for (int h = 0; h < 4; ++h) states.push_back({x, y, static_cast<Heading>(h)});
  return states;
}

GoalSet goal_set(const GridEnvironment& env, int target_object_id, const ObservationSpec& spec) {
  if (!env.has_object(target_object_id))
    throw PreconditionError("goal_set: unknown object id " + std::to_string(target_object_id));
  const Position target = env.object(target_object_id).position;
  GoalSet goal;
  goal.target_object_id = target_object_id;
  goal.member.assign(env.cell_count() * 4, 0);
  std::vector<char> seen_pos(env.cell_count(), 0);
  for (const AgentState& s : all_states(env)) {
    if (!is_position_visible(env, s, target, spec)) continue;
    goal.states.push_back(s);
    goal.member[state_index(env, s)] = 1;
    auto& seen = seen_pos[env.index(s.x, s.y)];
    if (!seen) {
      seen = 1;
      goal.positions.push_back(s.position());
    }
  }
  if (goal.empty())
    throw DatasetConsistencyError("target object " + std::to_string(target_object_id) +
                                  " is not visible from any state");
  return goal;
}

std::vector<AgentState> replay(const GridEnvironment& env, const AgentState& start,
                               const std::vector<Action>& actions) {
  std::vector<AgentState> states{start};
  states.reserve(actions.size() + 1);
  for (Action a : actions) states.push_back(step(env, states.back(), a));
  return states;
}

ActionPath shortest_action_path(const GridEnvironment& env, const AgentState& start, const GoalSet& goal) {
  if (!is_valid_state(env, start)) throw PreconditionError("shortest_action_path: invalid start state");
  if (goal.empty()) throw PreconditionError("shortest_action_path: empty goal set");

  // Heuristic per cell: Manhattan distance to the nearest goal position.
  std::vector<int> heuristic(env.cell_count(), std::numeric_limits<int>::max());
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) {
      if (!env.is_free(x, y)) continue;
      int best = std::numeric_limits<int>::max();
      for (const Position& p : goal.positions) best = std::min(best, std::abs(p.x - x) + std::abs(p.y - y));
      heuristic[env.index(x, y)] = best;
    }

  const std::size_t n = env.cell_count() * 4;
  constexpr int kUnset = -1;
  std::vector<int> g_score(n, kUnset);
  std::vector<std::size_t> parent(n, 0);
  std::vector<Action> parent_action(n, Action::Stop);
  std::vector<char> closed(n, 0);

  // (f, insertion order, state index); min-heap.
  using Entry = std::tuple<int, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;

  auto decode = [&](std::size_t idx) {
    const auto cell = idx / 4;
    return AgentState{static_cast<int>(cell % env.width()), static_cast<int>(cell / env.width()),
                      static_cast<Heading>(idx % 4)};
  };

  const std::size_t start_idx = state_index(env, start);
  g_score[start_idx] = 0;
  open.emplace(heuristic[env.index(start.x, start.y)], counter++, start_idx);

  while (!open.empty()) {
    const auto [f, order, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    const AgentState s = decode(idx);
    if (goal.member[idx]) {
      ActionPath path;
      path.start = start;
      path.end = s;
      for (std::size_t cur = idx; cur != start_idx; cur = parent[cur]) path.actions.push_back(parent_action[cur]);
      std::reverse(path.actions.begin(), path.actions.end());
      return path;
    }
    for (Action a : kMoveActions) {
      const AgentState t = step(env, s, a);
      if (t == s) continue;
      const std::size_t tidx = state_index(env, t);
      if (closed[tidx]) continue;
      const int g = g_score[idx] + 1;
      if (g_score[tidx] != kUnset && g_score[tidx] <= g) continue;
      g_score[tidx] = g;
      parent[tidx] = idx;
      parent_action[tidx] = a;
      open.emplace(g + heuristic[env.index(t.x, t.y)], counter++, tidx);
    }
  }
  throw UnreachableError("no goal state reachable from start");
}

AgentState random_state(const GridEnvironment& env, Rng& rng) {
  std::vector<Position> free;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x)
      if (env.is_free(x, y)) free.push_back({x, y});
  if (free.empty()) throw PreconditionError("environment has no free cells");
  const Position p = free[rng.uniform_index(free.size())];
  return {p.x, p.y, static_cast<Heading>(rng.uniform_index(4))};
}

AgentState spawn_at(const GridEnvironment& env, const GoalSet& goal, int k, Rng& rng, int max_retries) {
  if (k < 0) throw PreconditionError("spawn_at: k must be non-negative");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const AgentState start = random_state(env, rng);
    const ActionPath path = shortest_action_path(env, start, goal);
    const int len = static_cast<int>(path.size());
    if (len < k) continue;
    const std::vector<Action> prefix(path.actions.begin(), path.actions.begin() + (len - k));
    const AgentState spawn = replay(env, start, prefix).back();
    const auto check = shortest_action_path(env, spawn, goal);
    if (static_cast<int>(check.size()) != k)
      throw std::logic_error("spawn_at: truncated shortest path is not optimal");
    return spawn;
  }
  throw EnvTooSmallError("no start admits a shortest path of " + std::to_string(k) + " actions");
}

AgentState spawn_at(const GridEnvironment& env, int target_object_id, int k, Rng& rng,
                    const ObservationSpec& spec, int max_retries) {
  return spawn_at(env, goal_set(env, target_object_id, spec), k, rng, max_retries);
}

}  // namespace eqa
