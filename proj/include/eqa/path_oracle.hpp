#pragma once

#include <vector>

#include "eqa/grid_env.hpp"
#include "eqa/rng.hpp"

namespace eqa {

// Dense index of an (x, y, heading) state.
inline std::size_t state_index(const GridEnvironment& env, const AgentState& s) {
  return env.index(s.x, s.y) * 4 + static_cast<std::size_t>(s.heading);
}

// States from which a target object is visible.
struct GoalSet {
  int target_object_id = -1;
  std::vector<AgentState> states;   // ascending by state_index
  std::vector<char> member;         // indexed by state_index
  std::vector<Position> positions;  // distinct positions among `states`

  bool contains(const GridEnvironment& env, const AgentState& s) const {
    return member[state_index(env, s)] != 0;
  }
  bool empty() const { return states.empty(); }
};

struct ActionPath {
  AgentState start;
  std::vector<Action> actions;  // never contains Stop
  AgentState end;

  std::size_t size() const { return actions.size(); }
};

GoalSet goal_set(const GridEnvironment& env, int target_object_id, const ObservationSpec& spec);

// Minimal-length action path into the goal set by A* over (x, y, heading) with
// unit action costs and the Manhattan distance to the nearest goal position as
// heuristic. Successors expand Forward, TurnLeft, TurnRight; equal f-scores
// pop in insertion order. Throws UnreachableError.
ActionPath shortest_action_path(const GridEnvironment& env, const AgentState& start, const GoalSet& goal);

// Replays actions from `start`; returns every visited state including start.
std::vector<AgentState> replay(const GridEnvironment& env, const AgentState& start,
                               const std::vector<Action>& actions);

// All valid states of the environment, ascending by state_index.
std::vector<AgentState> all_states(const GridEnvironment& env);

// State exactly `k` shortest-path actions from the goal set. Starts are sampled
// uniformly over valid states; throws EnvTooSmallError after `max_retries`
// starts whose shortest path is shorter than k.
AgentState spawn_at(const GridEnvironment& env, const GoalSet& goal, int k, Rng& rng, int max_retries = 256);

AgentState spawn_at(const GridEnvironment& env, int target_object_id, int k, Rng& rng,
                    const ObservationSpec& spec, int max_retries = 256);

// Uniform random valid state.
AgentState random_state(const GridEnvironment& env, Rng& rng);

}  // namespace eqa
