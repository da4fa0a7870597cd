#pragma once

// Shared test fixtures and independent reference implementations. The
// oracles here deliberately avoid calling the library's dynamics, visibility
// and search code so that agreement is meaningful.

#include <array>
#include <deque>
#include <string>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/grid_env.hpp"
#include "eqa/path_oracle.hpp"

namespace testutil {

using namespace eqa;

// '#' wall, '.' free, digits are free cells in that room id, letters place an
// object (type "t<letter>", color "red") on a free cell of room 0.
inline GridEnvironment grid_from_rows(const std::vector<std::string>& rows, const std::string& env_id = "fixture") {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  GridEnvironment env(w, h);
  env.env_id = env_id;
  int max_room = -1;
  std::vector<std::pair<char, Position>> objects;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const char ch = rows[y][x];
      Cell& c = env.at(x, y);
      if (ch == '#') continue;
      c.terrain = Terrain::Free;
      if (ch >= '0' && ch <= '9') {
        c.room_id = ch - '0';
        max_room = std::max(max_room, ch - '0');
      } else {
        c.room_id = 0;
        max_room = std::max(max_room, 0);
        if (ch != '.') objects.push_back({ch, {x, y}});
      }
    }
  for (int r = 0; r <= max_room; ++r) env.rooms().push_back({r, "room" + std::to_string(r)});
  for (const auto& [ch, p] : objects) env.add_object(std::string("t") + ch, "red", p, false);
  return env;
}

inline ObservationSpec spec_for(const GridEnvironment& env, int depth = 5, int width = 5) {
  std::vector<std::string> types;
  for (const auto& o : env.objects())
    if (std::find(types.begin(), types.end(), o.type_token) == types.end()) types.push_back(o.type_token);
  for (const auto& m : marker_types()) types.push_back(m);
  return ObservationSpec(depth, width, types, default_colors());
}

// --- independent dynamics ---------------------------------------------------

inline constexpr std::array<int, 4> kDx = {0, 1, 0, -1};  // N E S W
inline constexpr std::array<int, 4> kDy = {-1, 0, 1, 0};

inline bool free_cell(const GridEnvironment& env, int x, int y) {
  return x >= 0 && y >= 0 && x < env.width() && y < env.height() && env.at(x, y).terrain == Terrain::Free;
}

inline AgentState ref_step(const GridEnvironment& env, AgentState s, int action) {
  const int h = static_cast<int>(s.heading);
  if (action == 0) {
    if (free_cell(env, s.x + kDx[h], s.y + kDy[h])) {
      s.x += kDx[h];
      s.y += kDy[h];
    }
  } else if (action == 1) {
    s.heading = static_cast<Heading>((h + 3) % 4);
  } else if (action == 2) {
    s.heading = static_cast<Heading>((h + 1) % 4);
  }
  return s;
}

// Visibility by explicit ray walk: the target must lie in the depth x width
// window ahead of the agent and every cell between the agent's row and the
// target along that column must be free (out of bounds counts as wall).
inline bool ref_visible(const GridEnvironment& env, const AgentState& s, Position t, int depth, int width) {
  const int h = static_cast<int>(s.heading);
  const int r = (h + 1) % 4;
  for (int row = 0; row < depth; ++row)
    for (int col = 0; col < width; ++col) {
      const int lat = col - width / 2;
      const int x = s.x + row * kDx[h] + lat * kDx[r];
      const int y = s.y + row * kDy[h] + lat * kDy[r];
      if (x != t.x || y != t.y) continue;
      for (int k = 0; k <= row; ++k) {
        const int cx = s.x + k * kDx[h] + lat * kDx[r];
        const int cy = s.y + k * kDy[h] + lat * kDy[r];
        if (!free_cell(env, cx, cy)) return false;
      }
      return true;
    }
  return false;
}

inline std::size_t ref_index(const GridEnvironment& env, const AgentState& s) {
  return (static_cast<std::size_t>(s.y) * env.width() + s.x) * 4 + static_cast<std::size_t>(s.heading);
}

// Breadth-first search over the full (x, y, heading) graph to the nearest
// state from which `target` is visible. Returns -1 when unreachable.
inline int ref_bfs_length(const GridEnvironment& env, const AgentState& start, Position target, int depth = 5,
                          int width = 5) {
  std::vector<int> dist(env.cell_count() * 4, -1);
  std::deque<AgentState> q{start};
  dist[ref_index(env, start)] = 0;
  while (!q.empty()) {
    const AgentState s = q.front();
    q.pop_front();
    if (ref_visible(env, s, target, depth, width)) return dist[ref_index(env, s)];
    for (int a = 0; a < 3; ++a) {
      const AgentState n = ref_step(env, s, a);
      auto& d = dist[ref_index(env, n)];
      if (d >= 0) continue;
      d = dist[ref_index(env, s)] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

// 4-connected BFS distance between free cells, -1 when unreachable.
inline int ref_geodesic(const GridEnvironment& env, Position a, Position b) {
  std::vector<int> dist(env.cell_count(), -1);
  std::deque<Position> q{a};
  dist[static_cast<std::size_t>(a.y) * env.width() + a.x] = 0;
  while (!q.empty()) {
    const Position p = q.front();
    q.pop_front();
    if (p.x == b.x && p.y == b.y) return dist[static_cast<std::size_t>(p.y) * env.width() + p.x];
    for (int h = 0; h < 4; ++h) {
      const int nx = p.x + kDx[h], ny = p.y + kDy[h];
      if (!free_cell(env, nx, ny)) continue;
      auto& d = dist[static_cast<std::size_t>(ny) * env.width() + nx];
      if (d >= 0) continue;
      d = dist[static_cast<std::size_t>(p.y) * env.width() + p.x] + 1;
      q.push_back({nx, ny});
    }
  }
  return -1;
}

inline EnvConfig small_env_config(int size = 11) {
  EnvConfig c;
  c.width = size;
  c.height = size;
  c.n_rooms = 2;
  c.n_objects = 4;
  return c;
}

inline DatasetConfig tiny_dataset_config() {
  DatasetConfig c;
  c.n_train_envs = 3;
  c.n_val_envs = 2;
  c.n_test_envs = 2;
  c.master_seed = 11;
  c.env.width = 15;
  c.env.height = 15;
  c.env.n_rooms = 2;
  c.env.n_objects = 6;
  return c;
}

}  // namespace testutil
