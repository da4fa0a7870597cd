#pragma once

#include <string>
#include <vector>

#include "eqa/grid_env.hpp"

namespace eqa::io {

struct RenderEpisode {
  const GridEnvironment* env = nullptr;
  int target_object_id = -1;
  AgentState spawn;
  std::vector<Action> actions;  // replayed from spawn
  std::string title;
};

// Top-down character map. Legend: '#' wall, '.' free, 'o' object, 'm' marker,
// '*' target, '+' visited, 'S' spawn, 'E' stop, 'X' spawn and stop together.
// A legend line and the room labels follow the map.
std::string render_ascii(const RenderEpisode& episode);

// Same map as SVG: walls, room tints, objects, target star, trajectory
// polyline, spawn and stop marks.
std::string render_svg(const RenderEpisode& episode, int cell_px = 20);

}  // namespace eqa::io
