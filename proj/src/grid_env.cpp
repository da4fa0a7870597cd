#include "eqa/grid_env.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "eqa/errors.hpp"

namespace eqa {

const char* to_string(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::TurnLeft: return "left";
    case Action::TurnRight: return "right";
    case Action::Stop: return "stop";
  }
  return "?";
}

const char* to_string(Heading h) {
  static constexpr const char* kNames[] = {"N", "E", "S", "W"};
  return kNames[static_cast<int>(h)];
}

Heading heading_from_char(char c) {
  switch (c) {
    case 'N': return Heading::N;
    case 'E': return Heading::E;
    case 'S': return Heading::S;
    case 'W': return Heading::W;
    default: throw FormatError(std::string("bad heading '") + c + "'");
  }
}

GridEnvironment::GridEnvironment(int width, int height)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height) {
  if (width <= 0 || height <= 0) throw PreconditionError("environment dimensions must be positive");
}

int GridEnvironment::add_object(std::string type_token, std::string color_token, Position pos,
                                bool is_marker) {
  if (!is_free(pos)) throw PreconditionError("object must be placed on a free cell");
  Cell& cell = at(pos.x, pos.y);
  if (cell.occupant) throw PreconditionError("cell already holds an object");
  const int id = static_cast<int>(objects_.size());
  objects_.push_back({id, std::move(type_token), std::move(color_token), pos, is_marker});
  cell.occupant = id;
  return id;
}

bool GridEnvironment::has_object(int object_id) const {
  return object_id >= 0 && object_id < static_cast<int>(objects_.size());
}

const SceneObject& GridEnvironment::object(int object_id) const {
  if (!has_object(object_id)) throw PreconditionError("unknown object id " + std::to_string(object_id));
  return objects_[object_id];
}

std::optional<std::string> GridEnvironment::room_label_at(Position p) const {
  if (!in_bounds(p.x, p.y)) return std::nullopt;
  const auto& room = at(p.x, p.y).room_id;
  if (!room) return std::nullopt;
  for (const auto& r : rooms_)
    if (r.room_id == *room) return r.label;
  return std::nullopt;
}

std::string GridEnvironment::validate() const {
  std::ostringstream err;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Cell& c = at(x, y);
      const bool border = x == 0 || y == 0 || x == width_ - 1 || y == height_ - 1;
      if (border && c.terrain != Terrain::Wall) {
        err << "border cell (" << x << "," << y << ") is not a wall";
        return err.str();
      }
      if (c.terrain == Terrain::Wall && (c.room_id || c.occupant)) {
        err << "wall cell (" << x << "," << y << ") carries a room or occupant";
        return err.str();
      }
    }
  }
  for (const auto& obj : objects_) {
    if (!is_free(obj.position)) return "object " + std::to_string(obj.object_id) + " is not on a free cell";
    const auto& occ = at(obj.position.x, obj.position.y).occupant;
    if (!occ || *occ != obj.object_id)
      return "object " + std::to_string(obj.object_id) + " does not own its cell";
  }
  // Single connected component of free cells.
  std::size_t free_count = 0;
  std::optional<Position> first;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (is_free(x, y)) {
        ++free_count;
        if (!first) first = Position{x, y};
      }
  if (first) {
    const auto dist = distance_field(*this, *first);
    const auto reached = static_cast<std::size_t>(
        std::count_if(dist.begin(), dist.end(), [](int d) { return d != kUnreachable; }));
    if (reached != free_count) return "free cells are not connected";
  }
  return {};
}

bool is_valid_state(const GridEnvironment& env, const AgentState& state) {
  return env.is_free(state.x, state.y);
}

Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

AgentState step(const GridEnvironment& env, const AgentState& state, Action action) {
  if (!is_valid_state(env, state)) throw PreconditionError("agent state is not on a free cell");
  AgentState next = state;
  switch (action) {
    case Action::Forward: {
      const int h = static_cast<int>(state.heading);
      const int nx = state.x + kHeadingDx[h];
      const int ny = state.y + kHeadingDy[h];
      if (env.is_free(nx, ny)) {
        next.x = nx;
        next.y = ny;
      }
      break;
    }
    case Action::TurnLeft: next.heading = turn_left(state.heading); break;
    case Action::TurnRight: next.heading = turn_right(state.heading); break;
    case Action::Stop: break;
  }
  return next;
}

ObservationSpec::ObservationSpec(int depth, int width, std::vector<std::string> types,
                                 std::vector<std::string> colors)
    : depth(depth), width(width), type_tokens(std::move(types)), color_tokens(std::move(colors)) {
  if (depth <= 0 || width <= 0 || width % 2 == 0)
    throw PreconditionError("observation window needs positive depth and odd width");
  for (std::size_t i = 0; i < type_tokens.size(); ++i) type_lookup_.emplace(type_tokens[i], static_cast<int>(i));
  for (std::size_t i = 0; i < color_tokens.size(); ++i) color_lookup_.emplace(color_tokens[i], static_cast<int>(i));
}

int ObservationSpec::type_index(const std::string& token) const {
  auto it = type_lookup_.find(token);
  if (it == type_lookup_.end()) throw PreconditionError("object type '" + token + "' not in observation vocabulary");
  return it->second;
}

int ObservationSpec::color_index(const std::string& token) const {
  auto it = color_lookup_.find(token);
  if (it == color_lookup_.end()) throw PreconditionError("color '" + token + "' not in observation vocabulary");
  return it->second;
}

Position window_cell(const AgentState& state, int row, int col, int window_width) {
  const int h = static_cast<int>(state.heading);
  const int r = (h + 1) % 4;
  const int lateral = col - window_width / 2;
  return {state.x + row * kHeadingDx[h] + lateral * kHeadingDx[r],
          state.y + row * kHeadingDy[h] + lateral * kHeadingDy[r]};
}

Observation observe(const GridEnvironment& env, const AgentState& state, const ObservationSpec& spec) {
  if (!is_valid_state(env, state)) throw PreconditionError("agent state is not on a free cell");
  Observation obs;
  obs.depth = spec.depth;
  obs.width = spec.width;
  const std::size_t n = static_cast<std::size_t>(spec.depth) * spec.width;
  obs.codes.assign(n, CellCode::Unknown);
  obs.object_at.assign(n, -1);
  const int per_cell = spec.codes_per_cell();
  const int n_types = static_cast<int>(spec.type_tokens.size());
  obs.features = Eigen::VectorXd::Zero(spec.feature_dim());

  for (int col = 0; col < spec.width; ++col) {
    bool blocked = false;
    for (int row = 0; row < spec.depth; ++row) {
      const std::size_t idx = static_cast<std::size_t>(row) * spec.width + col;
      CellCode code = CellCode::Unknown;
      if (!blocked) {
        const Position p = window_cell(state, row, col, spec.width);
        if (env.is_free(p)) {
          code = CellCode::Free;
          if (const auto& occ = env.at(p.x, p.y).occupant) {
            const SceneObject& obj = env.objects()[*occ];
            obs.object_at[idx] = obj.object_id;
            const int base = static_cast<int>(idx) * per_cell;
            obs.features[base + 3 + spec.type_index(obj.type_token)] = 1.0;
            obs.features[base + 3 + n_types + spec.color_index(obj.color_token)] = 1.0;
          }
        } else {
          code = CellCode::Wall;
          blocked = true;
        }
      }
      obs.codes[idx] = code;
      obs.features[static_cast<int>(idx) * per_cell + static_cast<int>(code)] = 1.0;
    }
  }
  return obs;
}

std::vector<int> visible_objects(const GridEnvironment& env, const AgentState& state,
                                 const ObservationSpec& spec) {
  std::vector<int> ids;
  for (const auto& obj : env.objects())
    if (is_position_visible(env, state, obj.position, spec)) ids.push_back(obj.object_id);
  return ids;
}

bool is_position_visible(const GridEnvironment& env, const AgentState& state, Position target,
                         const ObservationSpec& spec) {
  const int h = static_cast<int>(state.heading);
  const int r = (h + 1) % 4;
  const int dx = target.x - state.x;
  const int dy = target.y - state.y;
  const int row = dx * kHeadingDx[h] + dy * kHeadingDy[h];
  const int lateral = dx * kHeadingDx[r] + dy * kHeadingDy[r];
  const int col = lateral + spec.width / 2;
  if (row < 0 || row >= spec.depth || col < 0 || col >= spec.width) return false;
  for (int k = 0; k < row; ++k)
    if (!env.is_free(window_cell(state, k, col, spec.width))) return false;
  return env.is_free(target);
}

std::vector<int> distance_field(const GridEnvironment& env, Position source) {
  std::vector<int> dist(env.cell_count(), kUnreachable);
  if (!env.is_free(source)) return dist;
  std::deque<Position> queue{source};
  dist[env.index(source.x, source.y)] = 0;
  while (!queue.empty()) {
    const Position p = queue.front();
    queue.pop_front();
    const int d = dist[env.index(p.x, p.y)];
    for (int h = 0; h < 4; ++h) {
      const Position q{p.x + kHeadingDx[h], p.y + kHeadingDy[h]};
      if (!env.is_free(q)) continue;
      int& dq = dist[env.index(q.x, q.y)];
      if (dq != kUnreachable) continue;
      dq = d + 1;
      queue.push_back(q);
    }
  }
  return dist;
}

int geodesic_distance(const GridEnvironment& env, Position a, Position b) {
  if (!env.is_free(a) || !env.is_free(b)) throw PreconditionError("geodesic endpoints must be free cells");
  if (a == b) return 0;
  const auto dist = distance_field(env, a);
  const int d = dist[env.index(b.x, b.y)];
  if (d == kUnreachable) throw UnreachableError("no free path between the two positions");
  return d;
}

}  // namespace eqa
