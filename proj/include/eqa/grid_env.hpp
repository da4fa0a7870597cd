#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace eqa {

enum class Terrain : std::uint8_t { Wall, Free };

enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

enum class Action : std::uint8_t { Forward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, 3> kMoveActions = {Action::Forward, Action::TurnLeft,
                                                       Action::TurnRight};

const char* to_string(Action a);
const char* to_string(Heading h);
Heading heading_from_char(char c);

// Cell offset of one step along a heading. N decreases y.
inline constexpr std::array<int, 4> kHeadingDx = {0, 1, 0, -1};
inline constexpr std::array<int, 4> kHeadingDy = {-1, 0, 1, 0};

struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
  friend auto operator<=>(const Position&, const Position&) = default;
};

struct AgentState {
  int x = 0;
  int y = 0;
  Heading heading = Heading::N;

  Position position() const { return {x, y}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Cell {
  Terrain terrain = Terrain::Wall;
  std::optional<int> room_id;
  std::optional<int> occupant;  // index into GridEnvironment::objects
};

struct SceneObject {
  int object_id = 0;
  std::string type_token;
  std::string color_token;
  Position position;
  bool is_marker = false;
};

struct Room {
  int room_id = 0;
  std::string label;
};

class GridEnvironment {
 public:
  GridEnvironment() = default;
  GridEnvironment(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool is_free(int x, int y) const { return in_bounds(x, y) && at(x, y).terrain == Terrain::Free; }
  bool is_free(Position p) const { return is_free(p.x, p.y); }

  const Cell& at(int x, int y) const { return cells_[index(x, y)]; }
  Cell& at(int x, int y) { return cells_[index(x, y)]; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  std::size_t cell_count() const { return cells_.size(); }

  const std::vector<SceneObject>& objects() const { return objects_; }
  const std::vector<Room>& rooms() const { return rooms_; }
  std::vector<Room>& rooms() { return rooms_; }

  // Appends an object on a free, unoccupied cell; returns its object_id.
  int add_object(std::string type_token, std::string color_token, Position pos, bool is_marker);
  const SceneObject& object(int object_id) const;
  bool has_object(int object_id) const;
  std::optional<std::string> room_label_at(Position p) const;

  std::string env_id;
  std::uint64_t seed = 0;

  // Checks every structural invariant; returns a description of the first
  // violation, or an empty string when the environment is well formed.
  std::string validate() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Cell> cells_;
  std::vector<SceneObject> objects_;
  std::vector<Room> rooms_;
};

bool is_valid_state(const GridEnvironment& env, const AgentState& state);

// Deterministic transition. Forward into a wall or the border is a no-op.
AgentState step(const GridEnvironment& env, const AgentState& state, Action action);

Heading turn_left(Heading h);
Heading turn_right(Heading h);

// Egocentric observation layout and the object vocabularies used for one-hot
// codes. The window has `depth` rows (row 0 is the agent's own row) and `width`
// columns centred on the agent.
struct ObservationSpec {
  int depth = 5;
  int width = 5;
  std::vector<std::string> type_tokens;
  std::vector<std::string> color_tokens;

  ObservationSpec() = default;
  ObservationSpec(int depth, int width, std::vector<std::string> types, std::vector<std::string> colors);

  int codes_per_cell() const { return 3 + static_cast<int>(type_tokens.size() + color_tokens.size()); }
  int feature_dim() const { return depth * width * codes_per_cell(); }
  int type_index(const std::string& token) const;
  int color_index(const std::string& token) const;

 private:
  std::unordered_map<std::string, int> type_lookup_;
  std::unordered_map<std::string, int> color_lookup_;
};

enum class CellCode : std::uint8_t { Wall = 0, Free = 1, Unknown = 2 };

struct Observation {
  int depth = 0;
  int width = 0;
  std::vector<CellCode> codes;   // row-major, depth x width
  std::vector<int> object_at;    // object_id or -1; -1 when not visible
  Eigen::VectorXd features;      // flattened {0,1} codes

  CellCode code(int row, int col) const { return codes[static_cast<std::size_t>(row) * width + col]; }
};

// World cell under window entry (row, col) for an agent in `state`.
Position window_cell(const AgentState& state, int row, int col, int window_width);

Observation observe(const GridEnvironment& env, const AgentState& state, const ObservationSpec& spec);

// Object ids in the window that are not occluded, ascending.
std::vector<int> visible_objects(const GridEnvironment& env, const AgentState& state,
                                 const ObservationSpec& spec);

// Same visibility rule as observe(), for a single world position.
bool is_position_visible(const GridEnvironment& env, const AgentState& state, Position target,
                         const ObservationSpec& spec);

inline constexpr int kUnreachable = -1;

// BFS distances over free 4-connected cells from `source`; kUnreachable for
// cells that cannot be reached (and for walls).
std::vector<int> distance_field(const GridEnvironment& env, Position source);

// Shortest free-cell path length; throws UnreachableError.
int geodesic_distance(const GridEnvironment& env, Position a, Position b);

// Metric scale used for reporting distances.
inline constexpr double kMetersPerCell = 0.5;

}  // namespace eqa
