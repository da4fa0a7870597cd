#include "eqa/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "eqa/errors.hpp"
#include "eqa/path_oracle.hpp"
#include "eqa/rng.hpp"

namespace eqa {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!lookup_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw PreconditionError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

int Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  if (it == lookup_.end()) throw PreconditionError("token '" + token + "' is not in the vocabulary");
  return it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

const std::vector<std::string>& marker_types() {
  static const std::vector<std::string> kMarkers = {"mailbox", "safe", "shoes", "tripod", "cloth"};
  return kMarkers;
}

std::vector<std::string> default_object_types() {
  return {"sofa", "table", "bed", "piano", "lamp", "television",
          "plant", "dresser", "fridge", "sink", "oven", "chair"};
}

std::vector<std::string> default_colors() {
  return {"red", "green", "blue", "yellow", "white", "black", "brown", "purple"};
}

std::vector<std::string> default_room_labels() {
  return {"kitchen", "bedroom", "bathroom", "living_room", "office", "dining_room"};
}

namespace {

struct Rect {
  int x0, y0, x1, y1;  // inclusive interior bounds
  int w() const { return x1 - x0 + 1; }
  int h() const { return y1 - y0 + 1; }
  int area() const { return w() * h(); }
};

struct Layout {
  std::vector<Rect> rooms;
  std::set<std::pair<int, int>> doors;
};

// Candidate coordinates for a wall splitting `r` along one axis. A wall may not
// end against an existing door, otherwise that door would be sealed.
std::vector<int> split_candidates(const Rect& r, bool vertical, int min_side, const Layout& layout) {
  std::vector<int> out;
  if (vertical) {
    for (int s = r.x0 + min_side; s <= r.x1 - min_side; ++s) {
      if (layout.doors.count({s, r.y0 - 1}) || layout.doors.count({s, r.y1 + 1})) continue;
      out.push_back(s);
    }
  } else {
    for (int s = r.y0 + min_side; s <= r.y1 - min_side; ++s) {
      if (layout.doors.count({r.x0 - 1, s}) || layout.doors.count({r.x1 + 1, s})) continue;
      out.push_back(s);
    }
  }
  return out;
}

bool partition(GridEnvironment& env, const EnvConfig& config, Rng& rng, Layout& layout) {
  layout.rooms = {{1, 1, env.width() - 2, env.height() - 2}};
  layout.doors.clear();
  for (int y = 1; y < env.height() - 1; ++y)
    for (int x = 1; x < env.width() - 1; ++x) env.at(x, y).terrain = Terrain::Free;

  while (static_cast<int>(layout.rooms.size()) < config.n_rooms) {
    std::vector<std::size_t> order(layout.rooms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return layout.rooms[a].area() > layout.rooms[b].area();
    });
    bool split = false;
    for (std::size_t idx : order) {
      const Rect r = layout.rooms[idx];
      bool vertical = r.w() > r.h() || (r.w() == r.h() && rng.bernoulli(0.5));
      for (int attempt = 0; attempt < 2 && !split; ++attempt, vertical = !vertical) {
        const auto cands = split_candidates(r, vertical, config.min_room_side, layout);
        if (cands.empty()) continue;
        const int s = cands[rng.uniform_index(cands.size())];
        Rect a = r, b = r;
        if (vertical) {
          for (int y = r.y0; y <= r.y1; ++y) env.at(s, y).terrain = Terrain::Wall;
          const int door = rng.uniform_int(r.y0, r.y1);
          env.at(s, door).terrain = Terrain::Free;
          layout.doors.insert({s, door});
          a.x1 = s - 1;
          b.x0 = s + 1;
        } else {
          for (int x = r.x0; x <= r.x1; ++x) env.at(x, s).terrain = Terrain::Wall;
          const int door = rng.uniform_int(r.x0, r.x1);
          env.at(door, s).terrain = Terrain::Free;
          layout.doors.insert({door, s});
          a.y1 = s - 1;
          b.y0 = s + 1;
        }
        layout.rooms[idx] = a;
        layout.rooms.push_back(b);
        split = true;
      }
      if (split) break;
    }
    if (!split) return false;
  }
  return true;
}

}  // namespace

GridEnvironment generate_environment(std::uint64_t seed, const EnvConfig& config, const std::string& env_id) {
  if (config.width < 5 || config.height < 5) throw GenerationError("width/height: environment must be at least 5x5");
  if (config.n_rooms < 1) throw GenerationError("n_rooms: must be at least 1");
  if (config.min_room_side < 1) throw GenerationError("min_room_side: must be at least 1");
  const long interior = static_cast<long>(config.width - 2) * (config.height - 2);
  if (interior < static_cast<long>(config.n_rooms) * config.min_room_side * config.min_room_side)
    throw GenerationError("n_rooms: " + std::to_string(config.n_rooms) + " rooms do not fit in " +
                          std::to_string(config.width) + "x" + std::to_string(config.height));
  if (config.n_objects < 0) throw GenerationError("n_objects: must be non-negative");
  if (config.type_vocab.empty() || config.color_vocab.empty() || config.room_labels.empty())
    throw GenerationError("type_vocab/color_vocab/room_labels: vocabularies must be nonempty");
  if (!config.color_weights.empty() && config.color_weights.size() != config.color_vocab.size())
    throw GenerationError("color_weights: length must match color_vocab");
  if (config.distinct_types && config.n_objects > static_cast<int>(config.type_vocab.size()))
    throw GenerationError("n_objects: distinct_types needs at least as many types as objects");

  Rng rng(seed, {"environment"});
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    GridEnvironment env(config.width, config.height);
    env.env_id = env_id;
    env.seed = seed;
    Layout layout;
    if (!partition(env, config, rng, layout)) continue;

    std::vector<std::string> labels = config.room_labels;
    rng.shuffle(labels);
    for (std::size_t i = 0; i < layout.rooms.size(); ++i) {
      const std::string label = i < labels.size() ? labels[i] : config.room_labels[rng.uniform_index(labels.size())];
      env.rooms().push_back({static_cast<int>(i), label});
      const Rect& r = layout.rooms[i];
      for (int y = r.y0; y <= r.y1; ++y)
        for (int x = r.x0; x <= r.x1; ++x) env.at(x, y).room_id = static_cast<int>(i);
    }

    std::vector<Position> candidates;
    for (int y = 0; y < env.height(); ++y)
      for (int x = 0; x < env.width(); ++x)
        if (env.is_free(x, y) && env.at(x, y).room_id) candidates.push_back({x, y});
    if (config.n_objects > static_cast<int>(candidates.size()))
      throw GenerationError("n_objects: " + std::to_string(config.n_objects) + " objects exceed " +
                            std::to_string(candidates.size()) + " free room cells");
    rng.shuffle(candidates);

    std::vector<std::string> types = config.type_vocab;
    if (config.distinct_types) rng.shuffle(types);
    for (int i = 0; i < config.n_objects; ++i) {
      const std::string type = config.distinct_types ? types[i] : types[rng.uniform_index(types.size())];
      const std::size_t c = config.color_weights.empty() ? rng.uniform_index(config.color_vocab.size())
                                                         : rng.categorical(config.color_weights);
      env.add_object(type, config.color_vocab[c], candidates[i], false);
    }
    if (const auto err = env.validate(); !err.empty()) continue;
    return env;
  }
  throw GenerationError("n_rooms: could not partition into " + std::to_string(config.n_rooms) + " rooms after " +
                        std::to_string(config.max_retries) + " attempts");
}

const char* to_string(QuestionType t) { return t == QuestionType::Color ? "color" : "location"; }

std::vector<std::string> color_question_tokens(const std::string& type_token) {
  return {"what", "color", "is", "the", type_token, "?"};
}

std::vector<std::string> location_question_tokens(const std::string& type_token) {
  return {"what", "room", "is", "the", type_token, "located", "in", "?"};
}

std::vector<std::string> marker_question_tokens(const std::string& marker_type) {
  return {"what", "is", "the", "color", "of", "the", marker_type, "?"};
}

std::vector<Question> generate_questions(const GridEnvironment& env) {
  std::unordered_map<std::string, int> type_count;
  for (const auto& obj : env.objects())
    if (!obj.is_marker) ++type_count[obj.type_token];
  std::vector<Question> out;
  for (const auto& obj : env.objects()) {
    if (obj.is_marker || type_count[obj.type_token] != 1) continue;
    for (QuestionType qt : {QuestionType::Color, QuestionType::Location}) {
      Question q;
      q.qtype = qt;
      q.target_object_id = obj.object_id;
      q.env_id = env.env_id;
      q.tokens = qt == QuestionType::Color ? color_question_tokens(obj.type_token)
                                           : location_question_tokens(obj.type_token);
      q.question_id = env.env_id + "/q" + std::to_string(out.size());
      q.answer_token = ground_truth_answer(env, q);
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::string ground_truth_answer(const GridEnvironment& env, const Question& q) {
  const SceneObject& obj = env.object(q.target_object_id);
  if (q.qtype == QuestionType::Color) return obj.color_token;
  auto label = env.room_label_at(obj.position);
  if (!label) throw DatasetConsistencyError("object " + std::to_string(obj.object_id) + " is not inside a room");
  return *label;
}

const std::vector<EnvRecord>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "'");
}

std::size_t Dataset::question_count(const std::vector<EnvRecord>& records) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.questions.size();
  return n;
}

Vocabulary build_word_vocab(const EnvConfig& config) {
  std::vector<std::string> words = {"what", "color", "is", "the", "room", "located", "in", "of", "?"};
  for (const auto& t : config.type_vocab) words.push_back(t);
  for (const auto& t : marker_types()) words.push_back(t);
  return Vocabulary(std::move(words));
}

Vocabulary build_answer_vocab(const EnvConfig& config) {
  std::vector<std::string> answers = config.color_vocab;
  for (const auto& r : config.room_labels) answers.push_back(r);
  return Vocabulary(std::move(answers));
}

ObservationSpec build_obs_spec(const DatasetConfig& config) {
  std::vector<std::string> types = config.env.type_vocab;
  for (const auto& m : marker_types()) {
    if (std::find(types.begin(), types.end(), m) != types.end())
      throw GenerationError("type_vocab: marker type '" + m + "' is reserved");
    types.push_back(m);
  }
  return ObservationSpec(config.obs_depth, config.obs_width, std::move(types), config.env.color_vocab);
}

std::uint64_t env_seed(std::uint64_t master_seed, const std::string& split, int index) {
  return derive_seed(master_seed, {"env", split, index});
}

Dataset build_dataset(const DatasetConfig& config) {
  if (config.n_train_envs < 1 || config.n_val_envs < 1 || config.n_test_envs < 1)
    throw GenerationError("n_*_envs: every split needs at least one environment");
  Dataset ds;
  ds.config = config;
  ds.words = build_word_vocab(config.env);
  ds.answers = build_answer_vocab(config.env);
  ds.obs_spec = build_obs_spec(config);

  auto make_split = [&](const std::string& name, int count) {
    std::vector<EnvRecord> records;
    for (int i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%03d", name.c_str(), i);
      EnvRecord rec{generate_environment(env_seed(config.master_seed, name, i), config.env, id), {}};
      rec.questions = generate_questions(rec.env);
      for (const auto& q : rec.questions) goal_set(rec.env, q.target_object_id, ds.obs_spec);
      records.push_back(std::move(rec));
    }
    return records;
  };
  ds.train = make_split("train", config.n_train_envs);
  ds.val = make_split("val", config.n_val_envs);
  ds.test = make_split("test", config.n_test_envs);
  return ds;
}

}  // namespace eqa
