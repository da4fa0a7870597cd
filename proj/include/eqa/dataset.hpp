#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqa/grid_env.hpp"

namespace eqa {

// Closed token vocabulary with stable indices.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int index(const std::string& token) const;  // throws PreconditionError
  bool contains(const std::string& token) const { return lookup_.count(token) != 0; }
  const std::string& token(int index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> lookup_;
};

// Reserved marker object types; disjoint from the question object types.
const std::vector<std::string>& marker_types();

std::vector<std::string> default_object_types();
std::vector<std::string> default_colors();
std::vector<std::string> default_room_labels();

struct EnvConfig {
  int width = 25;
  int height = 25;
  int n_rooms = 4;
  int n_objects = 10;
  int min_room_side = 3;
  std::vector<std::string> type_vocab = default_object_types();
  std::vector<std::string> color_vocab = default_colors();
  std::vector<std::string> room_labels = default_room_labels();
  // Sampling weights over color_vocab; empty means uniform.
  std::vector<double> color_weights;
  // Draw object types without replacement (requires n_objects <= |types|).
  bool distinct_types = false;
  int max_retries = 64;
};

GridEnvironment generate_environment(std::uint64_t seed, const EnvConfig& config,
                                     const std::string& env_id = "env");

enum class QuestionType { Color, Location };

const char* to_string(QuestionType t);

struct Question {
  std::string question_id;
  std::vector<std::string> tokens;
  QuestionType qtype = QuestionType::Color;
  int target_object_id = -1;
  std::string answer_token;
  std::string env_id;
};

std::vector<std::string> color_question_tokens(const std::string& type_token);
std::vector<std::string> location_question_tokens(const std::string& type_token);
std::vector<std::string> marker_question_tokens(const std::string& marker_type);

// One color and one location question per object whose type is unique in the
// environment. Markers are never asked about here.
std::vector<Question> generate_questions(const GridEnvironment& env);

// Evaluates a question template against the environment's ground truth.
std::string ground_truth_answer(const GridEnvironment& env, const Question& q);

struct EnvRecord {
  GridEnvironment env;
  std::vector<Question> questions;
};

struct DatasetConfig {
  int n_train_envs = 60;
  int n_val_envs = 10;
  int n_test_envs = 10;
  std::uint64_t master_seed = 2024;
  int obs_depth = 5;
  int obs_width = 5;
  EnvConfig env;
};

struct Dataset {
  DatasetConfig config;
  std::vector<EnvRecord> train;
  std::vector<EnvRecord> val;
  std::vector<EnvRecord> test;
  Vocabulary words;
  Vocabulary answers;
  ObservationSpec obs_spec;

  const std::vector<EnvRecord>& split(const std::string& name) const;
  std::size_t question_count(const std::vector<EnvRecord>& records) const;
};

// Word vocabulary: template words, object types, marker types.
Vocabulary build_word_vocab(const EnvConfig& config);
// Answer vocabulary: colors followed by room labels.
Vocabulary build_answer_vocab(const EnvConfig& config);
// Observation one-hots cover question object types plus marker types.
ObservationSpec build_obs_spec(const DatasetConfig& config);

std::uint64_t env_seed(std::uint64_t master_seed, const std::string& split, int index);

Dataset build_dataset(const DatasetConfig& config);

}  // namespace eqa
