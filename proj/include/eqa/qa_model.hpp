#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eqa/dataset.hpp"
#include "eqa/nav_policy.hpp"
#include "eqa/question_encoder.hpp"

namespace eqa {

inline constexpr int kQAFrames = 5;

struct QAConfig {
  int vocab_size = 0;
  int obs_dim = 0;
  int n_answers = 0;
  int word_dim = 64;
  int question_hidden = 64;
  int question_layers = 2;
  double init_scale = 0.08;
  double forget_bias = 1.0;

  // Frames are projected to the question width so they can be dotted with it.
  int frame_dim() const { return question_hidden; }
  friend bool operator==(const QAConfig&, const QAConfig&) = default;
};

// Scaled dot-product attention of the question vector over five encoded
// frames, followed by a linear answer head on [question; context].
class QAModel {
 public:
  QAModel() = default;
  QAModel(const QAConfig& config, std::uint64_t seed);

  QAConfig config;
  Store store;
  QuestionEncoder question;
  nn::LinearLayer frame_encoder;
  nn::LinearLayer answer_head;
};

// The last five observations, left-padded by repeating the earliest one.
Mat last_frames(const std::vector<const Observation*>& observations);

struct QAForward {
  Mat frames;       // obs_dim x 5
  Mat encoded;      // frame_dim x 5
  Vec qvec;
  Vec weights;      // attention, sums to one
  Vec context;
  Vec logits;
  Vec distribution;
};

QAForward qa_forward(const QAModel& model, const Mat& frames, const Vec& qvec);

// Answer distribution for the given frames and encoded question.
Vec answer(const QAModel& model, const Mat& frames, const Vec& qvec);

Vec encode_question(const QAModel& model, const std::vector<int>& question_ids);

// Cross-entropy of the gold answer.
double qa_loss(const QAModel& model, const Mat& frames, const Vec& qvec, int answer_index);

struct QAStats {
  double loss = 0.0;
  bool correct = false;
};

// Forward/backward through attention, frame encoder and question encoder;
// gradients of weight * loss are accumulated.
QAStats qa_loss_backward(QAModel& model, const Mat& frames, const std::vector<int>& question_ids, int answer_index,
                         double weight);

// Backward from dL/dlogits given a forward pass; returns dL/dqvec.
Vec qa_backward(QAModel& model, const QAForward& fwd, const Vec& dlogits);

// Question-only bag-of-words classifier.
class BlindfoldModel {
 public:
  BlindfoldModel() = default;
  BlindfoldModel(int vocab_size, int n_answers, std::uint64_t seed, double init_scale = 0.08);

  int vocab_size = 0;
  int n_answers = 0;
  Store store;
  nn::LinearLayer classifier;
};

Vec bag_of_words(int vocab_size, const std::vector<int>& question_ids);
Vec blindfold_answer(const BlindfoldModel& model, const std::vector<int>& question_ids);
QAStats blindfold_loss_backward(BlindfoldModel& model, const std::vector<int>& question_ids, int answer_index,
                                double weight);

struct BlindfoldTrainConfig {
  int epochs = 30;
  double lr = 1e-2;
  int batch = 16;
  std::uint64_t seed = 1;
};

struct BlindfoldTrainResult {
  BlindfoldModel model;
  std::vector<double> accuracy_curve;
};

BlindfoldTrainResult train_blindfold(const Dataset& dataset, const BlindfoldTrainConfig& config);

}  // namespace eqa
