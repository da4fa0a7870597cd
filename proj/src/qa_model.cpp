#include "eqa/qa_model.hpp"

#include <cmath>

#include "eqa/nn/losses.hpp"
#include "eqa/nn/optim.hpp"

namespace eqa {

QAModel::QAModel(const QAConfig& cfg, std::uint64_t seed) : config(cfg) {
  if (cfg.vocab_size <= 0 || cfg.obs_dim <= 0 || cfg.n_answers <= 0)
    throw ShapeError("QAModel: vocab_size, obs_dim and n_answers must be set");
  question = add_question_encoder(store, "qa.question", cfg.vocab_size, cfg.word_dim, cfg.question_hidden,
                                  cfg.question_layers);
  frame_encoder = nn::add_linear(store, "qa.frame_encoder", cfg.obs_dim, cfg.frame_dim());
  answer_head = nn::add_linear(store, "qa.answer_head", cfg.question_hidden + cfg.frame_dim(), cfg.n_answers);

  Rng rng(seed, {"qa-init"});
  nn::init_uniform(store, question.embedding.table, cfg.init_scale, rng);
  init_lstm(store, question.lstm, cfg.init_scale, cfg.forget_bias, rng);
  nn::init_uniform(store, frame_encoder.weight, cfg.init_scale, rng);
  nn::init_uniform(store, answer_head.weight, cfg.init_scale, rng);
}

Mat last_frames(const std::vector<const Observation*>& observations) {
  if (observations.empty()) throw PreconditionError("last_frames: no observations");
  const auto dim = observations.front()->features.size();
  Mat frames(dim, kQAFrames);
  const int n = static_cast<int>(observations.size());
  for (int j = 0; j < kQAFrames; ++j) {
    const int src = std::max(0, n - kQAFrames + j);
    frames.col(j) = observations[src]->features;
  }
  return frames;
}

QAForward qa_forward(const QAModel& model, const Mat& frames, const Vec& qvec) {
  if (frames.cols() != kQAFrames)
    throw PreconditionError("answer: expected " + std::to_string(kQAFrames) + " frames, got " +
                            std::to_string(frames.cols()));
  if (qvec.size() != model.config.question_hidden) throw ShapeError("answer: question vector size mismatch");
  QAForward f;
  f.frames = frames;
  f.qvec = qvec;
  f.encoded = nn::linear(model.store, model.frame_encoder, frames);
  const double scale = 1.0 / std::sqrt(static_cast<double>(model.config.frame_dim()));
  const Vec scores = (f.encoded.transpose() * qvec) * scale;
  f.weights = nn::softmax(scores);
  f.context = f.encoded * f.weights;
  Vec joint(qvec.size() + f.context.size());
  joint << qvec, f.context;
  f.logits = nn::linear(model.store, model.answer_head, joint);
  f.distribution = nn::softmax(f.logits);
  return f;
}

Vec answer(const QAModel& model, const Mat& frames, const Vec& qvec) {
  return qa_forward(model, frames, qvec).distribution;
}

Vec encode_question(const QAModel& model, const std::vector<int>& question_ids) {
  return encode_question(model.store, model.question, question_ids);
}

double qa_loss(const QAModel& model, const Mat& frames, const Vec& qvec, int answer_index) {
  if (answer_index < 0 || answer_index >= model.config.n_answers)
    throw PreconditionError("qa_loss: unknown answer index " + std::to_string(answer_index));
  const auto f = qa_forward(model, frames, qvec);
  return nn::softmax_cross_entropy(f.logits, answer_index).loss;
}

Vec qa_backward(QAModel& model, const QAForward& f, const Vec& dlogits) {
  const auto qdim = f.qvec.size();
  Vec djoint(qdim + f.context.size());
  {
    Vec joint(djoint.size());
    joint << f.qvec, f.context;
    djoint = nn::linear_backward(model.store, model.answer_head, joint, dlogits);
  }
  Vec dq = djoint.head(qdim);
  const Vec dcontext = djoint.tail(f.context.size());
  // context = E w
  Mat dencoded = dcontext * f.weights.transpose();
  const Vec dw = f.encoded.transpose() * dcontext;
  // w = softmax(s)
  const Vec ds = f.weights.cwiseProduct(dw.array().matrix() - Vec::Constant(dw.size(), f.weights.dot(dw)));
  // s = scale * E^T q
  const double scale = 1.0 / std::sqrt(static_cast<double>(model.config.frame_dim()));
  dencoded.noalias() += scale * f.qvec * ds.transpose();
  dq.noalias() += scale * f.encoded * ds;
  nn::linear_backward(model.store, model.frame_encoder, f.frames, dencoded);
  return dq;
}

QAStats qa_loss_backward(QAModel& model, const Mat& frames, const std::vector<int>& question_ids, int answer_index,
                         double weight) {
  if (answer_index < 0 || answer_index >= model.config.n_answers)
    throw PreconditionError("qa_loss: unknown answer index " + std::to_string(answer_index));
  QuestionTrace qt;
  const Vec qvec = encode_question(model.store, model.question, question_ids, &qt);
  const auto f = qa_forward(model, frames, qvec);
  const auto ce = nn::softmax_cross_entropy(f.logits, answer_index);
  const Vec dq = qa_backward(model, f, ce.grad * weight);
  encode_question_backward(model.store, model.question, qt, dq);
  return {ce.loss, nn::argmax(f.logits) == answer_index};
}

BlindfoldModel::BlindfoldModel(int vocab, int answers, std::uint64_t seed, double init_scale)
    : vocab_size(vocab), n_answers(answers) {
  classifier = nn::add_linear(store, "blindfold.classifier", vocab, answers);
  Rng rng(seed, {"blindfold-init"});
  nn::init_uniform(store, classifier.weight, init_scale, rng);
}

Vec bag_of_words(int vocab_size, const std::vector<int>& question_ids) {
  Vec bow = Vec::Zero(vocab_size);
  for (int id : question_ids) {
    if (id < 0 || id >= vocab_size) throw PreconditionError("bag_of_words: token index out of range");
    bow(id) += 1.0;
  }
  return bow;
}

Vec blindfold_answer(const BlindfoldModel& model, const std::vector<int>& question_ids) {
  return nn::softmax(nn::linear(model.store, model.classifier, bag_of_words(model.vocab_size, question_ids)));
}

QAStats blindfold_loss_backward(BlindfoldModel& model, const std::vector<int>& question_ids, int answer_index,
                                double weight) {
  const Vec bow = bag_of_words(model.vocab_size, question_ids);
  const Vec logits = nn::linear(model.store, model.classifier, bow);
  const auto ce = nn::softmax_cross_entropy(logits, answer_index);
  nn::linear_backward(model.store, model.classifier, bow, (ce.grad * weight).eval());
  return {ce.loss, nn::argmax(logits) == answer_index};
}

BlindfoldTrainResult train_blindfold(const Dataset& dataset, const BlindfoldTrainConfig& config) {
  struct Sample {
    std::vector<int> ids;
    int answer;
  };
  std::vector<Sample> samples;
  for (const auto& rec : dataset.train)
    for (const auto& q : rec.questions)
      samples.push_back({dataset.words.encode(q.tokens), dataset.answers.index(q.answer_token)});
  if (samples.empty()) throw PreconditionError("train_blindfold: no training questions");

  BlindfoldTrainResult result{BlindfoldModel(dataset.words.size(), dataset.answers.size(), config.seed), {}};
  const nn::AdamConfig adam{config.lr};
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(config.seed, {"blindfold-shuffle", epoch});
    rng.shuffle(order);
    int correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = samples[order[i]];
        correct += blindfold_loss_backward(result.model, s.ids, s.answer, w).correct;
      }
      nn::adam_step(result.model.store, adam);
    }
    result.accuracy_curve.push_back(static_cast<double>(correct) / samples.size());
  }
  return result;
}

}  // namespace eqa
