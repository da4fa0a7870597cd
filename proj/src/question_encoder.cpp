#include "eqa/question_encoder.hpp"

namespace eqa {

QuestionEncoder add_question_encoder(Store& store, const std::string& name, int vocab, int word_dim, int hidden,
                                     int layers) {
  QuestionEncoder enc;
  enc.embedding = nn::add_embedding(store, name + ".embedding", vocab, word_dim);
  enc.lstm = nn::add_lstm(store, name + ".lstm", word_dim, hidden, layers);
  return enc;
}

Vec encode_question(const Store& store, const QuestionEncoder& enc, std::span<const int> ids, QuestionTrace* trace) {
  if (ids.empty()) throw ShapeError("encode_question: empty question");
  const Mat words = nn::embedding(store, enc.embedding, ids);
  auto lstm = nn::lstm_seq(store, enc.lstm, words);
  Vec q = lstm.top_h().col(lstm.length() - 1);
  if (trace) {
    trace->ids.assign(ids.begin(), ids.end());
    trace->lstm = std::move(lstm);
  }
  return q;
}

void encode_question_backward(Store& store, const QuestionEncoder& enc, const QuestionTrace& trace, const Vec& dq) {
  const nn::Index steps = trace.lstm.length();
  Mat dh = Mat::Zero(enc.lstm.hidden(), steps);
  dh.col(steps - 1) = dq;
  const Mat dwords = nn::lstm_seq_backward(store, enc.lstm, trace.lstm, dh);
  nn::embedding_backward(store, enc.embedding, std::span<const int>(trace.ids), dwords);
}

void init_lstm(Store& store, const nn::LstmStack& stack, double scale, double forget_bias, Rng& rng) {
  for (const auto& layer : stack.layers) {
    nn::init_uniform(store, layer.weight, scale, rng);
    auto& b = store.value(layer.bias);
    b.setZero();
    b.block(layer.hidden, 0, layer.hidden, 1).setConstant(forget_bias);
  }
}

}  // namespace eqa
