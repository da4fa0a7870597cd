#pragma once

#include <span>
#include <string>
#include <vector>

#include "eqa/nn/layers.hpp"

namespace eqa {

using Store = nn::ParamStore<double>;
using Vec = nn::Vector<double>;
using Mat = nn::Matrix<double>;

// Word embedding followed by a stacked LSTM; the question vector is the top
// layer's final hidden state.
struct QuestionEncoder {
  nn::EmbeddingLayer embedding;
  nn::LstmStack lstm;
};

QuestionEncoder add_question_encoder(Store& store, const std::string& name, int vocab, int word_dim, int hidden,
                                     int layers);

struct QuestionTrace {
  std::vector<int> ids;
  nn::LstmTrace<double> lstm;
};

Vec encode_question(const Store& store, const QuestionEncoder& enc, std::span<const int> ids,
                    QuestionTrace* trace = nullptr);

void encode_question_backward(Store& store, const QuestionEncoder& enc, const QuestionTrace& trace, const Vec& dq);

// Uniform init with the LSTM forget-gate bias set to `forget_bias`.
void init_lstm(Store& store, const nn::LstmStack& stack, double scale, double forget_bias, Rng& rng);

}  // namespace eqa
