#include <doctest.h>

#include <cmath>

#include "../gradcheck_cases.hpp"

using namespace eqa;
using namespace gradcases;

TEST_SUITE("tensor_nn") {
  TEST_CASE("finite-difference checks, several seeds per op") {
    for (const auto& c : all_cases()) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = c.fn(seed);
        INFO(c.name, " seed ", seed, " worst ", r.worst_param, "[", r.worst_index, "] a=", r.analytic,
             " n=", r.numeric);
        CHECK(r.max_rel_error < 1e-6);
        CHECK(r.coordinates > 0);
      }
    }
  }

  TEST_CASE("linear: identity and zero input") {
    Store s;
    const auto l = nn::add_linear(s, "l", 3, 3);
    s.value(l.weight) = Mat::Identity(3, 3);
    Vec x(3);
    x << 1, -2, 3;
    CHECK(nn::linear(s, l, x).isApprox(Mat(x)));
    s.value(l.bias) << 0.5, 0.25, -1;
    CHECK(nn::linear(s, l, Vec::Zero(3)) == s.value(l.bias));
    CHECK_THROWS_AS(nn::linear(s, l, Vec::Zero(4)), ShapeError);
  }

  TEST_CASE("embedding: repeat lookups and untouched rows") {
    Store s;
    Rng rng(3);
    const auto e = nn::add_embedding(s, "e", 5, 8);
    randomize(s, rng, 1.0);
    const std::vector<int> ids = {2, 2};
    const Mat y = nn::embedding(s, e, std::span<const int>(ids));
    CHECK(y.col(0) == y.col(1));
    nn::embedding_backward(s, e, std::span<const int>(ids), Mat::Ones(8, 2));
    for (int r = 0; r < 5; ++r)
      if (r != 2) CHECK(s.grad(e.table).row(r).isZero(0.0));
    CHECK(s.grad(e.table).row(2).isApproxToConstant(2.0));
    const std::vector<int> bad = {5};
    CHECK_THROWS_AS(nn::embedding(s, e, std::span<const int>(bad)), ShapeError);
  }

  TEST_CASE("lstm: zero parameters give zero hidden, length-1 sequence equals one cell") {
    Store s;
    const auto stack = nn::add_lstm(s, "l", 3, 4, 2);
    Rng rng(1);
    const Mat x = random_mat(3, 6, rng);
    CHECK(nn::lstm_seq(s, stack, x).top_h().isZero(0.0));
    randomize(s, rng, 0.5);
    const auto tr = nn::lstm_seq(s, stack, Mat(x.col(0)));
    auto state = nn::LstmState<double>::zeros(stack);
    nn::lstm_step(s, stack, Vec(x.col(0)), state);
    CHECK((tr.top_h().col(0) - state.top()).norm() == doctest::Approx(0.0).epsilon(1e-15));
    // whole sequence agrees with repeated steps
    const auto full = nn::lstm_seq(s, stack, x);
    state = nn::LstmState<double>::zeros(stack);
    for (Index t = 0; t < x.cols(); ++t) {
      nn::lstm_step(s, stack, Vec(x.col(t)), state);
      CHECK((full.top_h().col(t) - state.top()).norm() < 1e-14);
    }
  }

  TEST_CASE("softmax cross-entropy values") {
    Vec l = Vec::Zero(4);
    CHECK(nn::softmax_cross_entropy(l, 2).loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    l(1) = 1e6;
    CHECK(nn::softmax_cross_entropy(l, 1).loss == doctest::Approx(0.0));
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      const Vec z = random_mat(9, 1, rng, 30.0).col(0);
      CHECK(std::abs(nn::softmax(z).sum() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(nn::softmax_cross_entropy(l, 4), ShapeError);
  }

  TEST_CASE("cosine loss values") {
    Vec a(3), b(3);
    a << 1, 2, 3;
    CHECK(nn::cosine_loss(a, a).loss == doctest::Approx(0.0).epsilon(1e-15));
    a << 1, 0, 0;
    b << 0, 5, 0;
    CHECK(nn::cosine_loss(a, b).loss == doctest::Approx(1.0));
    CHECK(nn::cosine_loss(a, Vec(-a)).loss == doctest::Approx(2.0));
    CHECK_THROWS_AS(nn::cosine_loss(a, Vec::Zero(3)), NumericError);
  }

  TEST_CASE("adam by hand") {
    Store s;
    const auto id = s.add("w", 1, 1);
    s.value(id)(0, 0) = 0.5;
    nn::AdamConfig cfg;
    cfg.lr = 0.01;
    nn::adam_step(s, cfg);  // zero gradient
    CHECK(s.value(id)(0, 0) == 0.5);

    Store t;
    const auto w = t.add("w", 1, 1);
    t.grad(w)(0, 0) = 1.0;
    nn::adam_step(t, cfg);
    // m = 0.1, v = 0.001; corrected m = 1, v = 1; update = lr / (1 + eps)
    CHECK(t.value(w)(0, 0) == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(t.grad(w)(0, 0) == 0.0);
    t.grad(w)(0, 0) = -2.0;
    nn::adam_step(t, cfg);
    const double m = 0.9 * 0.1 + 0.1 * -2.0, v = 0.999 * 0.001 + 0.001 * 4.0;
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    CHECK(t.value(w)(0, 0) == doctest::Approx(-0.01 / (1.0 + 1e-8) - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
  }

  TEST_CASE("identical runs give identical parameters") {
    auto run = [] {
      Store s;
      Rng rng(11);
      const auto l = nn::add_linear(s, "l", 4, 3);
      randomize(s, rng, 1.0);
      const Mat x = random_mat(4, 5, rng);
      for (int i = 0; i < 10; ++i) {
        const Mat y = nn::linear(s, l, x);
        nn::linear_backward(s, l, x, y);
        nn::adam_step(s, nn::AdamConfig{});
      }
      return s.value(l.weight);
    };
    CHECK(run() == run());
  }

  TEST_CASE("param store rejects duplicates and bad shapes") {
    Store s;
    s.add("a", 2, 2);
    CHECK_THROWS_AS(s.add("a", 1, 1), ShapeError);
    CHECK_THROWS_AS(s.add("b", 0, 1), ShapeError);
    CHECK_THROWS_AS(s.find("zzz"), ShapeError);
  }
}
