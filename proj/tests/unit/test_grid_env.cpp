#include <doctest.h>

#include "../helpers.hpp"
#include "eqa/errors.hpp"
#include "eqa/rng.hpp"

using namespace eqa;
using namespace testutil;

TEST_SUITE("rng") {
  TEST_CASE("streams are reproducible and label-sensitive") {
    Rng a(42, {"x", 1}), b(42, {"x", 1}), c(42, {"x", 2}), d(43, {"x", 1});
    for (int i = 0; i < 100; ++i) {
      const auto va = a.next_u64();
      CHECK(va == b.next_u64());
      CHECK(va != c.next_u64());
      CHECK(va != d.next_u64());
    }
  }

  TEST_CASE("splitmix64 reference values") {
    // Published SplitMix64 output for state 0: the first value of the generator
    // seeded with 0 equals the finalizer applied to 0.
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  }

  TEST_CASE("uniform bounds") {
    Rng r(5);
    int hist[7] = {};
    for (int i = 0; i < 7000; ++i) {
      const int v = r.uniform_int(3, 9);
      REQUIRE(v >= 3);
      REQUIRE(v <= 9);
      ++hist[v - 3];
      const double u = r.uniform01();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
    }
    for (int h : hist) CHECK(h > 800);
  }

  TEST_CASE("shuffle is a permutation") {
    Rng r(9);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    r.shuffle(w);
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
  }
}

TEST_SUITE("grid_env") {
  const std::vector<std::string> kOpen = {
      "#########",
      "#.......#",
      "#.......#",
      "#.......#",
      "#.......#",
      "#.......#",
      "#########",
  };

  TEST_CASE("step examples") {
    auto env = grid_from_rows({
        "#######",
        "#.....#",
        "#.#...#",
        "#.....#",
        "#######",
    });
    CHECK(step(env, {3, 3, Heading::N}, Action::Forward) == AgentState{3, 2, Heading::N});
    CHECK(step(env, {2, 3, Heading::N}, Action::Forward) == AgentState{2, 3, Heading::N});
    CHECK(step(env, {1, 1, Heading::N}, Action::Forward) == AgentState{1, 1, Heading::N});
    CHECK(step(env, {3, 3, Heading::N}, Action::TurnRight) == AgentState{3, 3, Heading::E});
    CHECK(step(env, {3, 3, Heading::N}, Action::TurnLeft) == AgentState{3, 3, Heading::W});
    CHECK(step(env, {3, 3, Heading::S}, Action::Stop) == AgentState{3, 3, Heading::S});
    CHECK_THROWS_AS(step(env, {2, 2, Heading::N}, Action::Forward), PreconditionError);
  }

  TEST_CASE("window geometry") {
    const AgentState s{4, 4, Heading::E};
    // row 0 is the agent's own row; columns run left to right across the heading
    CHECK(window_cell(s, 0, 2, 5) == Position{4, 4});
    CHECK(window_cell(s, 2, 2, 5) == Position{6, 4});
    CHECK(window_cell(s, 1, 0, 5) == Position{5, 2});
    CHECK(window_cell(s, 1, 4, 5) == Position{5, 6});
    const AgentState n{4, 4, Heading::N};
    CHECK(window_cell(n, 3, 0, 5) == Position{2, 1});
  }

  TEST_CASE("facing a wall hides the column behind it") {
    auto env = grid_from_rows({
        "#########",
        "#.......#",
        "#.......#",
        "#...#...#",
        "#.......#",
        "#.......#",
        "#########",
    });
    ObservationSpec spec = spec_for(env);
    const auto obs = observe(env, {4, 4, Heading::N}, spec);
    CHECK(obs.code(0, 2) == CellCode::Free);
    CHECK(obs.code(1, 2) == CellCode::Wall);
    for (int r = 2; r < 5; ++r) CHECK(obs.code(r, 2) == CellCode::Unknown);
    CHECK(obs.code(2, 1) == CellCode::Free);
  }

  TEST_CASE("border is coded wall") {
    auto env = grid_from_rows(kOpen);
    ObservationSpec spec = spec_for(env);
    const auto obs = observe(env, {1, 1, Heading::N}, spec);
    // column 0 is two cells left of the agent: out of bounds at x = -1
    CHECK(obs.code(0, 0) == CellCode::Wall);
    CHECK(obs.code(1, 0) == CellCode::Unknown);
    CHECK(obs.code(1, 2) == CellCode::Wall);
    CHECK(obs.code(2, 2) == CellCode::Unknown);
  }

  TEST_CASE("object one-hots") {
    auto env = grid_from_rows(kOpen);
    const int sofa = env.add_object("sofa", "red", {3, 2}, false);
    ObservationSpec spec(5, 5, {"sofa", "table"}, default_colors());
    const auto obs = observe(env, {3, 4, Heading::N}, spec);
    REQUIRE(obs.object_at[2 * 5 + 2] == sofa);
    const int base = (2 * 5 + 2) * spec.codes_per_cell();
    CHECK(obs.features(base + 1) == 1.0);  // free
    CHECK(obs.features(base + 3 + spec.type_index("sofa")) == 1.0);
    CHECK(obs.features(base + 3 + spec.type_index("table")) == 0.0);
    CHECK(obs.features(base + 3 + 2 + spec.color_index("red")) == 1.0);
    CHECK(obs.features.size() == spec.feature_dim());
    for (Eigen::Index i = 0; i < obs.features.size(); ++i) REQUIRE((obs.features(i) == 0.0 || obs.features(i) == 1.0));
  }

  TEST_CASE("visible_objects: behind a wall, adjacent, empty room") {
    auto env = grid_from_rows({
        "#########",
        "#.......#",
        "#...#...#",
        "#.......#",
        "#.......#",
        "#.......#",
        "#########",
    });
    const int hidden = env.add_object("a", "red", {4, 1}, false);
    const int near = env.add_object("b", "red", {2, 3}, false);
    ObservationSpec spec(5, 5, {"a", "b"}, default_colors());
    auto vis = visible_objects(env, {4, 4, Heading::N}, spec);
    CHECK(std::find(vis.begin(), vis.end(), hidden) == vis.end());
    CHECK(std::find(vis.begin(), vis.end(), near) != vis.end());
    vis = visible_objects(env, {2, 4, Heading::N}, spec);
    CHECK(std::find(vis.begin(), vis.end(), near) != vis.end());
    auto empty = grid_from_rows(kOpen);
    CHECK(visible_objects(empty, {3, 3, Heading::E}, spec_for(empty)).empty());
  }

  TEST_CASE("geodesic examples") {
    auto env = grid_from_rows({
        "#####",
        "#...#",
        "#...#",
        "#...#",
        "#####",
    });
    CHECK(geodesic_distance(env, {2, 2}, {2, 2}) == 0);
    CHECK(geodesic_distance(env, {1, 1}, {3, 3}) == 4);
    auto split = grid_from_rows({
        "#######",
        "#..#..#",
        "#..#..#",
        "#######",
    });
    CHECK_THROWS_AS(geodesic_distance(split, {1, 1}, {5, 1}), UnreachableError);
  }

  TEST_CASE("exhaustive dynamics and visibility on generated envs") {
    for (int e = 0; e < 20; ++e) {
      auto env = generate_environment(derive_seed(100, {e}), small_env_config(e % 2 ? 11 : 9));
      REQUIRE(env.validate().empty());
      ObservationSpec spec(5, 5, default_object_types(), default_colors());
      for (const auto& s : all_states(env)) {
        CHECK(step(env, step(env, s, Action::TurnRight), Action::TurnLeft) == s);
        CHECK(step(env, step(env, s, Action::TurnLeft), Action::TurnRight) == s);
        AgentState t = s;
        for (int i = 0; i < 4; ++i) t = step(env, t, Action::TurnRight);
        CHECK(t == s);
        for (int a = 0; a < 3; ++a) REQUIRE(step(env, s, static_cast<Action>(a)) == ref_step(env, s, a));

        const auto obs = observe(env, s, spec);
        const auto vis = visible_objects(env, s, spec);
        for (const auto& o : env.objects()) {
          const bool expect = ref_visible(env, s, o.position, 5, 5);
          const bool listed = std::find(vis.begin(), vis.end(), o.object_id) != vis.end();
          REQUIRE(listed == expect);
          REQUIRE(is_position_visible(env, s, o.position, spec) == expect);
          // consistency with the observation one-hots
          bool coded = false;
          for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 5; ++c)
              if (window_cell(s, r, c, 5) == o.position && obs.code(r, c) != CellCode::Unknown) {
                const int base = (r * 5 + c) * spec.codes_per_cell();
                coded = obs.features(base + 3 + spec.type_index(o.type_token)) == 1.0;
              }
          REQUIRE(coded == expect);
        }
      }
      // replay consistency on a random walk
      Rng rng(e);
      AgentState s = random_state(env, rng);
      std::vector<Action> acts;
      for (int i = 0; i < 40; ++i) acts.push_back(static_cast<Action>(rng.uniform_index(3)));
      const auto states = replay(env, s, acts);
      REQUIRE(states.size() == acts.size() + 1);
      for (std::size_t i = 0; i < acts.size(); ++i)
        REQUIRE(states[i + 1] == ref_step(env, states[i], static_cast<int>(acts[i])));
    }
  }

  TEST_CASE("distance_field matches BFS, symmetric, triangle inequality") {
    for (int e = 0; e < 5; ++e) {
      auto env = generate_environment(derive_seed(200, {e}), small_env_config(9));
      std::vector<Position> cells;
      for (int y = 0; y < env.height(); ++y)
        for (int x = 0; x < env.width(); ++x)
          if (env.is_free(x, y)) cells.push_back({x, y});
      std::vector<std::vector<int>> d;
      for (auto a : cells) d.push_back(distance_field(env, a));
      for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = 0; j < cells.size(); ++j) {
          const int dij = d[i][env.index(cells[j].x, cells[j].y)];
          if (i % 7 == 0) REQUIRE(dij == ref_geodesic(env, cells[i], cells[j]));
          REQUIRE(dij == d[j][env.index(cells[i].x, cells[i].y)]);
          for (std::size_t k = 0; k < cells.size(); k += 5)
            REQUIRE(dij <= d[i][env.index(cells[k].x, cells[k].y)] + d[k][env.index(cells[j].x, cells[j].y)]);
        }
    }
  }
}
