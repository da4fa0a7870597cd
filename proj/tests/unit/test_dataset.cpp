#include <doctest.h>

#include <map>
#include <set>

#include "../helpers.hpp"
#include "eqa/errors.hpp"

using namespace eqa;
using namespace testutil;

namespace {

// Border walls, a single 4-connected free component, one object per free cell.
void check_env_invariants(const GridEnvironment& env) {
  for (int x = 0; x < env.width(); ++x) {
    REQUIRE(!env.is_free(x, 0));
    REQUIRE(!env.is_free(x, env.height() - 1));
  }
  for (int y = 0; y < env.height(); ++y) {
    REQUIRE(!env.is_free(0, y));
    REQUIRE(!env.is_free(env.width() - 1, y));
  }
  Position first{-1, -1};
  int n_free = 0;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) {
      const Cell& c = env.at(x, y);
      if (c.terrain == Terrain::Wall) {
        REQUIRE(!c.room_id);
        REQUIRE(!c.occupant);
        continue;
      }
      ++n_free;
      if (first.x < 0) first = {x, y};
    }
  int reached = 0;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x)
      if (env.is_free(x, y) && ref_geodesic(env, first, {x, y}) >= 0) ++reached;
  REQUIRE(reached == n_free);
  std::set<Position> used;
  for (const auto& o : env.objects()) {
    REQUIRE(env.is_free(o.position));
    REQUIRE(used.insert(o.position).second);
    REQUIRE(env.at(o.position.x, o.position.y).occupant == o.object_id);
  }
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("generated envs satisfy invariants") {
    EnvConfig cfg;  // 25x25, 4 rooms, 10 objects
    for (int s = 1; s <= 10; ++s) {
      auto env = generate_environment(s, cfg);
      CHECK(env.validate().empty());
      check_env_invariants(env);
      CHECK(env.objects().size() == 10u);
      CHECK(env.rooms().size() == 4u);
    }
  }

  TEST_CASE("generation is deterministic") {
    EnvConfig cfg;
    auto a = generate_environment(1, cfg);
    auto b = generate_environment(1, cfg);
    REQUIRE(a.cell_count() == b.cell_count());
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        CHECK(a.at(x, y).terrain == b.at(x, y).terrain);
        CHECK(a.at(x, y).room_id == b.at(x, y).room_id);
      }
    REQUIRE(a.objects().size() == b.objects().size());
    for (std::size_t i = 0; i < a.objects().size(); ++i) {
      CHECK(a.objects()[i].type_token == b.objects()[i].type_token);
      CHECK(a.objects()[i].color_token == b.objects()[i].color_token);
      CHECK(a.objects()[i].position == b.objects()[i].position);
    }
  }

  TEST_CASE("unsatisfiable configs raise GenerationError") {
    EnvConfig cfg;
    cfg.width = 7;
    cfg.height = 7;
    cfg.n_rooms = 1;
    cfg.n_objects = 100;
    CHECK_THROWS_AS(generate_environment(1, cfg), GenerationError);
    EnvConfig rooms;
    rooms.width = 8;
    rooms.height = 8;
    rooms.n_rooms = 20;
    CHECK_THROWS_AS(generate_environment(1, rooms), GenerationError);
  }

  TEST_CASE("questions: unique referents, both templates, answerable") {
    auto env = grid_from_rows({
        "#######",
        "#00011#",
        "#00011#",
        "#######",
    });
    env.rooms()[0].label = "kitchen";
    env.rooms()[1].label = "bedroom";
    env.add_object("sofa", "red", {1, 1}, false);
    env.add_object("table", "blue", {4, 1}, false);
    env.add_object("table", "green", {5, 2}, false);
    const auto qs = generate_questions(env);
    REQUIRE(qs.size() == 2u);
    std::map<std::string, std::string> by_text;
    for (const auto& q : qs) {
      std::string text;
      for (const auto& t : q.tokens) text += (text.empty() ? "" : " ") + t;
      by_text[text] = q.answer_token;
      CHECK(ground_truth_answer(env, q) == q.answer_token);
    }
    CHECK(by_text.at("what color is the sofa ?") == "red");
    CHECK(by_text.at("what room is the sofa located in ?") == "kitchen");
  }

  TEST_CASE("ten unique types give twenty questions") {
    EnvConfig cfg;
    cfg.distinct_types = true;
    auto env = generate_environment(3, cfg);
    CHECK(generate_questions(env).size() == 20u);
  }

  TEST_CASE("default dataset: sizes, disjoint splits, vocab, answerable, goal sets") {
    DatasetConfig cfg;
    const Dataset ds = build_dataset(cfg);
    CHECK(ds.train.size() == 60u);
    CHECK(ds.val.size() == 10u);
    CHECK(ds.test.size() == 10u);
    std::set<std::string> ids;
    for (const auto* split : {&ds.train, &ds.val, &ds.test})
      for (const auto& r : *split) CHECK(ids.insert(r.env.env_id).second);
    CHECK(ids.size() == 80u);
    CHECK(ds.answers.size() == 14);
    for (const auto& m : marker_types()) {
      CHECK(ds.words.contains(m));
      CHECK(std::find(cfg.env.type_vocab.begin(), cfg.env.type_vocab.end(), m) == cfg.env.type_vocab.end());
    }
    for (const auto& r : ds.test)
      for (const auto& q : r.questions) {
        CHECK(ground_truth_answer(r.env, q) == q.answer_token);
        CHECK(ds.answers.contains(q.answer_token));
        CHECK_FALSE(goal_set(r.env, q.target_object_id, ds.obs_spec).empty());
      }
  }

  TEST_CASE("same master seed gives the same dataset; different seeds differ") {
    const auto cfg = tiny_dataset_config();
    const Dataset a = build_dataset(cfg);
    const Dataset b = build_dataset(cfg);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      CHECK(a.train[i].env.env_id == b.train[i].env.env_id);
      CHECK(a.train[i].env.seed == b.train[i].env.seed);
      CHECK(a.train[i].questions.size() == b.train[i].questions.size());
    }
    auto other = cfg;
    other.master_seed = cfg.master_seed + 1;
    const Dataset c = build_dataset(other);
    CHECK(c.train[0].env.seed != a.train[0].env.seed);
  }

  TEST_CASE("color_weights skew the color distribution") {
    EnvConfig cfg;
    cfg.color_weights.assign(cfg.color_vocab.size(), 1.0);
    cfg.color_weights[0] = 20.0;
    int first = 0, total = 0;
    for (int s = 0; s < 20; ++s)
      for (const auto& o : generate_environment(s, cfg).objects()) {
        ++total;
        first += o.color_token == cfg.color_vocab[0];
      }
    // expected share 20/27
    CHECK(static_cast<double>(first) / total > 0.6);
  }
}

TEST_SUITE("path_oracle") {
  TEST_CASE("start in goal gives empty path") {
    auto env = grid_from_rows({
        "#######",
        "#.....#",
        "#.....#",
        "#######",
    });
    const int t = env.add_object("a", "red", {4, 1}, false);
    auto spec = spec_for(env);
    const auto g = goal_set(env, t, spec);
    const auto p = shortest_action_path(env, {2, 1, Heading::E}, g);
    CHECK(p.size() == 0u);
    CHECK_THROWS_AS(goal_set(env, 99, spec), PreconditionError);
  }

  TEST_CASE("corridor: forward until visible, and turn around when behind") {
    // depth 3 window so the target is visible within two cells ahead
    auto env = grid_from_rows({
        "##########",
        "#........#",
        "##########",
    });
    const int t = env.add_object("a", "red", {7, 1}, false);
    ObservationSpec spec(3, 1, {"ta", "a"}, default_colors());
    const auto g = goal_set(env, t, spec);
    auto p = shortest_action_path(env, {3, 1, Heading::E}, g);
    REQUIRE(p.size() == 2u);
    CHECK(p.actions[0] == Action::Forward);
    CHECK(p.actions[1] == Action::Forward);
    CHECK(static_cast<int>(p.size()) == ref_bfs_length(env, {3, 1, Heading::E}, {7, 1}, 3, 1));
    p = shortest_action_path(env, {3, 1, Heading::W}, g);
    REQUIRE(p.size() >= 2u);
    CHECK(p.actions[0] != Action::Forward);
    CHECK(p.actions[1] != Action::Forward);
    CHECK(static_cast<int>(p.size()) == ref_bfs_length(env, {3, 1, Heading::W}, {7, 1}, 3, 1));
  }

  TEST_CASE("walled closet: goal states come only through the door") {
    auto env = grid_from_rows({
        "#######",
        "#.....#",
        "#.....#",
        "###.###",
        "###.###",
        "#######",
    });
    const int t = env.add_object("a", "red", {3, 4}, false);
    auto spec = spec_for(env);
    const auto g = goal_set(env, t, spec);
    REQUIRE_FALSE(g.empty());
    // nothing facing north sees into the closet
    for (const auto& s : g.states) CHECK((s.heading != Heading::N || s.position() == Position{3, 4}));
    for (const auto& s : all_states(env)) CHECK(g.contains(env, s) == ref_visible(env, s, {3, 4}, 5, 5));
  }

  TEST_CASE("A* equals BFS on random 11x11 envs (sampled)") {
    for (int e = 0; e < 10; ++e) {
      auto env = generate_environment(derive_seed(300, {e}), small_env_config(11));
      ObservationSpec spec(5, 5, default_object_types(), default_colors());
      for (const auto& o : env.objects()) {
        const auto g = goal_set(env, o.object_id, spec);
        const auto states = all_states(env);
        for (std::size_t i = 0; i < states.size(); i += 3) {
          const auto p = shortest_action_path(env, states[i], g);
          REQUIRE(static_cast<int>(p.size()) == ref_bfs_length(env, states[i], o.position));
          const auto trace = replay(env, p.start, p.actions);
          REQUIRE(trace.back() == p.end);
          REQUIRE(g.contains(env, p.end));
          // heuristic admissibility at the start
          int h = 1 << 30;
          for (auto q : g.positions) h = std::min(h, std::abs(q.x - states[i].x) + std::abs(q.y - states[i].y));
          REQUIRE(h <= static_cast<int>(p.size()));
        }
      }
    }
  }

  TEST_CASE("spawn_at: exact k, k = 0 in goal, huge k too small") {
    auto env = generate_environment(17, EnvConfig{});
    ObservationSpec spec(5, 5, default_object_types(), default_colors());
    const int target = env.objects().front().object_id;
    const auto g = goal_set(env, target, spec);
    Rng rng(1);
    const auto s0 = spawn_at(env, g, 0, rng);
    CHECK(g.contains(env, s0));
    for (int i = 0; i < 10; ++i) {
      const auto s = spawn_at(env, g, 10, rng);
      CHECK(ref_bfs_length(env, s, env.object(target).position) == 10);
    }
    CHECK_THROWS_AS(spawn_at(env, g, 200, rng), EnvTooSmallError);
  }
}
