#include <doctest.h>

#include <set>

#include "../helpers.hpp"
#include "eqa/calibration.hpp"
#include "eqa/errors.hpp"
#include "eqa/eval_harness.hpp"
#include "eqa/nn/losses.hpp"

using namespace eqa;
using namespace testutil;

namespace {

const Dataset& tiny() {
  static const Dataset ds = build_dataset(tiny_dataset_config());
  return ds;
}

NavConfig mini_nav(const Dataset& ds) {
  NavConfig c = resolve_nav_config(NavConfig{}, ds);
  c.word_dim = 8;
  c.question_hidden = 8;
  c.obs_embed = 8;
  c.action_embed = 4;
  c.hidden = 16;
  return c;
}

QAConfig mini_qa(const Dataset& ds) {
  QAConfig c = resolve_qa_config(QAConfig{}, ds);
  c.word_dim = 8;
  c.question_hidden = 8;
  c.question_layers = 1;
  return c;
}

// Pretrained-ish navigation model: a couple of quick epochs.
const NavModel& pretrained() {
  static const NavModel m = [] {
    NavTrainConfig c;
    c.epochs = 2;
    c.model = mini_nav(tiny());
    return train_navigation(tiny(), c).model;
  }();
  return m;
}

struct MarkerFixture {
  GridEnvironment augmented;
  std::vector<MarkerEpisode> episodes;
};

MarkerFixture markers(int n = 5, std::uint64_t seed = 3) {
  const auto& ds = tiny();
  CalibrationConfig cfg;
  cfg.n_markers = n;
  Rng rng(seed);
  MarkerFixture f;
  f.augmented = place_markers(ds.test[0].env, cfg, ds.config.env.color_vocab, rng);
  f.episodes = gen_marker_questions(f.augmented, ds.obs_spec, rng);
  return f;
}

bool same_params(const NavModel& a, const NavModel& b) {
  if (a.store.size() != b.store.size()) return false;
  for (std::size_t i = 0; i < a.store.size(); ++i)
    if (a.store[i].value != b.store[i].value) return false;
  return true;
}

}  // namespace

TEST_SUITE("calibration") {
  TEST_CASE("placement property over 100 seeds") {
    EnvConfig ec = small_env_config(15);
    CalibrationConfig cfg;
    const auto colors = default_colors();
    int placed = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto env = generate_environment(derive_seed(500, {static_cast<int>(s)}), ec);
      Rng rng(s);
      GridEnvironment aug;
      try {
        aug = place_markers(env, cfg, colors, rng);
      } catch (const PlacementError&) {
        continue;
      }
      ++placed;
      REQUIRE(aug.objects().size() == env.objects().size() + 5);
      for (std::size_t i = 0; i < env.objects().size(); ++i) {
        CHECK(aug.objects()[i].position == env.objects()[i].position);
        CHECK_FALSE(aug.objects()[i].is_marker);
      }
      std::vector<SceneObject> ms;
      std::set<std::string> types;
      std::set<Position> cells;
      for (const auto& o : aug.objects()) {
        CHECK(cells.insert(o.position).second);
        if (!o.is_marker) continue;
        ms.push_back(o);
        types.insert(o.type_token);
        CHECK(std::find(marker_types().begin(), marker_types().end(), o.type_token) != marker_types().end());
        CHECK(std::find(colors.begin(), colors.end(), o.color_token) != colors.end());
        CHECK(aug.at(o.position.x, o.position.y).room_id.has_value());
      }
      CHECK(types.size() == 5u);
      for (std::size_t i = 0; i < ms.size(); ++i)
        for (std::size_t j = i + 1; j < ms.size(); ++j) CHECK(ref_geodesic(aug, ms[i].position, ms[j].position) >= 4);
      CHECK(aug.validate().empty());
    }
    CHECK(placed == 100);
  }

  TEST_CASE("tiny env cannot hold five spaced markers; one marker always fits") {
    auto env = grid_from_rows({
        "#####",
        "#000#",
        "#000#",
        "#000#",
        "#####",
    });
    CalibrationConfig cfg;
    Rng rng(1);
    CHECK_THROWS_AS(place_markers(env, cfg, default_colors(), rng), PlacementError);
    cfg.n_markers = 1;
    CHECK(place_markers(env, cfg, default_colors(), rng).objects().size() == 1u);
    cfg.n_markers = 6;
    CHECK_THROWS_AS(place_markers(env, cfg, default_colors(), rng), ConfigError);
  }

  TEST_CASE("fewer markers are a prefix of more markers") {
    const auto& env = tiny().test[0].env;
    CalibrationConfig cfg;
    std::vector<SceneObject> five;
    {
      Rng rng(7);
      for (const auto& o : place_markers(env, cfg, default_colors(), rng).objects())
        if (o.is_marker) five.push_back(o);
    }
    for (int n = 1; n < 5; ++n) {
      cfg.n_markers = n;
      Rng rng(7);
      int i = 0;
      for (const auto& o : place_markers(env, cfg, default_colors(), rng).objects()) {
        if (!o.is_marker) continue;
        CHECK(o.position == five[i].position);
        CHECK(o.type_token == five[i].type_token);
        CHECK(o.color_token == five[i].color_token);
        ++i;
      }
      CHECK(i == n);
    }
  }

  TEST_CASE("marker questions: one per marker, painted color, path ends seeing the marker") {
    const auto f = markers();
    REQUIRE(f.episodes.size() == 5u);
    for (const auto& e : f.episodes) {
      const auto& m = f.augmented.object(e.question.target_object_id);
      CHECK(m.is_marker);
      CHECK(e.question.answer_token == m.color_token);
      CHECK(e.question.tokens == marker_question_tokens(m.type_token));
      CHECK_FALSE(e.path.actions.empty());
      CHECK(replay(f.augmented, e.path.start, e.path.actions).back() == e.path.end);
      CHECK(ref_visible(f.augmented, e.path.end, m.position, 5, 5));
      CHECK(static_cast<int>(e.path.size()) == ref_bfs_length(f.augmented, e.path.start, m.position));
    }
  }

  TEST_CASE("lambda = 1 starts at a stationary point with zero distillation loss") {
    const auto& ds = tiny();
    const auto f = markers();
    CalibrationConfig cfg;
    cfg.lambda = 1.0;
    cfg.epochs = 1;
    CalibrationStats stats;
    const NavModel out = calibrate_distill(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec, &stats);
    CHECK(stats.first_step_grad_norm < 1e-12);
    // with one episode the epoch mean is the loss before any update
    const std::vector<MarkerEpisode> one(f.episodes.begin(), f.episodes.begin() + 1);
    CalibrationStats single;
    calibrate_distill(pretrained(), f.augmented, one, cfg, ds.words, ds.obs_spec, &single);
    REQUIRE(single.distill_loss.size() == 1u);
    CHECK(single.distill_loss[0] < 1e-12);
    // cosine loss of the teacher against itself
    for (const auto& e : f.episodes) {
      const auto ep = make_nav_episode(f.augmented, ds.words.encode(e.question.tokens), e.path, ds.obs_spec);
      const Mat h = nav_forward(pretrained(), ep).top_hidden();
      for (Eigen::Index t = 0; t < h.cols(); ++t) CHECK(nn::cosine_loss(h.col(t), h.col(t)).loss < 1e-15);
    }
    (void)out;
  }

  TEST_CASE("lambda = 0 is bitwise fine-tuning; zero epochs return the pretrained model") {
    const auto& ds = tiny();
    const auto f = markers();
    CalibrationConfig cfg;
    cfg.lambda = 0.0;
    cfg.epochs = 3;
    const NavModel a = calibrate_distill(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec);
    cfg.lambda = 0.7;  // ignored by finetune
    const NavModel b = calibrate_finetune(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec);
    CHECK(same_params(a, b));
    CHECK_FALSE(same_params(a, pretrained()));
    cfg.epochs = 0;
    CHECK(same_params(calibrate_distill(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec),
                      pretrained()));
  }

  TEST_CASE("teacher is untouched and deterministic output") {
    const auto& ds = tiny();
    const auto f = markers();
    const NavModel before = pretrained();
    std::vector<int> actions_before;
    for (const auto& e : f.episodes) {
      const auto ep = make_nav_episode(f.augmented, ds.words.encode(e.question.tokens), e.path, ds.obs_spec);
      const Mat l = nav_forward(pretrained(), ep).logits;
      for (Eigen::Index t = 0; t < l.cols(); ++t) actions_before.push_back(static_cast<int>(nn::argmax(l.col(t))));
    }
    CalibrationConfig cfg;
    cfg.epochs = 3;
    const NavModel x = calibrate_distill(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec);
    const NavModel y = calibrate_distill(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec);
    CHECK(same_params(x, y));
    CHECK(same_params(before, pretrained()));
    std::size_t i = 0;
    for (const auto& e : f.episodes) {
      const auto ep = make_nav_episode(f.augmented, ds.words.encode(e.question.tokens), e.path, ds.obs_spec);
      const Mat l = nav_forward(pretrained(), ep).logits;
      for (Eigen::Index t = 0; t < l.cols(); ++t) CHECK(static_cast<int>(nn::argmax(l.col(t))) == actions_before[i++]);
    }
  }

  TEST_CASE("fine-tuning overfits the marker paths") {
    const auto& ds = tiny();
    const auto f = markers();
    CalibrationConfig cfg;
    cfg.epochs = 150;
    cfg.lr = 1e-2;
    CalibrationStats stats;
    const NavModel m = calibrate_finetune(pretrained(), f.augmented, f.episodes, cfg, ds.words, ds.obs_spec, &stats);
    const double acc = marker_accuracy(m, f.augmented, f.episodes, ds.words, ds.obs_spec);
    CHECK(acc >= 0.95);
    CHECK(stats.policy_loss.back() < stats.policy_loss.front());
  }
}

TEST_SUITE("eval_harness") {
  TEST_CASE("d_delta examples") {
    auto env = grid_from_rows({
        "###########",
        "#.........#",
        "###########",
    });
    const Position target{9, 1};
    CHECK(d_delta(env, target, {5, 1}, {5, 1}) == 0);
    CHECK(d_delta(env, target, {5, 1}, {2, 1}) == -3);
    CHECK(d_delta(env, target, {5, 1}, {2, 1}) == ref_geodesic(env, {5, 1}, target) - ref_geodesic(env, {2, 1}, target));
    CHECK(d_delta(env, target, {1, 1}, {9, 1}) == 8);
  }

  TEST_CASE("max steps rule") {
    EvalOptions o;
    CHECK(o.max_steps(10) == 40);
    CHECK(o.max_steps(30) == 80);
    CHECK(o.max_steps(60) == 120);
  }

  TEST_CASE("oracle path: d_delta is initial minus residual, best among goal-reaching sequences") {
    // Every action sequence of the oracle's length is enumerated; among those
    // ending in the goal set none gets closer to the target than the oracle.
    DatasetConfig c = tiny_dataset_config();
    c.env = small_env_config(11);
    const Dataset ds = build_dataset(c);
    int checked = 0;
    for (const auto& r : ds.test)
      for (const auto& q : r.questions) {
        const auto g = goal_set(r.env, q.target_object_id, ds.obs_spec);
        const Position t = r.env.object(q.target_object_id).position;
        for (int k = 1; k <= 6; ++k) {
          Rng rng(derive_seed(1, {q.question_id, k}));
          AgentState s;
          try {
            s = spawn_at(r.env, g, k, rng);
          } catch (const EnvTooSmallError&) {
            continue;
          }
          const auto p = shortest_action_path(r.env, s, g);
          const int od = d_delta(r.env, t, s.position(), p.end.position());
          CHECK(od == ref_geodesic(r.env, s.position(), t) - ref_geodesic(r.env, p.end.position(), t));
          int best = -1000;
          int combos = 1;
          for (int i = 0; i < k; ++i) combos *= 3;
          for (int code = 0; code < combos; ++code) {
            AgentState a = s;
            int cc = code;
            for (int i = 0; i < k; ++i, cc /= 3) a = ref_step(r.env, a, cc % 3);
            if (ref_visible(r.env, a, t, 5, 5)) best = std::max(best, d_delta(r.env, t, s.position(), a.position()));
          }
          CHECK(od == best);
          ++checked;
        }
      }
    CHECK(checked > 50);
  }

  TEST_CASE("blindfold never moves, oracle dominates, aggregates reproduce") {
    const auto& ds = tiny();
    BlindfoldTrainConfig bc;
    bc.epochs = 3;
    const auto blind = train_blindfold(ds, bc).model;
    QAModel qa(mini_qa(ds), 1);
    const QAModel qa_before = qa;
    EvalOptions opt;
    opt.tiers = {2, 6, 10};
    const auto b = evaluate(BlindfoldAgent(blind, ds), ds.test, ds, opt);
    const auto o = evaluate(OracleAgent(qa, ds), ds.test, ds, opt);
    const auto s = evaluate(E2EAgent(pretrained(), qa, ds, "standard"), ds.test, ds, opt);
    REQUIRE(b.tiers.size() == 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(b.tiers[i].mean_d_delta == 0.0);
      CHECK(b.tiers[i].stop_rate == 1.0);
      CHECK(o.tiers[i].mean_d_delta >= s.tiers[i].mean_d_delta);
      CHECK(o.tiers[i].episodes == s.tiers[i].episodes);
      CHECK(o.tiers[i].qa_accuracy >= 0.0);
      CHECK(o.tiers[i].qa_accuracy <= 1.0);
    }
    for (const auto& e : b.episodes) {
      CHECK(e.stop == e.spawn);
      CHECK(e.d_delta == 0);
    }
    for (const auto& e : o.episodes) CHECK(e.d_delta <= e.initial_distance);
    // same spawns for every agent
    REQUIRE(b.episodes.size() == s.episodes.size());
    for (std::size_t i = 0; i < b.episodes.size(); ++i) CHECK(b.episodes[i].spawn == s.episodes[i].spawn);
    for (const auto* rep : {&b, &o, &s}) {
      std::map<int, int> skipped;
      for (const auto& t : rep->tiers) skipped[t.k] = t.skipped;
      const auto again = aggregate(rep->episodes, opt.tiers, skipped);
      for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].mean_d_delta == rep->tiers[i].mean_d_delta);
        CHECK(again[i].qa_accuracy == rep->tiers[i].qa_accuracy);
        CHECK(again[i].stop_rate == rep->tiers[i].stop_rate);
        CHECK(again[i].mean_length == rep->tiers[i].mean_length);
        CHECK(again[i].episodes == rep->tiers[i].episodes);
      }
    }
    std::size_t i = 0;
    for (const auto& p : qa.store) CHECK(p.value == qa_before.store[i++].value);
  }

  TEST_CASE("evaluation is independent of the job count") {
    const auto& ds = tiny();
    QAModel qa(mini_qa(ds), 2);
    EvalOptions opt;
    opt.tiers = {3, 7};
    const auto a = evaluate(E2EAgent(pretrained(), qa, ds), ds.test, ds, opt);
    opt.jobs = 4;
    const auto b = evaluate(E2EAgent(pretrained(), qa, ds), ds.test, ds, opt);
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
      CHECK(a.episodes[i].stop == b.episodes[i].stop);
      CHECK(a.episodes[i].answer == b.episodes[i].answer);
    }
  }

  TEST_CASE("experiment protocols: zero markers is standard, lambda 0 is finetune") {
    const auto& ds = tiny();
    ExperimentConfig cfg;
    cfg.seeds = {1};
    cfg.train.nav = mini_nav(ds);
    cfg.train.qa = mini_qa(ds);
    cfg.train.schedule.total_epochs = 1;
    cfg.train.schedule.warm_start_epochs = 1;
    cfg.blindfold.epochs = 2;
    cfg.calibration.epochs = 2;
    cfg.eval.tiers = {3, 6};
    cfg.marker_counts = {0, 2};
    cfg.lambdas = {0.0};
    const std::vector<SeedModels> models = {train_seed(ds, cfg, 1)};
    const auto cmp = compare_settings(ds, models, cfg);
    REQUIRE(cmp.rows.size() == 5u);
    const auto markers_curve = sweep_markers(ds, models, cfg);
    REQUIRE(markers_curve.points.size() == 2u);
    for (std::size_t t = 0; t < 2; ++t)
      CHECK(markers_curve.points[0].tiers[t].d_delta_mean == cmp.row("standard").tiers[t].d_delta_mean);
    for (std::size_t t = 0; t < 2; ++t) CHECK(cmp.row("blindfold").tiers[t].d_delta_mean == 0.0);

    // lambda 0 on the validation split against explicit fine-tuning there
    const auto lam = sweep_lambda(ds, models, cfg);
    auto run = calibrate_environments(models[0].nav, ds.val, ds, CalibrationMethod::Finetune, cfg.calibration, 1);
    const CalibratedAgent ft(models[0].nav, models[0].qa, ds, std::move(run.adapted), "finetune");
    EvalOptions opt = cfg.eval;
    opt.seed = 1;
    const auto rep = evaluate(ft, ds.val, ds, opt, "val");
    for (std::size_t t = 0; t < 2; ++t) CHECK(lam.points[0].tiers[t].d_delta_mean == rep.tiers[t].mean_d_delta);
  }

  TEST_CASE("mean and sample standard deviation") {
    CHECK(mean_of({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(stddev_of({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)));
    CHECK(stddev_of({3}) == 0.0);
  }
}
