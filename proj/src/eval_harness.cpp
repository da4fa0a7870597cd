#include "eqa/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "eqa/errors.hpp"
#include "eqa/nn/losses.hpp"
#include "eqa/parallel.hpp"
#include "eqa/path_oracle.hpp"

namespace eqa {

int d_delta(const GridEnvironment& env, Position target, Position spawn, Position stop) {
  return geodesic_distance(env, spawn, target) - geodesic_distance(env, stop, target);
}

namespace {

AgentEpisode from_trajectory(const Trajectory& traj) {
  AgentEpisode ep;
  ep.stop = traj.stop_state();
  ep.actions = traj.actions();
  ep.terminated_by = traj.terminated_by;
  return ep;
}

std::string qa_answer(const QAModel& qa, const Dataset& ds, const std::vector<const Observation*>& obs,
                      const std::vector<int>& ids) {
  const Vec dist = answer(qa, last_frames(obs), encode_question(qa, ids));
  return ds.answers.token(static_cast<int>(nn::argmax(dist)));
}

}  // namespace

E2EAgent::E2EAgent(const NavModel& nav, const QAModel& qa, const Dataset& dataset, std::string name)
    : nav_(nav), qa_(qa), ds_(dataset), name_(std::move(name)) {}

AgentEpisode E2EAgent::run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                           int max_steps) const {
  const EvalOutcome out =
      eval_forward(nav_, qa_, record.env, question, spawn, max_steps, ds_.words, ds_.answers, ds_.obs_spec);
  AgentEpisode ep = from_trajectory(out.trajectory);
  ep.answer = out.answer;
  return ep;
}

BlindfoldAgent::BlindfoldAgent(const BlindfoldModel& model, const Dataset& dataset) : model_(model), ds_(dataset) {}

AgentEpisode BlindfoldAgent::run(const EnvRecord&, const Question& question, const AgentState& spawn, int) const {
  AgentEpisode ep;
  ep.stop = spawn;
  ep.terminated_by = Termination::Stop;
  const Vec dist = blindfold_answer(model_, ds_.words.encode(question.tokens));
  ep.answer = ds_.answers.token(static_cast<int>(nn::argmax(dist)));
  return ep;
}

OracleAgent::OracleAgent(const QAModel& qa, const Dataset& dataset) : qa_(qa), ds_(dataset) {}

AgentEpisode OracleAgent::run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                              int max_steps) const {
  const GoalSet goal = goal_set(record.env, question.target_object_id, ds_.obs_spec);
  const ActionPath path = shortest_action_path(record.env, spawn, goal);
  AgentEpisode ep;
  const std::size_t n = std::min<std::size_t>(path.size(), static_cast<std::size_t>(std::max(0, max_steps)));
  ep.actions.assign(path.actions.begin(), path.actions.begin() + static_cast<std::ptrdiff_t>(n));
  ep.terminated_by = n == path.size() ? Termination::Stop : Termination::MaxSteps;
  const auto states = replay(record.env, spawn, ep.actions);
  ep.stop = states.back();
  std::vector<Observation> obs;
  for (const auto& s : states) obs.push_back(observe(record.env, s, ds_.obs_spec));
  std::vector<const Observation*> ptrs;
  for (const auto& o : obs) ptrs.push_back(&o);
  ep.answer = qa_answer(qa_, ds_, ptrs, ds_.words.encode(question.tokens));
  return ep;
}

CalibratedAgent::CalibratedAgent(const NavModel& pretrained, const QAModel& qa, const Dataset& dataset,
                                 std::map<std::string, CalibratedEnv> adapted, std::string name)
    : pretrained_(pretrained), qa_(qa), ds_(dataset), adapted_(std::move(adapted)), name_(std::move(name)) {}

AgentEpisode CalibratedAgent::run(const EnvRecord& record, const Question& question, const AgentState& spawn,
                                  int max_steps) const {
  const auto it = adapted_.find(record.env.env_id);
  const GridEnvironment& env = it == adapted_.end() ? record.env : it->second.augmented;
  const NavModel& nav = it == adapted_.end() ? pretrained_ : it->second.nav;
  const EvalOutcome out =
      eval_forward(nav, qa_, env, question, spawn, max_steps, ds_.words, ds_.answers, ds_.obs_spec);
  AgentEpisode ep = from_trajectory(out.trajectory);
  ep.answer = out.answer;
  return ep;
}

int EvalOptions::max_steps(int k) const { return std::min(max_steps_cap, max_steps_mult * k + max_steps_base); }

std::vector<TierStats> aggregate(const std::vector<EpisodeRecord>& episodes, const std::vector<int>& tiers,
                                 const std::map<int, int>& skipped) {
  std::vector<TierStats> out;
  for (int k : tiers) {
    TierStats t;
    t.k = k;
    if (auto it = skipped.find(k); it != skipped.end()) t.skipped = it->second;
    double d = 0.0, len = 0.0, init = 0.0;
    int correct = 0, stops = 0;
    for (const auto& e : episodes) {
      if (e.k != k) continue;
      ++t.episodes;
      d += e.d_delta;
      len += e.steps;
      init += e.initial_distance;
      correct += e.correct;
      stops += e.stopped;
    }
    if (t.episodes > 0) {
      const double n = t.episodes;
      t.mean_d_delta = d / n;
      t.mean_d_delta_m = t.mean_d_delta * kMetersPerCell;
      t.qa_accuracy = correct / n;
      t.stop_rate = stops / n;
      t.mean_length = len / n;
      t.mean_initial_distance = init / n;
    }
    out.push_back(t);
  }
  return out;
}

EvalReport evaluate(const Agent& agent, const std::vector<EnvRecord>& records, const Dataset& dataset,
                    const EvalOptions& options, const std::string& split) {
  struct Job {
    std::size_t env;
    std::size_t question;
  };
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < records.size(); ++e)
    for (std::size_t q = 0; q < records[e].questions.size(); ++q) jobs.push_back({e, q});

  const std::size_t n_tiers = options.tiers.size();
  // One slot per (question, tier); unfilled slots are skipped spawns.
  std::vector<EpisodeRecord> slots(jobs.size() * n_tiers);
  std::vector<char> ok(jobs.size() * n_tiers, 0);
  parallel_for(jobs.size(), options.jobs, [&](std::size_t j) {
    const EnvRecord& rec = records[jobs[j].env];
    const Question& q = rec.questions[jobs[j].question];
    const GoalSet goal = goal_set(rec.env, q.target_object_id, dataset.obs_spec);
    const Position target = rec.env.object(q.target_object_id).position;
    for (std::size_t t = 0; t < n_tiers; ++t) {
      const int k = options.tiers[t];
      Rng rng(options.seed, {"eval-spawn", rec.env.env_id, q.question_id, k});
      AgentState spawn;
      try {
        spawn = spawn_at(rec.env, goal, k, rng);
      } catch (const EnvTooSmallError&) {
        continue;
      }
      const AgentEpisode ep = agent.run(rec, q, spawn, options.max_steps(k));
      EpisodeRecord& r = slots[j * n_tiers + t];
      r.env_id = rec.env.env_id;
      r.question_id = q.question_id;
      r.qtype = q.qtype;
      r.k = k;
      r.spawn = spawn;
      r.stop = ep.stop;
      r.initial_distance = geodesic_distance(rec.env, spawn.position(), target);
      r.final_distance = geodesic_distance(rec.env, ep.stop.position(), target);
      r.d_delta = r.initial_distance - r.final_distance;
      r.steps = static_cast<int>(ep.actions.size());
      r.stopped = ep.terminated_by == Termination::Stop;
      r.answer = ep.answer;
      r.truth = q.answer_token;
      r.correct = ep.answer == q.answer_token;
      ok[j * n_tiers + t] = 1;
    }
  });

  EvalReport report;
  report.agent = agent.name();
  report.split = split;
  report.options = options;
  std::map<int, int> skipped;
  for (int k : options.tiers) skipped[k] = 0;
  for (std::size_t t = 0; t < n_tiers; ++t)
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (ok[j * n_tiers + t])
        report.episodes.push_back(std::move(slots[j * n_tiers + t]));
      else
        ++skipped[options.tiers[t]];
    }
  report.tiers = aggregate(report.episodes, options.tiers, skipped);
  return report;
}

// ---------------------------------------------------------------------------

const char* to_string(CalibrationMethod m) { return m == CalibrationMethod::Distill ? "distill" : "finetune"; }

SeedModels train_seed(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed) {
  JointConfig jc = config.train;
  jc.seed = seed;
  JointResult jr = joint_train(dataset, jc);
  BlindfoldTrainConfig bc = config.blindfold;
  bc.seed = seed;
  BlindfoldTrainResult br = train_blindfold(dataset, bc);
  return {seed, std::move(jr.nav), std::move(jr.qa), std::move(br.model), std::move(jr.log)};
}

CalibrationRun calibrate_environments(const NavModel& pretrained, const std::vector<EnvRecord>& records,
                                      const Dataset& dataset, CalibrationMethod method,
                                      const CalibrationConfig& config, std::uint64_t seed, int jobs) {
  config.validate();
  std::vector<std::optional<CalibratedEnv>> slots(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const GridEnvironment& env = records[i].env;
    Rng place_rng(seed, {"markers", env.env_id});
    GridEnvironment augmented;
    try {
      augmented = place_markers(env, config, dataset.config.env.color_vocab, place_rng);
    } catch (const PlacementError&) {
      return;
    }
    Rng spawn_rng(seed, {"marker-spawns", env.env_id});
    const auto episodes = gen_marker_questions(augmented, dataset.obs_spec, spawn_rng);
    CalibrationConfig cfg = config;
    cfg.seed = derive_seed(seed, {"calibration", env.env_id});
    NavModel nav = method == CalibrationMethod::Distill
                       ? calibrate_distill(pretrained, augmented, episodes, cfg, dataset.words, dataset.obs_spec)
                       : calibrate_finetune(pretrained, augmented, episodes, cfg, dataset.words, dataset.obs_spec);
    slots[i] = CalibratedEnv{std::move(augmented), std::move(nav)};
  });
  CalibrationRun run;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i])
      run.adapted.emplace(records[i].env.env_id, std::move(*slots[i]));
    else
      run.placement_failures.push_back(records[i].env.env_id);
  }
  return run;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<TierSummary> summarize(const std::vector<EvalReport>& reports) {
  std::vector<TierSummary> out;
  if (reports.empty()) return out;
  for (std::size_t t = 0; t < reports.front().tiers.size(); ++t) {
    TierSummary s;
    s.k = reports.front().tiers[t].k;
    for (const auto& r : reports) {
      s.d_delta_per_seed.push_back(r.tiers.at(t).mean_d_delta);
      s.qa_per_seed.push_back(r.tiers.at(t).qa_accuracy);
    }
    s.d_delta_mean = mean_of(s.d_delta_per_seed);
    s.d_delta_std = stddev_of(s.d_delta_per_seed);
    s.qa_mean = mean_of(s.qa_per_seed);
    s.qa_std = stddev_of(s.qa_per_seed);
    out.push_back(std::move(s));
  }
  return out;
}

const SettingRow& Comparison::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw PreconditionError("no comparison row '" + name + "'");
}

namespace {

EvalOptions seeded(const EvalOptions& base, std::uint64_t seed) {
  EvalOptions o = base;
  o.seed = seed;
  return o;
}

}  // namespace

Comparison compare_settings(const Dataset& dataset, const std::vector<SeedModels>& models,
                            const ExperimentConfig& config) {
  Comparison cmp;
  cmp.tiers = config.eval.tiers;
  for (const char* name : {"blindfold", "oracle", "standard", "finetune", "distill"})
    cmp.rows.push_back({name, {}, {}});
  for (const auto& m : models) {
    const EvalOptions opt = seeded(config.eval, m.seed);
    const auto& test = dataset.test;
    cmp.rows[0].reports.push_back(evaluate(BlindfoldAgent(m.blindfold, dataset), test, dataset, opt));
    cmp.rows[1].reports.push_back(evaluate(OracleAgent(m.qa, dataset), test, dataset, opt));
    cmp.rows[2].reports.push_back(evaluate(E2EAgent(m.nav, m.qa, dataset, "standard"), test, dataset, opt));
    for (auto [idx, method] : {std::pair{3, CalibrationMethod::Finetune}, std::pair{4, CalibrationMethod::Distill}}) {
      auto run = calibrate_environments(m.nav, test, dataset, method, config.calibration, m.seed, config.eval.jobs);
      const CalibratedAgent agent(m.nav, m.qa, dataset, std::move(run.adapted), to_string(method));
      cmp.rows[idx].reports.push_back(evaluate(agent, test, dataset, opt));
    }
  }
  for (auto& r : cmp.rows) r.tiers = summarize(r.reports);
  return cmp;
}

Curve sweep_markers(const Dataset& dataset, const std::vector<SeedModels>& models, const ExperimentConfig& config) {
  Curve curve;
  curve.parameter = "markers";
  curve.split = "test";
  curve.tiers = config.eval.tiers;
  std::vector<int> counts = config.marker_counts;
  for (int n : counts) {
    std::vector<EvalReport> reports;
    for (const auto& m : models) {
      const EvalOptions opt = seeded(config.eval, m.seed);
      if (n == 0) {
        reports.push_back(evaluate(E2EAgent(m.nav, m.qa, dataset, "standard"), dataset.test, dataset, opt));
        continue;
      }
      CalibrationConfig cc = config.calibration;
      cc.n_markers = n;
      auto run = calibrate_environments(m.nav, dataset.test, dataset, CalibrationMethod::Distill, cc, m.seed,
                                        config.eval.jobs);
      const CalibratedAgent agent(m.nav, m.qa, dataset, std::move(run.adapted), "distill");
      reports.push_back(evaluate(agent, dataset.test, dataset, opt));
    }
    curve.points.push_back({static_cast<double>(n), summarize(reports)});
  }
  return curve;
}

Curve sweep_lambda(const Dataset& dataset, const std::vector<SeedModels>& models, const ExperimentConfig& config) {
  Curve curve;
  curve.parameter = "lambda";
  curve.split = "val";
  curve.tiers = config.eval.tiers;
  for (double lambda : config.lambdas) {
    std::vector<EvalReport> reports;
    for (const auto& m : models) {
      CalibrationConfig cc = config.calibration;
      cc.lambda = lambda;
      auto run = calibrate_environments(m.nav, dataset.val, dataset, CalibrationMethod::Distill, cc, m.seed,
                                        config.eval.jobs);
      const CalibratedAgent agent(m.nav, m.qa, dataset, std::move(run.adapted), "distill");
      reports.push_back(evaluate(agent, dataset.val, dataset, seeded(config.eval, m.seed), "val"));
    }
    curve.points.push_back({lambda, summarize(reports)});
  }
  return curve;
}

}  // namespace eqa
