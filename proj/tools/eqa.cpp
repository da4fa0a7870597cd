// eqa: dataset generation, training, calibration, evaluation, sweeps and
// rendering from the command line. Exit codes: 0 ok, 1 usage/config, 2 runtime.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "eqa/calibration.hpp"
#include "eqa/errors.hpp"
#include "eqa/eval_harness.hpp"
#include "eqa/io/config.hpp"
#include "eqa/io/render.hpp"
#include "eqa/io/serialize.hpp"
#include "eqa/training_data.hpp"

namespace fs = std::filesystem;
using namespace eqa;
using io::Json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "YAML run configuration");
  cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set train.epochs=4");
  cmd->add_option("--jobs", c.jobs, "Worker threads for parallel-safe stages");
  cmd->add_option("--seed", c.seed, "Training seed (train.seed)");
}

io::RunConfig resolve(const Common& c, std::vector<std::string> extra = {}) {
  std::vector<std::string> overrides = c.overrides;
  if (c.jobs) overrides.push_back("jobs=" + std::to_string(*c.jobs));
  if (c.seed) overrides.push_back("train.seed=" + std::to_string(*c.seed));
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  const std::string text = c.config_path.empty() ? std::string() : io::read_file(c.config_path);
  return io::parse_config(text, overrides, c.config_path.empty() ? "config" : c.config_path);
}

void snapshot(const io::RunConfig& cfg, const std::string& dir) {
  io::write_file_atomic((fs::path(dir) / "config.yaml").string(), io::to_yaml(cfg));
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string lambda_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string adapted_name(const std::string& env_id, CalibrationMethod m, double lambda, int markers,
                         std::uint64_t seed) {
  return env_id + "_" + to_string(m) + "_lambda" + lambda_tag(lambda) + "_m" + std::to_string(markers) + "_seed" +
         std::to_string(seed);
}

// --- commands ---------------------------------------------------------------

int cmd_gen_data(const Common& c, const std::string& out) {
  const auto cfg = resolve(c);
  const Dataset ds = build_dataset(cfg.data);
  io::save_dataset(ds, out);
  snapshot(cfg, out);
  std::cout << "wrote " << ds.train.size() + ds.val.size() + ds.test.size() << " environments ("
            << ds.question_count(ds.train) << "/" << ds.question_count(ds.val) << "/" << ds.question_count(ds.test)
            << " questions) to " << out << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& data, const std::string& mode, const std::string& out) {
  std::vector<std::string> extra;
  if (!mode.empty()) extra.push_back("train.mode=" + mode);
  const auto cfg = resolve(c, extra);
  const Dataset ds = io::load_dataset(data);
  io::ensure_dir(out);
  snapshot(cfg, out);
  const Json meta = {{"seed", cfg.train_seed}, {"mode", cfg.train_mode}};
  try {
    if (cfg.train_mode == "nav") {
      NavTrainConfig tc{cfg.joint.schedule.total_epochs, cfg.joint.lr, cfg.joint.batch, cfg.train_seed, cfg.joint.nav};
      const auto r = train_navigation(ds, tc);
      io::save_checkpoint(join_path(out, "nav.ckpt"), r.model, meta);
      io::write_file_atomic(join_path(out, "curve.csv"), io::training_curve_csv(r.curve));
    } else if (cfg.train_mode == "qa") {
      QATrainConfig tc{cfg.joint.schedule.total_epochs, cfg.joint.lr, cfg.joint.batch, cfg.train_seed, cfg.joint.qa};
      const auto r = train_qa(ds, tc);
      io::save_checkpoint(join_path(out, "qa.ckpt"), r.model, meta);
      io::write_file_atomic(join_path(out, "curve.csv"), io::training_curve_csv(r.curve));
    } else {
      JointConfig jc = cfg.joint;
      jc.seed = cfg.train_seed;
      const auto r = joint_train(ds, jc);
      io::save_checkpoint(join_path(out, "nav.ckpt"), r.nav, meta);
      io::save_checkpoint(join_path(out, "qa.ckpt"), r.qa, meta);
      io::write_file_atomic(join_path(out, "curve.csv"), io::training_curve_csv(r.log));
      BlindfoldTrainConfig bc = cfg.blindfold;
      bc.seed = cfg.train_seed;
      io::save_checkpoint(join_path(out, "blindfold.ckpt"), train_blindfold(ds, bc).model, meta);
    }
  } catch (const NumericError& e) {
    io::write_file_atomic(join_path(out, "failure.json"),
                          Json{{"error", e.what()}, {"mode", cfg.train_mode}, {"seed", cfg.train_seed}}.dump(1) + "\n");
    throw;
  }
  std::cout << "trained " << cfg.train_mode << " model(s) into " << out << "\n";
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& data, const std::string& ckpt, const std::string& out,
                  std::optional<std::string> method, std::optional<double> lambda, std::optional<int> markers) {
  std::vector<std::string> extra;
  if (method) extra.push_back("calibration.method=" + *method);
  if (lambda) extra.push_back("calibration.lambda=" + io::Json(*lambda).dump());
  if (markers) extra.push_back("calibration.n_markers=" + std::to_string(*markers));
  const auto cfg = resolve(c, extra);
  const Dataset ds = io::load_dataset(data);
  const NavModel nav = io::load_nav(ckpt);
  io::ensure_dir(out);
  snapshot(cfg, out);
  const auto& records = ds.split(cfg.eval_split);
  const auto run = calibrate_environments(nav, records, ds, cfg.calibration_method, cfg.calibration, cfg.train_seed,
                                          cfg.jobs);
  Json index = Json::array();
  for (const auto& [env_id, adapted] : run.adapted) {
    const std::string name = adapted_name(env_id, cfg.calibration_method, cfg.calibration.lambda,
                                          cfg.calibration.n_markers, cfg.train_seed);
    const Json meta = {{"env_id", env_id},
                       {"method", to_string(cfg.calibration_method)},
                       {"lambda", cfg.calibration.lambda},
                       {"n_markers", cfg.calibration.n_markers},
                       {"seed", cfg.train_seed}};
    io::save_checkpoint(join_path(out, name + ".ckpt"), adapted.nav, meta);
    io::write_file_atomic(join_path(out, name + ".env.json"), io::env_to_json({adapted.augmented, {}}).dump(1) + "\n");
    index.push_back({{"env_id", env_id}, {"checkpoint", name + ".ckpt"}, {"environment", name + ".env.json"}});
  }
  for (const auto& id : run.placement_failures) std::cerr << "placement failed for " << id << "; skipped\n";
  io::write_file_atomic(join_path(out, "calibration.json"),
                        Json{{"adapted", index}, {"placement_failures", run.placement_failures}}.dump(1) + "\n");
  std::cout << "adapted " << run.adapted.size() << " environment(s) into " << out << "\n";
  return 0;
}

std::map<std::string, CalibratedEnv> load_calibrated(const std::string& dir) {
  const Json index = Json::parse(io::read_file(join_path(dir, "calibration.json")));
  std::map<std::string, CalibratedEnv> out;
  for (const auto& e : index.at("adapted")) {
    CalibratedEnv ce{io::env_from_json(Json::parse(io::read_file(join_path(dir, e.at("environment"))))).env,
                     io::load_nav(join_path(dir, e.at("checkpoint")))};
    out.emplace(e.at("env_id").get<std::string>(), std::move(ce));
  }
  return out;
}

int cmd_eval(const Common& c, const std::string& data, const std::string& nav_path, const std::string& qa_path,
             const std::string& blindfold_path, const std::string& calibrated_dir, const std::string& oracle_qa,
             const std::string& tiers, const std::string& out) {
  std::vector<std::string> extra;
  if (!tiers.empty()) extra.push_back("eval.tiers=[" + tiers + "]");
  const auto cfg = resolve(c, extra);
  const Dataset ds = io::load_dataset(data);
  io::ensure_dir(out);
  snapshot(cfg, out);
  EvalOptions opt = cfg.eval;
  opt.seed = cfg.train_seed;
  opt.jobs = cfg.jobs;
  const auto& records = ds.split(cfg.eval_split);

  std::optional<NavModel> nav;
  std::optional<QAModel> qa;
  if (!nav_path.empty()) nav = io::load_nav(nav_path);
  if (!qa_path.empty()) qa = io::load_qa(qa_path);
  std::vector<EvalReport> reports;
  if (!blindfold_path.empty()) {
    const BlindfoldModel bf = io::load_blindfold(blindfold_path);
    reports.push_back(evaluate(BlindfoldAgent(bf, ds), records, ds, opt, cfg.eval_split));
  }
  if (!oracle_qa.empty()) {
    const QAModel oq = io::load_qa(oracle_qa);
    reports.push_back(evaluate(OracleAgent(oq, ds), records, ds, opt, cfg.eval_split));
  }
  if (nav || !calibrated_dir.empty()) {
    if (!nav || !qa) throw ConfigError("eval needs --nav and --qa checkpoints");
    if (calibrated_dir.empty())
      reports.push_back(evaluate(E2EAgent(*nav, *qa, ds, "standard"), records, ds, opt, cfg.eval_split));
    else
      reports.push_back(evaluate(CalibratedAgent(*nav, *qa, ds, load_calibrated(calibrated_dir), "calibrated"),
                                 records, ds, opt, cfg.eval_split));
  }
  if (reports.empty()) throw ConfigError("eval: give --nav/--qa, --blindfold or --oracle-qa");
  for (const auto& r : reports) {
    io::write_file_atomic(join_path(out, r.agent + ".report.json"), io::report_to_json(r).dump(1) + "\n");
    io::write_file_atomic(join_path(out, r.agent + ".report.csv"), io::report_csv(r));
    std::cout << r.agent << ":\n" << io::report_csv(r);
  }
  return 0;
}

std::vector<SeedModels> models_for(const io::RunConfig& cfg, const Dataset& ds, const std::string& out) {
  std::vector<SeedModels> models;
  const ExperimentConfig ec = cfg.experiment();
  for (auto seed : cfg.seeds) {
    const std::string dir = join_path(out, "seed" + std::to_string(seed));
    SeedModels m;
    if (fs::exists(join_path(dir, "nav.ckpt")) && fs::exists(join_path(dir, "qa.ckpt")) &&
        fs::exists(join_path(dir, "blindfold.ckpt"))) {
      m.seed = seed;
      m.nav = io::load_nav(join_path(dir, "nav.ckpt"));
      m.qa = io::load_qa(join_path(dir, "qa.ckpt"));
      m.blindfold = io::load_blindfold(join_path(dir, "blindfold.ckpt"));
      std::cout << "seed " << seed << ": reusing checkpoints in " << dir << "\n";
    } else {
      std::cout << "seed " << seed << ": training\n" << std::flush;
      m = train_seed(ds, ec, seed);
      const Json meta = {{"seed", seed}, {"mode", "e2e"}};
      io::save_checkpoint(join_path(dir, "nav.ckpt"), m.nav, meta);
      io::save_checkpoint(join_path(dir, "qa.ckpt"), m.qa, meta);
      io::save_checkpoint(join_path(dir, "blindfold.ckpt"), m.blindfold, meta);
      io::write_file_atomic(join_path(dir, "curve.csv"), io::training_curve_csv(m.log));
    }
    models.push_back(std::move(m));
  }
  return models;
}

int cmd_sweep(const Common& c, const std::string& data, const std::string& kind, const std::string& lambdas,
              const std::string& markers, const std::string& out) {
  std::vector<std::string> extra;
  if (!lambdas.empty()) extra.push_back("sweep.lambdas=[" + lambdas + "]");
  if (!markers.empty()) extra.push_back("sweep.markers=[" + markers + "]");
  const auto cfg = resolve(c, extra);
  const Dataset ds = io::load_dataset(data);
  io::ensure_dir(out);
  snapshot(cfg, out);
  const auto models = models_for(cfg, ds, out);
  const ExperimentConfig ec = cfg.experiment();
  const bool all = kind == "all";
  if (all || kind == "compare") {
    const Comparison cmp = compare_settings(ds, models, ec);
    io::write_file_atomic(join_path(out, "comparison.json"), io::comparison_to_json(cmp).dump(1) + "\n");
    io::write_file_atomic(join_path(out, "comparison.txt"), io::comparison_table(cmp));
    std::cout << io::comparison_table(cmp);
  }
  if (all || kind == "lambda") {
    const Curve curve = sweep_lambda(ds, models, ec);
    io::write_file_atomic(join_path(out, "lambda_curve.json"), io::curve_to_json(curve).dump(1) + "\n");
    io::write_file_atomic(join_path(out, "lambda_curve.csv"), io::curve_csv(curve));
    std::cout << io::curve_csv(curve);
  }
  if (all || kind == "markers") {
    const Curve curve = sweep_markers(ds, models, ec);
    io::write_file_atomic(join_path(out, "marker_curve.json"), io::curve_to_json(curve).dump(1) + "\n");
    io::write_file_atomic(join_path(out, "marker_curve.csv"), io::curve_csv(curve));
    std::cout << io::curve_csv(curve);
  }
  return 0;
}

int cmd_render(const Common& c, const std::string& data, const std::string& question_id, int k,
               const std::string& nav_path, const std::string& out) {
  const auto cfg = resolve(c);
  const Dataset ds = io::load_dataset(data);
  const EnvRecord* rec = nullptr;
  const Question* q = nullptr;
  for (const char* split : {"train", "val", "test"})
    for (const auto& r : ds.split(split))
      for (const auto& qq : r.questions)
        if (qq.question_id == question_id) {
          rec = &r;
          q = &qq;
        }
  if (!q) throw ConfigError("render: no question '" + question_id + "'");
  Rng rng(cfg.train_seed, {"eval-spawn", rec->env.env_id, q->question_id, k});
  const AgentState spawn = spawn_at(rec->env, q->target_object_id, k, rng, ds.obs_spec);
  io::RenderEpisode ep{&rec->env, q->target_object_id, spawn, {}, ""};
  std::string title;
  for (const auto& t : q->tokens) title += (title.empty() ? "" : " ") + t;
  ep.title = title + "  [" + q->answer_token + "]  T-" + std::to_string(k);
  if (!nav_path.empty()) {
    const NavModel nav = io::load_nav(nav_path);
    const EvalOptions opt = cfg.eval;
    ep.actions = rollout(nav, rec->env, ds.words.encode(q->tokens), spawn, opt.max_steps(k), ds.obs_spec).actions();
  }
  io::ensure_dir(out);
  const std::string stem = question_id;
  std::string safe = stem;
  for (auto& ch : safe)
    if (ch == '/') ch = '_';
  io::write_file_atomic(join_path(out, safe + ".txt"), io::render_ascii(ep));
  io::write_file_atomic(join_path(out, safe + ".svg"), io::render_svg(ep));
  snapshot(cfg, out);
  std::cout << io::render_ascii(ep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EmbodiedQA gridworld lab"};
  app.require_subcommand(1);

  Common gen_c, train_c, cal_c, eval_c, sweep_c, render_c;
  std::string out, data, mode, ckpt, nav, qa, blindfold, calibrated, oracle_qa, tiers, kind = "all", lambdas, markers,
      question;
  std::optional<std::string> method;
  std::optional<double> lambda;
  std::optional<int> n_markers;
  int k = 10;

  auto* gen = app.add_subcommand("gen-data", "Generate a dataset directory");
  add_common(gen, gen_c);
  gen->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train navigation, QA or both");
  add_common(train, train_c);
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--mode", mode, "nav | qa | e2e")->check(CLI::IsMember({"nav", "qa", "e2e"}));
  train->add_option("--out", out, "Checkpoint directory")->required();

  auto* cal = app.add_subcommand("calibrate", "Place markers and adapt a navigation checkpoint per environment");
  add_common(cal, cal_c);
  cal->add_option("--data", data, "Dataset directory")->required();
  cal->add_option("--ckpt", ckpt, "Pretrained navigation checkpoint")->required();
  cal->add_option("--method", method, "distill | finetune");
  cal->add_option("--lambda", lambda, "Distillation weight");
  cal->add_option("--markers", n_markers, "Markers per environment (1-5)");
  cal->add_option("--out", out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate agents at spawn tiers");
  add_common(ev, eval_c);
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--nav", nav, "Navigation checkpoint");
  ev->add_option("--qa", qa, "QA checkpoint");
  ev->add_option("--blindfold", blindfold, "Blindfold checkpoint");
  ev->add_option("--calibrated", calibrated, "Directory written by calibrate");
  ev->add_option("--oracle-qa", oracle_qa, "QA checkpoint for the shortest-path oracle agent");
  ev->add_option("--tiers", tiers, "Comma-separated spawn distances, e.g. 10,20,30");
  ev->add_option("--out", out, "Output directory")->required();

  auto* sw = app.add_subcommand("sweep", "Settings comparison, lambda sweep and marker sweep over seeds");
  add_common(sw, sweep_c);
  sw->add_option("--data", data, "Dataset directory")->required();
  sw->add_option("--kind", kind, "compare | lambda | markers | all")
      ->check(CLI::IsMember({"compare", "lambda", "markers", "all"}));
  sw->add_option("--lambda", lambdas, "Comma-separated lambda values");
  sw->add_option("--markers", markers, "Comma-separated marker counts");
  sw->add_option("--out", out, "Output directory")->required();

  auto* rd = app.add_subcommand("render", "Top-down ASCII and SVG map of one episode");
  add_common(rd, render_c);
  rd->add_option("--data", data, "Dataset directory")->required();
  rd->add_option("--question", question, "Question id, e.g. test-000/q0")->required();
  rd->add_option("--k", k, "Spawn distance in actions");
  rd->add_option("--nav", nav, "Navigation checkpoint (omit for a 0-step episode)");
  rd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(gen_c, out);
    if (*train) return cmd_train(train_c, data, mode, out);
    if (*cal) return cmd_calibrate(cal_c, data, ckpt, out, method, lambda, n_markers);
    if (*ev) return cmd_eval(eval_c, data, nav, qa, blindfold, calibrated, oracle_qa, tiers, out);
    if (*sw) return cmd_sweep(sweep_c, data, kind, lambdas, markers, out);
    if (*rd) return cmd_render(render_c, data, question, k, nav, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
