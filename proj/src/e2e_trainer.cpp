#include "eqa/e2e_trainer.hpp"

#include <algorithm>
#include <cmath>

#include "eqa/nn/losses.hpp"
#include "eqa/nn/optim.hpp"
#include "eqa/training_data.hpp"

namespace eqa {

double TrainSchedule::mix_at(int epoch) const {
  if (epoch < warm_start_epochs) return 0.0;
  if (kind == Kind::Constant) return std::clamp(mix_max, 0.0, 1.0);
  const double joint_epochs = std::max(1, total_epochs - warm_start_epochs);
  const double ramp = std::max(1.0, ramp_fraction * joint_epochs);
  const double t = static_cast<double>(epoch - warm_start_epochs) / ramp;
  return std::clamp(mix_max * std::min(1.0, t), 0.0, 1.0);
}

NavConfig resolve_nav_config(NavConfig cfg, const Dataset& dataset) {
  if (cfg.vocab_size == 0) cfg.vocab_size = dataset.words.size();
  if (cfg.obs_dim == 0) cfg.obs_dim = dataset.obs_spec.feature_dim();
  return cfg;
}

QAConfig resolve_qa_config(QAConfig cfg, const Dataset& dataset) {
  if (cfg.vocab_size == 0) cfg.vocab_size = dataset.words.size();
  if (cfg.obs_dim == 0) cfg.obs_dim = dataset.obs_spec.feature_dim();
  if (cfg.n_answers == 0) cfg.n_answers = dataset.answers.size();
  return cfg;
}

namespace {

struct LoopOptions {
  int epochs = 0;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 1;
  double w_nav = 1.0;
  double w_qa = 1.0;
  TrainSchedule schedule;
};

Mat path_frames(const GridEnvironment& env, const ActionPath& path, const ObservationSpec& spec) {
  const auto states = replay(env, path.start, path.actions);
  std::vector<Observation> obs;
  const std::size_t first = states.size() > kQAFrames ? states.size() - kQAFrames : 0;
  for (std::size_t i = first; i < states.size(); ++i) obs.push_back(observe(env, states[i], spec));
  std::vector<const Observation*> ptrs;
  for (const auto& o : obs) ptrs.push_back(&o);
  return last_frames(ptrs);
}

double qa_accuracy_on(const Dataset& ds, const QAModel& qa, const std::vector<TrainItem>& items) {
  if (items.empty()) return 0.0;
  int correct = 0;
  for (const auto& item : items) {
    const auto& rec = ds.train[item.ref.env];
    const auto& q = rec.questions[item.ref.question];
    const Mat frames = path_frames(rec.env, item.path, ds.obs_spec);
    const Vec dist = answer(qa, frames, encode_question(qa, ds.words.encode(q.tokens)));
    if (nn::argmax(dist) == ds.answers.index(q.answer_token)) ++correct;
  }
  return static_cast<double>(correct) / items.size();
}

// Shared loop behind train_navigation, train_qa and joint_train. Either model
// pointer may be null, in which case that module is skipped entirely.
std::vector<EpochLog> run_training(const Dataset& ds, NavModel* nav, QAModel* qa, const LoopOptions& opt,
                                   const Validator& validator, double* first_batch_nav_loss) {
  if (ds.train.empty() || ds.question_count(ds.train) == 0)
    throw PreconditionError("training needs at least one training question");
  const GoalCache goals(ds.train, ds.obs_spec);
  const nn::AdamConfig adam{opt.lr};
  std::vector<EpochLog> log;
  bool first_batch = true;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const auto items = sample_epoch(ds.train, goals, opt.seed, epoch);
    const double mix = (nav && qa) ? opt.schedule.mix_at(epoch) : 0.0;
    EpochLog entry;
    entry.epoch = epoch;
    entry.mix = mix;
    int nav_steps = 0, nav_correct = 0, qa_correct = 0;
    double nav_loss_sum = 0.0, qa_loss_sum = 0.0;

    for (std::size_t start = 0; start < items.size(); start += opt.batch) {
      const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(opt.batch));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      double batch_nav_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& item = items[i];
        const auto& rec = ds.train[item.ref.env];
        const auto& q = rec.questions[item.ref.question];
        const auto ids = ds.words.encode(q.tokens);
        Mat gt_frames;
        if (nav) {
          const NavEpisode ep = make_nav_episode(rec.env, ids, item.path, ds.obs_spec);
          if (qa) {
            gt_frames.resize(ep.observations.rows(), kQAFrames);
            for (int j = 0; j < kQAFrames; ++j) {
              const auto src = std::max<nn::Index>(0, ep.observations.cols() - kQAFrames + j);
              gt_frames.col(j) = ep.observations.col(src);
            }
          }
          const StepStats s = imitation_loss_backward(*nav, ep, opt.w_nav * inv_batch);
          nav_loss_sum += s.loss;
          batch_nav_loss += s.loss;
          nav_steps += s.steps;
          nav_correct += s.correct;
        } else {
          gt_frames = path_frames(rec.env, item.path, ds.obs_spec);
        }
        if (qa) {
          Rng mix_rng(opt.seed, {"qa-mix", epoch, static_cast<std::uint64_t>(i)});
          Mat frames;
          if (nav && mix_rng.bernoulli(mix)) {
            const Trajectory traj = rollout(*nav, rec.env, ids, item.path.start,
                                            max_steps_for(static_cast<int>(item.path.size())), ds.obs_spec);
            frames = last_frames(traj.observations());
          } else {
            frames = std::move(gt_frames);
          }
          const QAStats s = qa_loss_backward(*qa, frames, ids, ds.answers.index(q.answer_token), opt.w_qa * inv_batch);
          qa_loss_sum += s.loss;
          qa_correct += s.correct;
        }
      }
      if (nav) {
        if (first_batch && first_batch_nav_loss) *first_batch_nav_loss = batch_nav_loss * inv_batch;
        nn::adam_step(nav->store, adam);
        if (!nav->store.all_finite()) throw NumericError("navigation parameters became non-finite");
      }
      if (qa) {
        nn::adam_step(qa->store, adam);
        if (!qa->store.all_finite()) throw NumericError("QA parameters became non-finite");
      }
      first_batch = false;
    }
    const double n = static_cast<double>(items.size());
    if (nav) {
      entry.nav_loss = nav_loss_sum / n;
      entry.nav_accuracy = static_cast<double>(nav_correct) / std::max(1, nav_steps);
    }
    if (qa) {
      entry.qa_loss = qa_loss_sum / n;
      entry.qa_accuracy = qa_correct / n;
    }
    if (validator && nav && qa) {
      const auto [d, acc] = validator(*nav, *qa, epoch);
      entry.val_d_delta = d;
      entry.val_qa_accuracy = acc;
    }
    log.push_back(entry);
  }
  return log;
}

}  // namespace

JointResult joint_train(const Dataset& dataset, const JointConfig& config, const Validator& validator) {
  if (config.w_nav < 0 || config.w_qa < 0) throw ConfigError("loss weights must be non-negative");
  JointResult result{NavModel(resolve_nav_config(config.nav, dataset), derive_seed(config.seed, {"nav-model"})),
                     QAModel(resolve_qa_config(config.qa, dataset), derive_seed(config.seed, {"qa-model"})),
                     {},
                     0.0};
  LoopOptions opt;
  opt.epochs = config.schedule.total_epochs;
  opt.lr = config.lr;
  opt.batch = config.batch;
  opt.seed = config.seed;
  opt.w_nav = config.w_nav;
  opt.w_qa = config.w_qa;
  opt.schedule = config.schedule;
  result.log = run_training(dataset, &result.nav, &result.qa, opt, validator, &result.first_batch_nav_loss);
  return result;
}

NavTrainResult train_navigation(const Dataset& dataset, const NavTrainConfig& config) {
  NavTrainResult result{NavModel(resolve_nav_config(config.model, dataset), derive_seed(config.seed, {"nav-model"})),
                        {},
                        0.0};
  LoopOptions opt;
  opt.epochs = config.epochs;
  opt.lr = config.lr;
  opt.batch = config.batch;
  opt.seed = config.seed;
  result.curve = run_training(dataset, &result.model, nullptr, opt, {}, &result.first_batch_loss);
  return result;
}

QATrainResult train_qa(const Dataset& dataset, const QATrainConfig& config) {
  QATrainResult result{QAModel(resolve_qa_config(config.model, dataset), derive_seed(config.seed, {"qa-model"})), {},
                       0.0};
  const GoalCache goals(dataset.train, dataset.obs_spec);
  result.initial_accuracy = qa_accuracy_on(dataset, result.model, sample_epoch(dataset.train, goals, config.seed, 0));
  LoopOptions opt;
  opt.epochs = config.epochs;
  opt.lr = config.lr;
  opt.batch = config.batch;
  opt.seed = config.seed;
  result.curve = run_training(dataset, nullptr, &result.model, opt, {}, nullptr);
  return result;
}

EvalOutcome eval_forward(const NavModel& nav, const QAModel& qa, const GridEnvironment& env, const Question& question,
                         const AgentState& spawn, int max_steps, const Vocabulary& words, const Vocabulary& answers,
                         const ObservationSpec& spec) {
  const auto ids = words.encode(question.tokens);
  EvalOutcome out;
  out.trajectory = rollout(nav, env, ids, spawn, max_steps, spec);
  out.distribution = answer(qa, last_frames(out.trajectory.observations()), encode_question(qa, ids));
  out.answer = answers.token(static_cast<int>(nn::argmax(out.distribution)));
  return out;
}

}  // namespace eqa
