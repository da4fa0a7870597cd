#include "eqa/nav_policy.hpp"

#include "eqa/nn/losses.hpp"

namespace eqa {

NavModel::NavModel(const NavConfig& cfg, std::uint64_t seed) : config(cfg) {
  if (cfg.vocab_size <= 0 || cfg.obs_dim <= 0) throw ShapeError("NavModel: vocab_size and obs_dim must be set");
  question = add_question_encoder(store, "nav.question", cfg.vocab_size, cfg.word_dim, cfg.question_hidden,
                                  cfg.question_layers);
  obs_encoder = nn::add_linear(store, "nav.obs_encoder", cfg.obs_dim, cfg.obs_embed);
  action_embedding = nn::add_embedding(store, "nav.action_embedding", kNumActions + 1, cfg.action_embed);
  core = nn::add_lstm(store, "nav.core", cfg.core_input(), cfg.hidden, cfg.layers);
  head = nn::add_linear(store, "nav.head", cfg.hidden, kNumActions);

  Rng rng(seed, {"nav-init"});
  nn::init_uniform(store, question.embedding.table, cfg.init_scale, rng);
  init_lstm(store, question.lstm, cfg.init_scale, cfg.forget_bias, rng);
  nn::init_uniform(store, obs_encoder.weight, cfg.init_scale, rng);
  nn::init_uniform(store, action_embedding.table, cfg.init_scale, rng);
  init_lstm(store, core, cfg.init_scale, cfg.forget_bias, rng);
  nn::init_uniform(store, head.weight, cfg.init_scale, rng);
}

NavEpisode make_nav_episode(const GridEnvironment& env, const std::vector<int>& question_ids, const ActionPath& path,
                            const ObservationSpec& spec) {
  NavEpisode ep;
  ep.question_ids = question_ids;
  const auto states = replay(env, path.start, path.actions);
  const auto steps = static_cast<nn::Index>(states.size());
  ep.observations.resize(spec.feature_dim(), steps);
  for (nn::Index t = 0; t < steps; ++t) ep.observations.col(t) = observe(env, states[t], spec).features;
  ep.prev_actions.push_back(kStartToken);
  for (Action a : path.actions) {
    ep.labels.push_back(static_cast<int>(a));
    ep.prev_actions.push_back(static_cast<int>(a));
  }
  ep.labels.push_back(static_cast<int>(Action::Stop));
  return ep;
}

Vec encode_question(const NavModel& model, const std::vector<int>& question_ids) {
  return encode_question(model.store, model.question, question_ids);
}

nn::LstmState<double> initial_hidden(const NavModel& model) { return nn::LstmState<double>::zeros(model.core); }

NavStepOutput nav_step(const NavModel& model, const Vec& obs_features, const Vec& qvec, int prev_action,
                       const nn::LstmState<double>& hidden) {
  const auto& cfg = model.config;
  if (qvec.size() != cfg.question_hidden) throw ShapeError("nav_step: question vector size mismatch");
  if (hidden.h.size() != model.core.depth()) throw ShapeError("nav_step: hidden state depth mismatch");
  Vec x(cfg.core_input());
  x.head(cfg.obs_embed) = nn::linear(model.store, model.obs_encoder, obs_features);
  x.segment(cfg.obs_embed, cfg.question_hidden) = qvec;
  const int ids[1] = {prev_action};
  x.tail(cfg.action_embed) = nn::embedding(model.store, model.action_embedding, std::span<const int>(ids, 1));
  NavStepOutput out{Vec(), hidden};
  nn::lstm_step(model.store, model.core, x, out.hidden);
  out.logits = nn::linear(model.store, model.head, out.hidden.top());
  return out;
}

NavTrace nav_forward(const NavModel& model, const NavEpisode& episode) {
  const auto& cfg = model.config;
  const nn::Index steps = episode.length();
  if (episode.observations.cols() != steps || static_cast<nn::Index>(episode.prev_actions.size()) != steps)
    throw ShapeError("nav_forward: inconsistent episode");
  NavTrace trace;
  trace.qvec = encode_question(model.store, model.question, episode.question_ids, &trace.question);
  trace.core_input.resize(cfg.core_input(), steps);
  trace.core_input.topRows(cfg.obs_embed) = nn::linear(model.store, model.obs_encoder, episode.observations);
  trace.core_input.middleRows(cfg.obs_embed, cfg.question_hidden) = trace.qvec.replicate(1, steps);
  trace.core_input.bottomRows(cfg.action_embed) =
      nn::embedding(model.store, model.action_embedding, std::span<const int>(episode.prev_actions));
  trace.core = nn::lstm_seq(model.store, model.core, trace.core_input);
  trace.logits = nn::linear(model.store, model.head, trace.core.top_h());
  return trace;
}

void nav_backward(NavModel& model, const NavEpisode& episode, const NavTrace& trace, const Mat& dlogits,
                  const Mat* dh_top_extra) {
  const auto& cfg = model.config;
  Mat dh = nn::linear_backward(model.store, model.head, trace.core.top_h(), dlogits);
  if (dh_top_extra) dh += *dh_top_extra;
  const Mat dx = nn::lstm_seq_backward(model.store, model.core, trace.core, dh);
  nn::linear_backward(model.store, model.obs_encoder, episode.observations, dx.topRows(cfg.obs_embed));
  const Vec dq = dx.middleRows(cfg.obs_embed, cfg.question_hidden).rowwise().sum();
  nn::embedding_backward(model.store, model.action_embedding, std::span<const int>(episode.prev_actions),
                         dx.bottomRows(cfg.action_embed));
  encode_question_backward(model.store, model.question, trace.question, dq);
}

namespace {

StepStats score(const Mat& logits, const std::vector<int>& labels, Mat* dlogits, double weight) {
  StepStats stats;
  stats.steps = static_cast<int>(labels.size());
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  const double inv = 1.0 / stats.steps;
  for (int t = 0; t < stats.steps; ++t) {
    const auto ce = nn::softmax_cross_entropy(logits.col(t), labels[t]);
    stats.loss += ce.loss;
    if (nn::argmax(logits.col(t)) == labels[t]) ++stats.correct;
    if (dlogits) dlogits->col(t) = ce.grad * (weight * inv);
  }
  stats.loss *= inv;
  return stats;
}

}  // namespace

StepStats imitation_loss(const NavModel& model, const NavEpisode& episode) {
  const NavTrace trace = nav_forward(model, episode);
  return score(trace.logits, episode.labels, nullptr, 0.0);
}

StepStats imitation_loss_backward(NavModel& model, const NavEpisode& episode, double weight) {
  const NavTrace trace = nav_forward(model, episode);
  Mat dlogits;
  const StepStats stats = score(trace.logits, episode.labels, &dlogits, weight);
  nav_backward(model, episode, trace, dlogits);
  return stats;
}

std::vector<Action> Trajectory::actions() const {
  std::vector<Action> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

std::vector<const Observation*> Trajectory::observations() const {
  std::vector<const Observation*> out;
  out.reserve(steps.size() + 1);
  for (const auto& s : steps) out.push_back(&s.observation);
  out.push_back(&final_observation);
  return out;
}

Trajectory rollout(const NavModel& model, const GridEnvironment& env, const std::vector<int>& question_ids,
                   const AgentState& spawn, int max_steps, const ObservationSpec& spec) {
  if (!is_valid_state(env, spawn)) throw PreconditionError("rollout: spawn is not a valid state");
  Trajectory traj;
  traj.spawn = spawn;
  AgentState state = spawn;
  Observation obs = observe(env, state, spec);
  if (max_steps > 0) {
    const Vec qvec = encode_question(model, question_ids);
    auto hidden = initial_hidden(model);
    int prev = kStartToken;
    for (;;) {
      if (static_cast<int>(traj.steps.size()) >= max_steps) break;
      auto out = nav_step(model, obs.features, qvec, prev, hidden);
      hidden = std::move(out.hidden);
      const auto action = static_cast<Action>(nn::argmax(out.logits));
      if (action == Action::Stop) {
        traj.terminated_by = Termination::Stop;
        break;
      }
      state = step(env, state, action);
      traj.steps.push_back({std::move(obs), action, state});
      obs = observe(env, state, spec);
      prev = static_cast<int>(action);
    }
  }
  traj.final_observation = std::move(obs);
  return traj;
}

}  // namespace eqa
