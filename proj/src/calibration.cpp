#include "eqa/calibration.hpp"

#include <algorithm>
#include <numeric>

#include "eqa/errors.hpp"
#include "eqa/nn/losses.hpp"
#include "eqa/nn/optim.hpp"

namespace eqa {

void CalibrationConfig::validate() const {
  const int max_markers = static_cast<int>(marker_types().size());
  if (n_markers < 1 || n_markers > max_markers)
    throw ConfigError("n_markers must be in [1, " + std::to_string(max_markers) + "], got " +
                      std::to_string(n_markers));
  if (min_distance < 0) throw ConfigError("min_distance must be non-negative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
  if (epochs < 0) throw ConfigError("calibration epochs must be non-negative");
  if (!(lr > 0.0)) throw ConfigError("calibration lr must be positive");
  if (max_placement_attempts < 1) throw ConfigError("max_placement_attempts must be positive");
}

GridEnvironment place_markers(const GridEnvironment& env, const CalibrationConfig& config,
                              const std::vector<std::string>& colors, Rng& rng) {
  config.validate();
  if (colors.empty()) throw PreconditionError("place_markers: empty color vocabulary");
  for (const auto& obj : env.objects())
    if (obj.is_marker) throw PreconditionError("place_markers: environment already has markers");

  std::vector<Position> candidates;
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) {
      const Cell& c = env.at(x, y);
      if (c.terrain == Terrain::Free && c.room_id && !c.occupant) candidates.push_back({x, y});
    }
  const auto n = static_cast<std::size_t>(config.n_markers);
  if (candidates.size() < n)
    throw PlacementError("only " + std::to_string(candidates.size()) + " free cells for " + std::to_string(n) +
                         " markers");

  for (int attempt = 0; attempt < config.max_placement_attempts; ++attempt) {
    // Greedy sequential placement over a shuffled candidate list.
    std::vector<Position> order = candidates;
    rng.shuffle(order);
    std::vector<Position> chosen;
    std::vector<std::vector<int>> fields;
    for (const Position& p : order) {
      bool ok = true;
      for (const auto& f : fields) {
        const int d = f[env.index(p.x, p.y)];
        if (d == kUnreachable || d < config.min_distance) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen.push_back(p);
      if (chosen.size() == n) break;
      fields.push_back(distance_field(env, p));
    }
    if (chosen.size() < n) continue;

    std::vector<std::string> types = marker_types();
    rng.shuffle(types);
    GridEnvironment out = env;
    for (std::size_t i = 0; i < n; ++i)
      out.add_object(types[i], colors[rng.uniform_index(colors.size())], chosen[i], true);
    return out;
  }
  throw PlacementError("could not place " + std::to_string(n) + " markers " + std::to_string(config.min_distance) +
                       " cells apart in " + env.env_id);
}

std::vector<MarkerEpisode> gen_marker_questions(const GridEnvironment& augmented, const ObservationSpec& spec,
                                                Rng& rng) {
  std::vector<MarkerEpisode> out;
  for (const auto& obj : augmented.objects()) {
    if (!obj.is_marker) continue;
    MarkerEpisode ep;
    ep.question.question_id = augmented.env_id + "/m" + std::to_string(out.size());
    ep.question.tokens = marker_question_tokens(obj.type_token);
    ep.question.qtype = QuestionType::Color;
    ep.question.target_object_id = obj.object_id;
    ep.question.answer_token = obj.color_token;
    ep.question.env_id = augmented.env_id;
    const GoalSet goal = goal_set(augmented, obj.object_id, spec);
    // A spawn already inside the goal set yields an empty path; redraw.
    for (int tries = 0; tries < 256; ++tries) {
      ep.path = shortest_action_path(augmented, random_state(augmented, rng), goal);
      if (!ep.path.actions.empty()) break;
    }
    if (ep.path.actions.empty()) throw EnvTooSmallError("every spawn sees marker " + obj.type_token);
    out.push_back(std::move(ep));
  }
  return out;
}

namespace {

std::vector<NavEpisode> episodes_for(const GridEnvironment& env, const std::vector<MarkerEpisode>& data,
                                     const Vocabulary& words, const ObservationSpec& spec) {
  std::vector<NavEpisode> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(make_nav_episode(env, words.encode(d.question.tokens), d.path, spec));
  return out;
}

}  // namespace

NavModel calibrate_distill(const NavModel& pretrained, const GridEnvironment& augmented,
                           const std::vector<MarkerEpisode>& episodes, const CalibrationConfig& config,
                           const Vocabulary& words, const ObservationSpec& spec, CalibrationStats* stats) {
  config.validate();
  NavModel student = pretrained;
  if (config.epochs == 0) return student;
  if (episodes.empty()) throw PreconditionError("calibration needs at least one marker episode");
  student.store.reset_optimizer();
  student.store.zero_grad();

  const auto data = episodes_for(augmented, episodes, words, spec);
  const double lambda = config.lambda;
  const bool use_teacher = lambda > 0.0;
  const bool use_policy = lambda < 1.0;
  // The teacher is frozen, so its hidden states depend only on the inputs.
  std::vector<Mat> teacher_h;
  if (use_teacher)
    for (const auto& ep : data) teacher_h.push_back(nav_forward(pretrained, ep).top_hidden());

  const nn::AdamConfig adam{config.lr};
  std::vector<std::size_t> order(data.size());
  bool first_step = true;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(config.seed, {"calib-shuffle", epoch});
    shuffle_rng.shuffle(order);
    double policy_sum = 0.0, distill_sum = 0.0;
    int correct = 0, steps = 0;
    for (std::size_t idx : order) {
      const NavEpisode& ep = data[idx];
      const NavTrace trace = nav_forward(student, ep);
      const int T = ep.length();
      Mat dlogits = Mat::Zero(trace.logits.rows(), T);
      for (int t = 0; t < T; ++t) {
        const auto ce = nn::softmax_cross_entropy(trace.logits.col(t), ep.labels[t]);
        policy_sum += ce.loss / T;
        if (nn::argmax(trace.logits.col(t)) == ep.labels[t]) ++correct;
        if (use_policy) dlogits.col(t) = ce.grad * ((1.0 - lambda) / T);
      }
      steps += T;
      Mat dh;
      if (use_teacher) {
        dh.resize(trace.top_hidden().rows(), T);
        for (int t = 0; t < T; ++t) {
          const auto c = nn::cosine_loss(trace.top_hidden().col(t), teacher_h[idx].col(t));
          distill_sum += c.loss;
          dh.col(t) = c.grad * lambda;
        }
      }
      nav_backward(student, ep, trace, dlogits, use_teacher ? &dh : nullptr);
      if (first_step && stats) stats->first_step_grad_norm = student.store.grad_norm();
      first_step = false;
      nn::adam_step(student.store, adam);
      if (!student.store.all_finite()) throw NumericError("calibration produced non-finite parameters");
    }
    if (stats) {
      stats->policy_loss.push_back(policy_sum / data.size());
      stats->distill_loss.push_back(distill_sum / data.size());
      stats->accuracy.push_back(static_cast<double>(correct) / std::max(1, steps));
    }
  }
  return student;
}

NavModel calibrate_finetune(const NavModel& pretrained, const GridEnvironment& augmented,
                            const std::vector<MarkerEpisode>& episodes, const CalibrationConfig& config,
                            const Vocabulary& words, const ObservationSpec& spec, CalibrationStats* stats) {
  CalibrationConfig cfg = config;
  cfg.lambda = 0.0;
  return calibrate_distill(pretrained, augmented, episodes, cfg, words, spec, stats);
}

double marker_accuracy(const NavModel& model, const GridEnvironment& augmented,
                       const std::vector<MarkerEpisode>& episodes, const Vocabulary& words,
                       const ObservationSpec& spec) {
  int correct = 0, steps = 0;
  for (const auto& ep : episodes_for(augmented, episodes, words, spec)) {
    const StepStats s = imitation_loss(model, ep);
    correct += s.correct;
    steps += s.steps;
  }
  return steps ? static_cast<double>(correct) / steps : 0.0;
}

}  // namespace eqa
