#include "eqa/io/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "eqa/errors.hpp"

namespace eqa::io {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string where(const std::string& source, const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return source;
  return source + ":" + std::to_string(mark.line + 1);
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key, const std::string& source) {
  if (!node.IsScalar()) throw ConfigError(where(source, node) + ": '" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(source, node) + ": '" + key + "' has an invalid value '" + node.Scalar() + "'");
  }
}

template <typename T>
std::vector<T> sequence(const YAML::Node& node, const std::string& key, const std::string& source) {
  if (!node.IsSequence()) throw ConfigError(where(source, node) + ": '" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : node) out.push_back(scalar<T>(item, key, source));
  return out;
}

// One configurable key: how to read it from YAML and how to print it.
struct Field {
  std::function<void(RunConfig&, const YAML::Node&, const std::string& key, const std::string& source)> read;
  std::function<YAML::Node(const RunConfig&)> write;
};

template <typename T, typename Get>
Field scalar_field(Get get) {
  return {[get](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
            get(c) = scalar<T>(n, k, s);
          },
          [get](const RunConfig& c) {
            auto& v = get(const_cast<RunConfig&>(c));
            if constexpr (std::is_same_v<T, double>)
              return YAML::Node(fmt_double(v));
            else if constexpr (std::is_same_v<T, bool>)
              return YAML::Node(v ? "true" : "false");
            else
              return YAML::Node(v);
          }};
}

template <typename T, typename Get>
Field list_field(Get get) {
  return {[get](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
            get(c) = sequence<T>(n, k, s);
          },
          [get](const RunConfig& c) {
            YAML::Node out(YAML::NodeType::Sequence);
            for (const auto& v : get(const_cast<RunConfig&>(c))) {
              if constexpr (std::is_same_v<T, double>)
                out.push_back(fmt_double(v));
              else
                out.push_back(v);
            }
            return out;
          }};
}

template <typename E, typename Get>
Field enum_field(Get get, std::vector<std::pair<std::string, E>> names) {
  return {[get, names](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
            const auto text = scalar<std::string>(n, k, s);
            for (const auto& [name, value] : names)
              if (name == text) {
                get(c) = value;
                return;
              }
            std::string allowed;
            for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + name;
            throw ConfigError(where(s, n) + ": '" + k + "' must be one of " + allowed + ", got '" + text + "'");
          },
          [get, names](const RunConfig& c) {
            const auto value = get(const_cast<RunConfig&>(c));
            for (const auto& [name, v] : names)
              if (v == value) return YAML::Node(name);
            return YAML::Node("?");
          }};
}

// Ordered schema; sections are implied by the dotted prefixes.
const std::vector<std::pair<std::string, Field>>& schema() {
  static const std::vector<std::pair<std::string, Field>> fields = [] {
    std::vector<std::pair<std::string, Field>> f;
    using C = RunConfig;
    f.emplace_back("out_dir", scalar_field<std::string>([](C& c) -> auto& { return c.out_dir; }));
    f.emplace_back("jobs", scalar_field<int>([](C& c) -> auto& { return c.jobs; }));

    f.emplace_back("data.master_seed", scalar_field<std::uint64_t>([](C& c) -> auto& { return c.data.master_seed; }));
    f.emplace_back("data.n_train", scalar_field<int>([](C& c) -> auto& { return c.data.n_train_envs; }));
    f.emplace_back("data.n_val", scalar_field<int>([](C& c) -> auto& { return c.data.n_val_envs; }));
    f.emplace_back("data.n_test", scalar_field<int>([](C& c) -> auto& { return c.data.n_test_envs; }));
    f.emplace_back("data.obs_depth", scalar_field<int>([](C& c) -> auto& { return c.data.obs_depth; }));
    f.emplace_back("data.obs_width", scalar_field<int>([](C& c) -> auto& { return c.data.obs_width; }));
    f.emplace_back("data.env.width", scalar_field<int>([](C& c) -> auto& { return c.data.env.width; }));
    f.emplace_back("data.env.height", scalar_field<int>([](C& c) -> auto& { return c.data.env.height; }));
    f.emplace_back("data.env.n_rooms", scalar_field<int>([](C& c) -> auto& { return c.data.env.n_rooms; }));
    f.emplace_back("data.env.n_objects", scalar_field<int>([](C& c) -> auto& { return c.data.env.n_objects; }));
    f.emplace_back("data.env.min_room_side",
                   scalar_field<int>([](C& c) -> auto& { return c.data.env.min_room_side; }));
    f.emplace_back("data.env.types", list_field<std::string>([](C& c) -> auto& { return c.data.env.type_vocab; }));
    f.emplace_back("data.env.colors",
                   list_field<std::string>([](C& c) -> auto& { return c.data.env.color_vocab; }));
    f.emplace_back("data.env.room_labels",
                   list_field<std::string>([](C& c) -> auto& { return c.data.env.room_labels; }));
    f.emplace_back("data.env.color_weights",
                   list_field<double>([](C& c) -> auto& { return c.data.env.color_weights; }));
    f.emplace_back("data.env.distinct_types",
                   scalar_field<bool>([](C& c) -> auto& { return c.data.env.distinct_types; }));
    f.emplace_back("data.env.max_retries", scalar_field<int>([](C& c) -> auto& { return c.data.env.max_retries; }));

    f.emplace_back("train.mode", scalar_field<std::string>([](C& c) -> auto& { return c.train_mode; }));
    f.emplace_back("train.seed", scalar_field<std::uint64_t>([](C& c) -> auto& { return c.train_seed; }));
    f.emplace_back("train.epochs", scalar_field<int>([](C& c) -> auto& { return c.joint.schedule.total_epochs; }));
    f.emplace_back("train.warm_start_epochs",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.schedule.warm_start_epochs; }));
    f.emplace_back("train.schedule",
                   enum_field<TrainSchedule::Kind>([](C& c) -> auto& { return c.joint.schedule.kind; },
                                                   {{"ramp", TrainSchedule::Kind::Ramp},
                                                    {"constant", TrainSchedule::Kind::Constant}}));
    f.emplace_back("train.mix_max", scalar_field<double>([](C& c) -> auto& { return c.joint.schedule.mix_max; }));
    f.emplace_back("train.ramp_fraction",
                   scalar_field<double>([](C& c) -> auto& { return c.joint.schedule.ramp_fraction; }));
    f.emplace_back("train.lr", scalar_field<double>([](C& c) -> auto& { return c.joint.lr; }));
    f.emplace_back("train.batch", scalar_field<int>([](C& c) -> auto& { return c.joint.batch; }));
    f.emplace_back("train.w_nav", scalar_field<double>([](C& c) -> auto& { return c.joint.w_nav; }));
    f.emplace_back("train.w_qa", scalar_field<double>([](C& c) -> auto& { return c.joint.w_qa; }));
    f.emplace_back("train.nav.word_dim", scalar_field<int>([](C& c) -> auto& { return c.joint.nav.word_dim; }));
    f.emplace_back("train.nav.question_hidden",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.nav.question_hidden; }));
    f.emplace_back("train.nav.question_layers",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.nav.question_layers; }));
    f.emplace_back("train.nav.obs_embed", scalar_field<int>([](C& c) -> auto& { return c.joint.nav.obs_embed; }));
    f.emplace_back("train.nav.action_embed",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.nav.action_embed; }));
    f.emplace_back("train.nav.hidden", scalar_field<int>([](C& c) -> auto& { return c.joint.nav.hidden; }));
    f.emplace_back("train.nav.layers", scalar_field<int>([](C& c) -> auto& { return c.joint.nav.layers; }));
    f.emplace_back("train.qa.word_dim", scalar_field<int>([](C& c) -> auto& { return c.joint.qa.word_dim; }));
    f.emplace_back("train.qa.question_hidden",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.qa.question_hidden; }));
    f.emplace_back("train.qa.question_layers",
                   scalar_field<int>([](C& c) -> auto& { return c.joint.qa.question_layers; }));
    f.emplace_back("train.blindfold.epochs", scalar_field<int>([](C& c) -> auto& { return c.blindfold.epochs; }));
    f.emplace_back("train.blindfold.lr", scalar_field<double>([](C& c) -> auto& { return c.blindfold.lr; }));
    f.emplace_back("train.blindfold.batch", scalar_field<int>([](C& c) -> auto& { return c.blindfold.batch; }));

    f.emplace_back("calibration.method",
                   enum_field<CalibrationMethod>([](C& c) -> auto& { return c.calibration_method; },
                                                 {{"distill", CalibrationMethod::Distill},
                                                  {"finetune", CalibrationMethod::Finetune}}));
    f.emplace_back("calibration.n_markers", scalar_field<int>([](C& c) -> auto& { return c.calibration.n_markers; }));
    f.emplace_back("calibration.min_distance",
                   scalar_field<int>([](C& c) -> auto& { return c.calibration.min_distance; }));
    f.emplace_back("calibration.lambda", scalar_field<double>([](C& c) -> auto& { return c.calibration.lambda; }));
    f.emplace_back("calibration.epochs", scalar_field<int>([](C& c) -> auto& { return c.calibration.epochs; }));
    f.emplace_back("calibration.lr", scalar_field<double>([](C& c) -> auto& { return c.calibration.lr; }));
    f.emplace_back("calibration.max_placement_attempts",
                   scalar_field<int>([](C& c) -> auto& { return c.calibration.max_placement_attempts; }));

    f.emplace_back("eval.split", scalar_field<std::string>([](C& c) -> auto& { return c.eval_split; }));
    f.emplace_back("eval.tiers", list_field<int>([](C& c) -> auto& { return c.eval.tiers; }));
    f.emplace_back("eval.seeds", list_field<std::uint64_t>([](C& c) -> auto& { return c.seeds; }));
    f.emplace_back("eval.max_steps_base", scalar_field<int>([](C& c) -> auto& { return c.eval.max_steps_base; }));
    f.emplace_back("eval.max_steps_mult", scalar_field<int>([](C& c) -> auto& { return c.eval.max_steps_mult; }));
    f.emplace_back("eval.max_steps_cap", scalar_field<int>([](C& c) -> auto& { return c.eval.max_steps_cap; }));

    f.emplace_back("sweep.markers", list_field<int>([](C& c) -> auto& { return c.sweep_markers; }));
    f.emplace_back("sweep.lambdas", list_field<double>([](C& c) -> auto& { return c.sweep_lambdas; }));
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& path) {
  for (const auto& [name, field] : schema())
    if (name == path) return &field;
  return nullptr;
}

bool is_section(const std::string& path) {
  const std::string prefix = path + ".";
  for (const auto& [name, field] : schema())
    if (name.compare(0, prefix.size(), prefix) == 0) return true;
  return false;
}

void walk(RunConfig& config, const YAML::Node& map, const std::string& prefix, const std::string& source) {
  std::set<std::string> seen;
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!seen.insert(key).second) throw ConfigError(where(source, kv.first) + ": duplicate key '" + path + "'");
    if (const Field* f = find_field(path)) {
      f->read(config, kv.second, path, source);
    } else if (is_section(path)) {
      if (kv.second.IsNull()) continue;
      if (!kv.second.IsMap()) throw ConfigError(where(source, kv.second) + ": '" + path + "' must be a mapping");
      walk(config, kv.second, path, source);
    } else {
      throw ConfigError(where(source, kv.first) + ": unknown key '" + path + "'");
    }
  }
}

YAML::Node load_document(const std::string& text, const std::string& source) {
  try {
    YAML::Node doc = YAML::Load(text);
    if (doc.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!doc.IsMap()) throw ConfigError(source + ": top level must be a mapping");
    return doc;
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

void apply_override(YAML::Node& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string path = assignment.substr(0, eq);
  if (!find_field(path)) throw ConfigError("override: unknown key '" + path + "'");
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  // Nodes are handles, so writing through a copy updates the document.
  std::vector<YAML::Node> chain{doc};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next.IsMap()) {
      next = YAML::Node(YAML::NodeType::Map);
      chain.back()[parts[i]] = next;
    }
    chain.push_back(chain.back()[parts[i]]);
  }
  chain.back()[parts.back()] = value;
}

}  // namespace

CalibrationConfig RunConfig::default_calibration() {
  CalibrationConfig c;
  c.lr = 1e-4;
  return c;
}

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (train_mode != "nav" && train_mode != "qa" && train_mode != "e2e")
    throw ConfigError("train.mode must be nav, qa or e2e, got '" + train_mode + "'");
  if (data.n_train_envs < 0 || data.n_val_envs < 0 || data.n_test_envs < 0)
    throw ConfigError("data split sizes must be non-negative");
  if (data.obs_depth < 1 || data.obs_width < 1 || data.obs_width % 2 == 0)
    throw ConfigError("observation window needs depth >= 1 and an odd width");
  if (joint.schedule.total_epochs < 0 || joint.schedule.warm_start_epochs < 0)
    throw ConfigError("train epochs must be non-negative");
  if (!(joint.lr > 0)) throw ConfigError("train.lr must be positive");
  if (joint.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (joint.w_nav < 0 || joint.w_qa < 0) throw ConfigError("loss weights must be non-negative");
  if (joint.schedule.mix_max < 0 || joint.schedule.mix_max > 1) throw ConfigError("train.mix_max must be in [0, 1]");
  calibration.validate();
  if (eval_split != "train" && eval_split != "val" && eval_split != "test")
    throw ConfigError("eval.split must be train, val or test");
  if (eval.tiers.empty()) throw ConfigError("eval.tiers must not be empty");
  for (int k : eval.tiers)
    if (k < 0) throw ConfigError("eval.tiers must be non-negative");
  if (eval.max_steps_cap < 0) throw ConfigError("eval.max_steps_cap must be non-negative");
  if (seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  const int max_markers = static_cast<int>(marker_types().size());
  for (int n : sweep_markers)
    if (n < 0 || n > max_markers) throw ConfigError("sweep.markers entries must be in [0, 5]");
  for (double l : sweep_lambdas)
    if (!(l >= 0 && l <= 1)) throw ConfigError("sweep.lambdas entries must be in [0, 1]");
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.seeds = seeds;
  e.train = joint;
  e.blindfold = blindfold;
  e.calibration = calibration;
  e.eval = eval;
  e.eval.jobs = jobs;
  e.marker_counts = sweep_markers;
  e.lambdas = sweep_lambdas;
  return e;
}

RunConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides,
                       const std::string& source) {
  YAML::Node doc = load_document(yaml_text, source);
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig config;
  walk(config, doc, "", source);
  config.eval.jobs = config.jobs;
  config.validate();
  return config;
}

RunConfig parse_config(const std::string& yaml_text, const std::string& source) {
  return parse_config(yaml_text, {}, source);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_yaml(const RunConfig& config) {
  YAML::Node root(YAML::NodeType::Map);
  for (const auto& [name, field] : schema()) {
    std::vector<std::string> parts;
    std::stringstream ss(name);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!chain.back()[parts[i]]) chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      chain.push_back(chain.back()[parts[i]]);
    }
    chain.back()[parts.back()] = field.write(config);
  }
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

}  // namespace eqa::io
