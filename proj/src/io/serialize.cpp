#include "eqa/io/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "eqa/errors.hpp"

namespace eqa::io {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& path) { fs::create_directories(path); }

// ---------------------------------------------------------------------------
// Dataset

namespace {

Json question_to_json(const Question& q) {
  return {{"id", q.question_id},
          {"tokens", q.tokens},
          {"type", to_string(q.qtype)},
          {"target", q.target_object_id},
          {"answer", q.answer_token}};
}

Question question_from_json(const Json& j, const std::string& env_id) {
  Question q;
  q.question_id = j.at("id").get<std::string>();
  q.tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto type = j.at("type").get<std::string>();
  if (type == "color")
    q.qtype = QuestionType::Color;
  else if (type == "location")
    q.qtype = QuestionType::Location;
  else
    throw FormatError("unknown question type '" + type + "'");
  q.target_object_id = j.at("target").get<int>();
  q.answer_token = j.at("answer").get<std::string>();
  q.env_id = env_id;
  return q;
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

Json env_to_json(const EnvRecord& record) {
  const GridEnvironment& env = record.env;
  Json grid = Json::array();
  Json room_map = Json::array();
  for (int y = 0; y < env.height(); ++y) {
    std::string row;
    Json rooms = Json::array();
    for (int x = 0; x < env.width(); ++x) {
      row += env.at(x, y).terrain == Terrain::Free ? '.' : '#';
      rooms.push_back(env.at(x, y).room_id ? *env.at(x, y).room_id : -1);
    }
    grid.push_back(row);
    room_map.push_back(rooms);
  }
  Json rooms = Json::array();
  for (const auto& r : env.rooms()) rooms.push_back({{"id", r.room_id}, {"label", r.label}});
  Json objects = Json::array();
  for (const auto& o : env.objects())
    objects.push_back({{"id", o.object_id},
                       {"type", o.type_token},
                       {"color", o.color_token},
                       {"x", o.position.x},
                       {"y", o.position.y},
                       {"marker", o.is_marker}});
  Json questions = Json::array();
  for (const auto& q : record.questions) questions.push_back(question_to_json(q));
  return {{"format", "eqa-env"},
          {"version", kDatasetFormatVersion},
          {"env_id", env.env_id},
          {"seed", env.seed},
          {"width", env.width()},
          {"height", env.height()},
          {"grid", grid},
          {"room_map", room_map},
          {"rooms", rooms},
          {"objects", objects},
          {"questions", questions}};
}

EnvRecord env_from_json(const Json& j) {
  return guarded("environment file", [&] {
    if (j.at("format") != "eqa-env") throw FormatError("not an environment file");
    const int version = j.at("version").get<int>();
    if (version != kDatasetFormatVersion)
      throw FormatError("environment format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kDatasetFormatVersion) + ")");
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    EnvRecord rec;
    rec.env = GridEnvironment(w, h);
    rec.env.env_id = j.at("env_id").get<std::string>();
    rec.env.seed = j.at("seed").get<std::uint64_t>();
    const auto& grid = j.at("grid");
    const auto& room_map = j.at("room_map");
    if (static_cast<int>(grid.size()) != h || static_cast<int>(room_map.size()) != h)
      throw FormatError(rec.env.env_id + ": grid height mismatch");
    for (int y = 0; y < h; ++y) {
      const auto row = grid[y].get<std::string>();
      if (static_cast<int>(row.size()) != w || static_cast<int>(room_map[y].size()) != w)
        throw FormatError(rec.env.env_id + ": grid width mismatch in row " + std::to_string(y));
      for (int x = 0; x < w; ++x) {
        Cell& c = rec.env.at(x, y);
        if (row[x] == '.')
          c.terrain = Terrain::Free;
        else if (row[x] == '#')
          c.terrain = Terrain::Wall;
        else
          throw FormatError(rec.env.env_id + ": bad grid character");
        const int room = room_map[y][x].get<int>();
        if (room >= 0) c.room_id = room;
      }
    }
    for (const auto& r : j.at("rooms")) rec.env.rooms().push_back({r.at("id").get<int>(), r.at("label")});
    for (const auto& o : j.at("objects")) {
      const int id = rec.env.add_object(o.at("type"), o.at("color"), {o.at("x").get<int>(), o.at("y").get<int>()},
                                        o.at("marker").get<bool>());
      if (id != o.at("id").get<int>()) throw FormatError(rec.env.env_id + ": object ids must be dense and ordered");
    }
    if (const auto err = rec.env.validate(); !err.empty()) throw FormatError(rec.env.env_id + ": " + err);
    for (const auto& q : j.at("questions")) rec.questions.push_back(question_from_json(q, rec.env.env_id));
    return rec;
  });
}

Json dataset_config_to_json(const DatasetConfig& c) {
  return {{"n_train", c.n_train_envs},
          {"n_val", c.n_val_envs},
          {"n_test", c.n_test_envs},
          {"master_seed", c.master_seed},
          {"obs_depth", c.obs_depth},
          {"obs_width", c.obs_width},
          {"env",
           {{"width", c.env.width},
            {"height", c.env.height},
            {"n_rooms", c.env.n_rooms},
            {"n_objects", c.env.n_objects},
            {"min_room_side", c.env.min_room_side},
            {"types", c.env.type_vocab},
            {"colors", c.env.color_vocab},
            {"room_labels", c.env.room_labels},
            {"color_weights", c.env.color_weights},
            {"distinct_types", c.env.distinct_types},
            {"max_retries", c.env.max_retries}}}};
}

DatasetConfig dataset_config_from_json(const Json& j) {
  return guarded("dataset config", [&] {
    DatasetConfig c;
    c.n_train_envs = j.at("n_train");
    c.n_val_envs = j.at("n_val");
    c.n_test_envs = j.at("n_test");
    c.master_seed = j.at("master_seed");
    c.obs_depth = j.at("obs_depth");
    c.obs_width = j.at("obs_width");
    const auto& e = j.at("env");
    c.env.width = e.at("width");
    c.env.height = e.at("height");
    c.env.n_rooms = e.at("n_rooms");
    c.env.n_objects = e.at("n_objects");
    c.env.min_room_side = e.at("min_room_side");
    c.env.type_vocab = e.at("types").get<std::vector<std::string>>();
    c.env.color_vocab = e.at("colors").get<std::vector<std::string>>();
    c.env.room_labels = e.at("room_labels").get<std::vector<std::string>>();
    c.env.color_weights = e.at("color_weights").get<std::vector<double>>();
    c.env.distinct_types = e.at("distinct_types");
    c.env.max_retries = e.at("max_retries");
    return c;
  });
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  Json splits = Json::object();
  for (const char* name : {"train", "val", "test"}) {
    Json ids = Json::array();
    for (const auto& rec : ds.split(name)) {
      ids.push_back(rec.env.env_id);
      write_file_atomic((fs::path(dir) / "envs" / (rec.env.env_id + ".json")).string(),
                        env_to_json(rec).dump(1) + "\n");
    }
    splits[name] = ids;
  }
  const Json manifest = {{"format", "eqa-dataset"},
                         {"version", kDatasetFormatVersion},
                         {"config", dataset_config_to_json(ds.config)},
                         {"splits", splits},
                         {"vocab",
                          {{"words", ds.words.tokens()},
                           {"answers", ds.answers.tokens()},
                           {"obs_types", ds.obs_spec.type_tokens},
                           {"obs_colors", ds.obs_spec.color_tokens}}},
                         {"questions",
                          {{"train", ds.question_count(ds.train)},
                           {"val", ds.question_count(ds.val)},
                           {"test", ds.question_count(ds.test)}}}};
  write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  Json manifest;
  try {
    manifest = Json::parse(read_file(manifest_path));
  } catch (const Json::parse_error& e) {
    throw FormatError(manifest_path + ": " + e.what());
  }
  return guarded(manifest_path, [&] {
    if (manifest.at("format") != "eqa-dataset") throw FormatError(manifest_path + ": not a dataset manifest");
    const int version = manifest.at("version").get<int>();
    if (version != kDatasetFormatVersion)
      throw FormatError(manifest_path + ": dataset format version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kDatasetFormatVersion) + ")");
    Dataset ds;
    ds.config = dataset_config_from_json(manifest.at("config"));
    const auto& vocab = manifest.at("vocab");
    ds.words = Vocabulary(vocab.at("words").get<std::vector<std::string>>());
    ds.answers = Vocabulary(vocab.at("answers").get<std::vector<std::string>>());
    ds.obs_spec = ObservationSpec(ds.config.obs_depth, ds.config.obs_width,
                                  vocab.at("obs_types").get<std::vector<std::string>>(),
                                  vocab.at("obs_colors").get<std::vector<std::string>>());
    if (!(ds.words == build_word_vocab(ds.config.env)) || !(ds.answers == build_answer_vocab(ds.config.env)))
      throw FormatError(manifest_path + ": vocabularies do not match the stored config");
    for (const char* name : {"train", "val", "test"}) {
      auto& split = name == std::string("train") ? ds.train : name == std::string("val") ? ds.val : ds.test;
      for (const auto& id : manifest.at("splits").at(name)) {
        const std::string path = (fs::path(dir) / "envs" / (id.get<std::string>() + ".json")).string();
        Json j;
        try {
          j = Json::parse(read_file(path));
        } catch (const Json::parse_error& e) {
          throw FormatError(path + ": " + e.what());
        }
        split.push_back(env_from_json(j));
      }
    }
    return ds;
  });
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'E', 'Q', 'A', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t fnv1a(const std::string& bytes, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    le(bits, 8);
  }
  void raw(const std::string& s) { out_ += s; }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  void matrix(const Mat& m) {  // row-major
    for (nn::Index r = 0; r < m.rows(); ++r)
      for (nn::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  std::string& bytes() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : b_(bytes), end_(end) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() {
    const std::uint64_t bits = le(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return raw(u32()); }
  void matrix(Mat& m) {
    for (nn::Index r = 0; r < m.rows(); ++r)
      for (nn::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("checkpoint is truncated");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::string encode(const std::string& kind, const Json& config, const Json& meta, const Store& store) {
  Writer w;
  w.raw(std::string(kMagic, 8));
  w.u32(kCheckpointFormatVersion);
  w.str(kind);
  w.str(Json{{"config", config}, {"meta", meta}}.dump());
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    w.i64(p.step);
    w.matrix(p.value);
    w.matrix(p.m);
    w.matrix(p.v);
  }
  w.u64(fnv1a(w.bytes(), w.bytes().size()));
  return std::move(w.bytes());
}

struct Header {
  std::string kind;
  Json config;
  Json meta;
  std::size_t body = 0;  // offset of the parameter section
};

Header read_header(const std::string& bytes) {
  if (bytes.size() < 8 + 4 + 8 || bytes.compare(0, 8, std::string(kMagic, 8)) != 0)
    throw FormatError("not a checkpoint (bad magic)");
  const std::size_t end = bytes.size() - 8;
  Reader r(bytes, end);
  r.raw(8);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointFormatVersion)
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointFormatVersion) + ")");
  Header h;
  h.kind = r.str();
  Json j;
  try {
    j = Json::parse(r.str());
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  h.config = j.at("config");
  h.meta = j.at("meta");
  h.body = r.pos();
  return h;
}

void decode_params(const std::string& bytes, const Header& h, Store& store) {
  const std::size_t end = bytes.size() - 8;
  Reader tail(bytes, bytes.size());
  tail.raw(end);
  if (tail.u64() != fnv1a(bytes, end)) throw FormatError("checkpoint checksum mismatch");
  Reader r(bytes, end);
  r.raw(h.body);
  const std::uint32_t n = r.u32();
  if (n != store.size())
    throw FormatError("checkpoint has " + std::to_string(n) + " parameters, model expects " +
                      std::to_string(store.size()));
  for (auto& p : store) {
    const std::string name = r.str();
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols())
      throw FormatError("checkpoint parameter '" + name + "' does not match model parameter '" + p.name + "'");
    p.step = r.i64();
    r.matrix(p.value);
    r.matrix(p.m);
    r.matrix(p.v);
    p.grad.setZero();
  }
  if (r.pos() != end) throw FormatError("checkpoint has trailing bytes");
}

Header expect_kind(const std::string& bytes, const std::string& kind) {
  Header h = read_header(bytes);
  if (h.kind != kind) throw FormatError("checkpoint holds a '" + h.kind + "' model, expected '" + kind + "'");
  return h;
}

}  // namespace

Json nav_config_to_json(const NavConfig& c) {
  return {{"vocab_size", c.vocab_size},     {"obs_dim", c.obs_dim},
          {"word_dim", c.word_dim},         {"question_hidden", c.question_hidden},
          {"question_layers", c.question_layers}, {"obs_embed", c.obs_embed},
          {"action_embed", c.action_embed}, {"hidden", c.hidden},
          {"layers", c.layers},             {"init_scale", c.init_scale},
          {"forget_bias", c.forget_bias}};
}

NavConfig nav_config_from_json(const Json& j) {
  return guarded("nav config", [&] {
    NavConfig c;
    c.vocab_size = j.at("vocab_size");
    c.obs_dim = j.at("obs_dim");
    c.word_dim = j.at("word_dim");
    c.question_hidden = j.at("question_hidden");
    c.question_layers = j.at("question_layers");
    c.obs_embed = j.at("obs_embed");
    c.action_embed = j.at("action_embed");
    c.hidden = j.at("hidden");
    c.layers = j.at("layers");
    c.init_scale = j.at("init_scale");
    c.forget_bias = j.at("forget_bias");
    return c;
  });
}

Json qa_config_to_json(const QAConfig& c) {
  return {{"vocab_size", c.vocab_size},         {"obs_dim", c.obs_dim},       {"n_answers", c.n_answers},
          {"word_dim", c.word_dim},             {"question_hidden", c.question_hidden},
          {"question_layers", c.question_layers}, {"init_scale", c.init_scale}, {"forget_bias", c.forget_bias}};
}

QAConfig qa_config_from_json(const Json& j) {
  return guarded("qa config", [&] {
    QAConfig c;
    c.vocab_size = j.at("vocab_size");
    c.obs_dim = j.at("obs_dim");
    c.n_answers = j.at("n_answers");
    c.word_dim = j.at("word_dim");
    c.question_hidden = j.at("question_hidden");
    c.question_layers = j.at("question_layers");
    c.init_scale = j.at("init_scale");
    c.forget_bias = j.at("forget_bias");
    return c;
  });
}

std::string checkpoint_bytes(const NavModel& model, const Json& meta) {
  return encode("nav", nav_config_to_json(model.config), meta, model.store);
}

std::string checkpoint_bytes(const QAModel& model, const Json& meta) {
  return encode("qa", qa_config_to_json(model.config), meta, model.store);
}

std::string checkpoint_bytes(const BlindfoldModel& model, const Json& meta) {
  return encode("blindfold", {{"vocab_size", model.vocab_size}, {"n_answers", model.n_answers}}, meta, model.store);
}

std::string checkpoint_kind(const std::string& bytes) { return read_header(bytes).kind; }

NavModel nav_from_bytes(const std::string& bytes, Json* meta) {
  const Header h = expect_kind(bytes, "nav");
  NavModel model(nav_config_from_json(h.config), 0);
  decode_params(bytes, h, model.store);
  if (meta) *meta = h.meta;
  return model;
}

QAModel qa_from_bytes(const std::string& bytes, Json* meta) {
  const Header h = expect_kind(bytes, "qa");
  QAModel model(qa_config_from_json(h.config), 0);
  decode_params(bytes, h, model.store);
  if (meta) *meta = h.meta;
  return model;
}

BlindfoldModel blindfold_from_bytes(const std::string& bytes, Json* meta) {
  const Header h = expect_kind(bytes, "blindfold");
  BlindfoldModel model = guarded("blindfold config", [&] {
    return BlindfoldModel(h.config.at("vocab_size").get<int>(), h.config.at("n_answers").get<int>(), 0);
  });
  decode_params(bytes, h, model.store);
  if (meta) *meta = h.meta;
  return model;
}

NavModel load_nav(const std::string& path, Json* meta) { return nav_from_bytes(read_file(path), meta); }
QAModel load_qa(const std::string& path, Json* meta) { return qa_from_bytes(read_file(path), meta); }
BlindfoldModel load_blindfold(const std::string& path, Json* meta) {
  return blindfold_from_bytes(read_file(path), meta);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

Json tier_to_json(const TierStats& t) {
  return {{"k", t.k},
          {"episodes", t.episodes},
          {"skipped", t.skipped},
          {"mean_d_delta", t.mean_d_delta},
          {"mean_d_delta_m", t.mean_d_delta_m},
          {"qa_accuracy", t.qa_accuracy},
          {"stop_rate", t.stop_rate},
          {"mean_length", t.mean_length},
          {"mean_initial_distance", t.mean_initial_distance}};
}

Json state_to_json(const AgentState& s) { return {s.x, s.y, std::string(1, to_string(s.heading)[0])}; }

AgentState state_from_json(const Json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), heading_from_char(j.at(2).get<std::string>().at(0))};
}

Json summary_to_json(const TierSummary& s) {
  return {{"k", s.k},
          {"d_delta_mean", s.d_delta_mean},
          {"d_delta_std", s.d_delta_std},
          {"qa_mean", s.qa_mean},
          {"qa_std", s.qa_std},
          {"d_delta_per_seed", s.d_delta_per_seed},
          {"qa_per_seed", s.qa_per_seed}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string num(double v) {  // shortest round-trip form for CSV
  return Json(v).dump();
}

}  // namespace

Json report_to_json(const EvalReport& report) {
  Json tiers = Json::array();
  for (const auto& t : report.tiers) tiers.push_back(tier_to_json(t));
  Json episodes = Json::array();
  for (const auto& e : report.episodes)
    episodes.push_back({{"env_id", e.env_id},
                        {"question_id", e.question_id},
                        {"type", to_string(e.qtype)},
                        {"k", e.k},
                        {"spawn", state_to_json(e.spawn)},
                        {"stop", state_to_json(e.stop)},
                        {"initial_distance", e.initial_distance},
                        {"final_distance", e.final_distance},
                        {"d_delta", e.d_delta},
                        {"steps", e.steps},
                        {"stopped", e.stopped},
                        {"answer", e.answer},
                        {"truth", e.truth},
                        {"correct", e.correct}});
  const auto& o = report.options;
  return {{"agent", report.agent},
          {"split", report.split},
          {"options",
           {{"tiers", o.tiers},
            {"seed", o.seed},
            {"max_steps_base", o.max_steps_base},
            {"max_steps_mult", o.max_steps_mult},
            {"max_steps_cap", o.max_steps_cap}}},
          {"meters_per_cell", kMetersPerCell},
          {"tiers", tiers},
          {"episodes", episodes}};
}

EvalReport report_from_json(const Json& j) {
  return guarded("report", [&] {
    EvalReport r;
    r.agent = j.at("agent");
    r.split = j.at("split");
    const auto& o = j.at("options");
    r.options.tiers = o.at("tiers").get<std::vector<int>>();
    r.options.seed = o.at("seed");
    r.options.max_steps_base = o.at("max_steps_base");
    r.options.max_steps_mult = o.at("max_steps_mult");
    r.options.max_steps_cap = o.at("max_steps_cap");
    std::map<int, int> skipped;
    for (const auto& t : j.at("tiers")) skipped[t.at("k").get<int>()] = t.at("skipped").get<int>();
    for (const auto& e : j.at("episodes")) {
      EpisodeRecord rec;
      rec.env_id = e.at("env_id");
      rec.question_id = e.at("question_id");
      rec.qtype = e.at("type") == "location" ? QuestionType::Location : QuestionType::Color;
      rec.k = e.at("k");
      rec.spawn = state_from_json(e.at("spawn"));
      rec.stop = state_from_json(e.at("stop"));
      rec.initial_distance = e.at("initial_distance");
      rec.final_distance = e.at("final_distance");
      rec.d_delta = e.at("d_delta");
      rec.steps = e.at("steps");
      rec.stopped = e.at("stopped");
      rec.answer = e.at("answer");
      rec.truth = e.at("truth");
      rec.correct = e.at("correct");
      r.episodes.push_back(std::move(rec));
    }
    r.tiers = aggregate(r.episodes, r.options.tiers, skipped);
    return r;
  });
}

std::string report_csv(const EvalReport& report) {
  std::string out =
      "k,episodes,skipped,mean_d_delta,mean_d_delta_m,qa_accuracy,stop_rate,mean_length,mean_initial_distance\n";
  for (const auto& t : report.tiers)
    out += std::to_string(t.k) + "," + std::to_string(t.episodes) + "," + std::to_string(t.skipped) + "," +
           num(t.mean_d_delta) + "," + num(t.mean_d_delta_m) + "," + num(t.qa_accuracy) + "," + num(t.stop_rate) +
           "," + num(t.mean_length) + "," + num(t.mean_initial_distance) + "\n";
  return out;
}

std::string training_curve_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,nav_loss,nav_accuracy,qa_loss,qa_accuracy,mix,val_d_delta,val_qa_accuracy\n";
  auto opt = [](double v) { return std::isnan(v) ? std::string() : num(v); };
  for (const auto& e : log)
    out += std::to_string(e.epoch) + "," + num(e.nav_loss) + "," + num(e.nav_accuracy) + "," + num(e.qa_loss) + "," +
           num(e.qa_accuracy) + "," + num(e.mix) + "," + opt(e.val_d_delta) + "," + opt(e.val_qa_accuracy) + "\n";
  return out;
}

Json comparison_to_json(const Comparison& cmp) {
  Json rows = Json::array();
  for (const auto& r : cmp.rows) {
    Json tiers = Json::array();
    for (const auto& t : r.tiers) tiers.push_back(summary_to_json(t));
    Json seeds = Json::array();
    for (const auto& rep : r.reports) seeds.push_back(rep.options.seed);
    rows.push_back({{"setting", r.name}, {"seeds", seeds}, {"tiers", tiers}});
  }
  Json deltas = Json::array();
  auto find = [&](const std::string& name) -> const SettingRow* {
    for (const auto& r : cmp.rows)
      if (r.name == name) return &r;
    return nullptr;
  };
  for (auto [a, b] : {std::pair{"finetune", "standard"}, std::pair{"distill", "standard"},
                      std::pair{"distill", "finetune"}}) {
    const SettingRow* ra = find(a);
    const SettingRow* rb = find(b);
    if (!ra || !rb) continue;
    Json per_tier = Json::array();
    for (std::size_t t = 0; t < ra->tiers.size() && t < rb->tiers.size(); ++t)
      per_tier.push_back({{"k", ra->tiers[t].k}, {"d_delta", ra->tiers[t].d_delta_mean - rb->tiers[t].d_delta_mean},
                          {"qa", ra->tiers[t].qa_mean - rb->tiers[t].qa_mean}});
    deltas.push_back({{"a", a}, {"b", b}, {"tiers", per_tier}});
  }
  return {{"tiers", cmp.tiers}, {"rows", rows}, {"deltas", deltas}};
}

std::string comparison_table(const Comparison& cmp) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"setting"};
  for (int k : cmp.tiers) head.push_back("d_delta T-" + std::to_string(k));
  for (int k : cmp.tiers) head.push_back("QA% T-" + std::to_string(k));
  cells.push_back(head);
  for (const auto& r : cmp.rows) {
    std::vector<std::string> row{r.name};
    for (const auto& t : r.tiers) row.push_back(fixed(t.d_delta_mean, 2) + " +- " + fixed(t.d_delta_std, 2));
    for (const auto& t : r.tiers)
      row.push_back(fixed(100 * t.qa_mean, 2) + " +- " + fixed(100 * t.qa_std, 2));
    cells.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      const auto& s = cells[i][c];
      if (c == 0)
        out += s + std::string(width[c] - s.size(), ' ');
      else
        out += "  " + std::string(width[c] - s.size(), ' ') + s;
    }
    out += "\n";
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  out += "d_delta in cells (" + fixed(kMetersPerCell, 1) + " m per cell); mean +- std over seeds\n";
  return out;
}

Json curve_to_json(const Curve& curve) {
  Json points = Json::array();
  for (const auto& p : curve.points) {
    Json tiers = Json::array();
    for (const auto& t : p.tiers) tiers.push_back(summary_to_json(t));
    points.push_back({{"x", p.x}, {"tiers", tiers}});
  }
  return {{"parameter", curve.parameter}, {"split", curve.split}, {"tiers", curve.tiers}, {"points", points}};
}

std::string curve_csv(const Curve& curve) {
  std::string out = "series";
  for (const auto& p : curve.points) out += "," + curve.parameter + "=" + num(p.x);
  out += "\n";
  for (std::size_t t = 0; t < curve.tiers.size(); ++t) {
    const std::string k = std::to_string(curve.tiers[t]);
    const std::pair<const char*, double TierSummary::*> stats[] = {{"d_delta_mean", &TierSummary::d_delta_mean},
                                                                   {"d_delta_std", &TierSummary::d_delta_std},
                                                                   {"qa_mean", &TierSummary::qa_mean},
                                                                   {"qa_std", &TierSummary::qa_std}};
    for (const auto& [label, member] : stats) {
      out += std::string(label) + "_T-" + k;
      for (const auto& p : curve.points) out += "," + num(p.tiers.at(t).*member);
      out += "\n";
    }
  }
  return out;
}

}  // namespace eqa::io
