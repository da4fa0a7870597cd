#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "../helpers.hpp"
#include "eqa/errors.hpp"
#include "eqa/io/config.hpp"
#include "eqa/io/render.hpp"
#include "eqa/io/serialize.hpp"

using namespace eqa;
using namespace eqa::io;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

const Dataset& tiny() {
  static const Dataset ds = build_dataset(tiny_dataset_config());
  return ds;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eqa-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EQA_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("cli_io") {
  TEST_CASE("unknown key is rejected with its line number") {
    const std::string text = "jobs: 2\ntrain:\n  epoch: 3\n";
    try {
      parse_config(text, "bad.yaml");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("bad.yaml:3") != std::string::npos);
      CHECK(msg.find("train.epoch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("calibration:\n  n_markers: 6\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("jobs: many\n"), ConfigError);
  }

  TEST_CASE("config round-trips through YAML and overrides apply") {
    const RunConfig a = load_config(std::string(EQA_SOURCE_DIR) + "/configs/tiny.yaml");
    CHECK(a.data.n_train_envs == 4);
    CHECK(a.eval.tiers == std::vector<int>{4, 8});
    const std::string y = to_yaml(a);
    CHECK(to_yaml(parse_config(y)) == y);
    const RunConfig b = parse_config(y, std::vector<std::string>{"train.epochs=9", "calibration.lambda=0.5"});
    CHECK(b.joint.schedule.total_epochs == 9);
    CHECK(b.calibration.lambda == 0.5);
    CHECK_THROWS_AS(parse_config(y, std::vector<std::string>{"train.nope=1"}), ConfigError);
  }

  TEST_CASE("dataset directory round-trip") {
    const auto dir = scratch("ds");
    save_dataset(tiny(), dir.string());
    const Dataset back = load_dataset(dir.string());
    CHECK(back.words == tiny().words);
    CHECK(back.answers == tiny().answers);
    REQUIRE(back.test.size() == tiny().test.size());
    for (std::size_t i = 0; i < back.test.size(); ++i) {
      CHECK(env_to_json(back.test[i]) == env_to_json(tiny().test[i]));
    }
    // saving again is byte-identical
    const auto dir2 = scratch("ds2");
    save_dataset(back, dir2.string());
    CHECK(tree_bytes(dir) == tree_bytes(dir2));
    // wrong version fails loudly
    auto manifest = Json::parse(read_file((dir / "manifest.json").string()));
    manifest["version"] = kDatasetFormatVersion + 1;
    write_file_atomic((dir / "manifest.json").string(), manifest.dump(1));
    CHECK_THROWS_AS(load_dataset(dir.string()), FormatError);
    fs::remove_all(dir);
    fs::remove_all(dir2);
  }

  TEST_CASE("checkpoint round-trip is bit-exact; corruption and version are rejected") {
    NavConfig nc = resolve_nav_config(NavConfig{}, tiny());
    nc.hidden = 16;
    NavModel m(nc, 3);
    // non-trivial optimizer state
    for (auto& p : m.store) {
      p.grad.setConstant(0.25);
      p.step = 0;
    }
    nn::adam_step(m.store, nn::AdamConfig{});
    const std::string bytes = checkpoint_bytes(m, Json{{"seed", 3}});
    Json meta;
    const NavModel back = nav_from_bytes(bytes, &meta);
    CHECK(meta.at("seed") == 3);
    CHECK(back.config == m.config);
    CHECK(checkpoint_bytes(back, meta) == bytes);
    for (std::size_t i = 0; i < m.store.size(); ++i) {
      CHECK(back.store[i].value == m.store[i].value);
      CHECK(back.store[i].m == m.store[i].m);
      CHECK(back.store[i].v == m.store[i].v);
      CHECK(back.store[i].step == m.store[i].step);
    }
    CHECK(checkpoint_kind(bytes) == "nav");
    CHECK_THROWS_AS(qa_from_bytes(bytes), FormatError);

    std::string bad_version = bytes;
    bad_version[8] = static_cast<char>(kCheckpointFormatVersion + 1);
    try {
      nav_from_bytes(bad_version);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(nav_from_bytes(flipped), FormatError);
    CHECK_THROWS_AS(nav_from_bytes(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(nav_from_bytes("not a checkpoint"), FormatError);

    QAModel qa(resolve_qa_config(QAConfig{}, tiny()), 2);
    CHECK(checkpoint_bytes(qa_from_bytes(checkpoint_bytes(qa))) == checkpoint_bytes(qa));
    BlindfoldModel bf(tiny().words.size(), tiny().answers.size(), 4);
    CHECK(checkpoint_bytes(blindfold_from_bytes(checkpoint_bytes(bf))) == checkpoint_bytes(bf));
  }

  TEST_CASE("report JSON round-trip and CSV shape") {
    const auto& ds = tiny();
    BlindfoldTrainConfig bc;
    bc.epochs = 1;
    const auto bf = train_blindfold(ds, bc).model;
    EvalOptions opt;
    opt.tiers = {10, 20, 30};
    const auto rep = evaluate(BlindfoldAgent(bf, ds), ds.test, ds, opt);
    const Json j = report_to_json(rep);
    const EvalReport back = report_from_json(j);
    CHECK(report_to_json(back).dump() == j.dump());
    const std::string csv = report_csv(rep);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 tiers
  }

  TEST_CASE("curve CSV has one column per swept value") {
    Curve c;
    c.parameter = "lambda";
    c.split = "val";
    c.tiers = {10};
    for (double x : {0.0, 0.2, 1.0}) c.points.push_back({x, {TierSummary{10, 1.0, 0.5, 0.3, 0.1, {1.0}, {0.3}}}});
    const std::string csv = curve_csv(c);
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') == 3);
  }

  TEST_CASE("render of a zero-step episode marks spawn and stop together") {
    auto env = grid_from_rows({
        "#######",
        "#0000.#",
        "#00a0.#",
        "#######",
    });
    RenderEpisode ep{&env, 0, {1, 1, Heading::E}, {}, "demo"};
    const std::string txt = render_ascii(ep);
    CHECK(txt.find("#X") != std::string::npos);
    CHECK(txt.find('*') != std::string::npos);
    CHECK(txt.find("steps 0") != std::string::npos);
    const std::string svg = render_svg(ep);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("<title>stop</title>") != std::string::npos);
  }

  TEST_CASE("CLI: gen-data is byte-identical across runs; config errors exit 1") {
    const auto a = scratch("cli-a"), b = scratch("cli-b");
    const std::string cfg = std::string(EQA_SOURCE_DIR) + "/configs/tiny.yaml";
    REQUIRE(run_cli("gen-data --config " + cfg + " --out " + a.string()) == 0);
    REQUIRE(run_cli("gen-data --config " + cfg + " --out " + b.string()) == 0);
    const auto ta = tree_bytes(a), tb = tree_bytes(b);
    CHECK(ta.size() == 4 + 2 + 2 + 2);  // envs, manifest, config snapshot
    CHECK(ta == tb);
    CHECK(ta.count("config.yaml") == 1);
    CHECK(run_cli("gen-data --config " + cfg + " --set train.epoch=3 --out " + a.string()) == 1);
    CHECK(run_cli("calibrate --data " + a.string() + " --ckpt " + (a / "missing.ckpt").string() + " --out " +
                  (a / "cal").string()) == 2);
    CHECK(run_cli("calibrate --data " + a.string() + " --ckpt x --markers 6 --out " + (a / "cal").string()) == 1);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
