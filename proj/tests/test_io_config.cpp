#include <filesystem>
#include <string>

#include "doctest.h"
#include "hamcg/config.hpp"
#include "hamcg/errors.hpp"
#include "hamcg/io.hpp"
#include "json.hpp"

using namespace hamcg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hamcg_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  FAIL("expected ConfigInvalid");
  return {};
}

}  // namespace

TEST_CASE("number formatting and hashing") {
  CHECK(fmt(0.1) == "0.10000000000000001");
  CHECK(std::stod(fmt(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(fmt(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("label grid round trip") {
  const auto g = build_reeb_graph(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 64, 48}, 3.0);
  const fs::path p = scratch("labels") / "labels.bin";
  write_label_grid(p, g);
  BoxDomain box;
  const auto labels = read_label_grid(p, box);
  CHECK(labels == g.label_grid);
  CHECK(box.nq == 64);
  CHECK(box.np == 48);
  CHECK(box.q_lo == -3.0);
  const auto j = nlohmann::json::parse(graph_json(g));
  CHECK(j["edges"].size() == 3);
}

TEST_CASE("config validation") {
  CHECK(config_error("{}").find("scenario") != std::string::npos);
  CHECK(config_error("not json").find("malformed") != std::string::npos);
  const std::string msg = config_error(R"({"scenario": "solve-vfp", "vfpp": {}, "box": {"nq": "ten", "extra": 1}})");
  CHECK(msg.find("vfpp") != std::string::npos);
  CHECK(msg.find("box.nq") != std::string::npos);
  CHECK(msg.find("box.extra") != std::string::npos);
  CHECK(config_error(R"({"scenario": "verify", "verify": {"suites": ["nope"]}})").find("nope") != std::string::npos);
  CHECK(config_error(R"({"scenario": "build-graph", "model": {"preset": "double_well", "params": {"depthh": 1}}})")
            .find("depthh") != std::string::npos);
  CHECK(config_error(R"({"scenario": "solve-vfp", "vfp": {"dt": -1}})").find("vfp.dt") != std::string::npos);
}

TEST_CASE("canonical config and seed override") {
  const RunConfig a = parse_config(R"({"scenario": "simulate-sde", "seed": 4})");
  const RunConfig b = parse_config(R"({"seed": 4, "scenario": "simulate-sde", "sde": {}})");
  CHECK(a.canonical == b.canonical);
  CHECK(a.seed == 4);
  const RunConfig c = parse_config(R"({"scenario": "simulate-sde", "seed": 4})", 9);
  CHECK(c.seed == 9);
  CHECK(c.canonical != a.canonical);
  const auto j = nlohmann::json::parse(a.canonical);
  CHECK(j["sde"]["dt"] == 1e-3);
  CHECK(j["model"]["preset"] == "double_well");
}

TEST_CASE("build-graph scenario writes graph and manifest") {
  const fs::path out = scratch("graph");
  const RunConfig cfg = parse_config(R"({"scenario": "build-graph", "box": {"nq": 160, "np": 160}})");
  const RunOutcome r = run(cfg, out);
  CHECK(r.exit_code == 0);
  const auto g = nlohmann::json::parse(read_text(out / "graph.json"));
  CHECK(g["edges"].size() == 3);
  const auto m = nlohmann::json::parse(read_text(out / "manifest.json"));
  CHECK(m["config_hash"] == hex64(fnv1a64(cfg.canonical)));
  CHECK(m["scenario"] == "build-graph");
  CHECK(r.artifacts.back() == "manifest.json");
}

TEST_CASE("same config, same bytes") {
  const std::string text = R"({"scenario": "simulate-sde", "seed": 3, "sde": {"particles": 200, "t_end": 0.05}})";
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run(parse_config(text), a);
  run(parse_config(text), b);
  CHECK(read_text(a / "ensemble.csv") == read_text(b / "ensemble.csv"));
  const fs::path c = scratch("det_c");
  run(parse_config(text, 4), c);
  CHECK(read_text(a / "ensemble.csv") != read_text(c / "ensemble.csv"));
}

TEST_CASE("scenarios produce their tables") {
  const fs::path out = scratch("scen");
  run(parse_config(R"({"scenario": "solve-smoluchowski", "smoluchowski": {"t_end": 0.1, "n": 60}})"), out);
  CHECK(read_text(out / "position_density.csv").rfind("t,q,sigma\n", 0) == 0);
  run(parse_config(R"({"scenario": "solve-vfp", "box": {"q_lo": -4, "q_hi": 4, "p_lo": -5, "p_hi": 5, "nq": 24, "np": 24},
                       "vfp": {"t_end": 0.05, "dt": 0.01}})"),
      out);
  CHECK(fs::exists(out / "dissipation.csv"));
  CHECK(read_text(out / "phase_density.csv").rfind("t,q,p,rho\n", 0) == 0);
}
