#include <string>

#include "doctest.h"
#include "twip/config.hpp"
#include "twip/errors.hpp"

using namespace twip;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("defaults are the published setup") {
  const PipelineConfig c;
  CHECK(c.Ts == 0.01);
  CHECK(c.mpc.horizon == 20);
  CHECK(c.mpc.u_max == 2.2);
  CHECK(c.mpc.slack_weight == 1e5);
  CHECK(c.ctmpc.alpha == 0.815);
  CHECK(c.ctmpc.w_max == 0.075);
  CHECK(c.ctmpc.slack_weight == 1e4);
  CHECK(c.lqr.r == 40.0);
  CHECK(c.lqr.q_diag(0) == doctest::Approx(1000.0));
  CHECK(c.lqr.q_diag(1) == doctest::Approx(125.0));
  CHECK(c.mc.run.n_samples == 5000);
  CHECK(c.mc.run.horizon == 20.0);
  CHECK(c.mc.run.velocity.hi == 1.0);
  CHECK(c.mc.run.pitch.hi == 1.5);
  CHECK(c.mc.run.pitch_rate.hi == 1.5);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("serialize-parse round trip") {
  PipelineConfig c;
  c.model.m_B = 0.71;
  c.mpc.horizon = 12;
  c.ctmpc.alpha = 0.7;
  c.certification.seed = 123456789012345ULL;
  c.mc.run.seed = 18446744073709551557ULL;
  c.mc.run.pitch = Interval{-0.9, 1.1};
  c.mc.controller = "all";
  c.output_dir = "elsewhere";
  const json j = to_json(c);
  const PipelineConfig back = config_from_json(json::parse(j.dump()));
  CHECK(to_json(back) == j);
  CHECK(back.model.m_B == 0.71);
  CHECK(back.mc.run.seed == 18446744073709551557ULL);
  CHECK(back.mc.run.pitch.lo == -0.9);
  CHECK(back.lqr.q_diag == c.lqr.q_diag);
}

TEST_CASE("partial documents keep the remaining defaults") {
  const PipelineConfig c = config_from_json(json::parse(R"({"mc": {"n_samples": 10}})"));
  CHECK(c.mc.run.n_samples == 10);
  PipelineConfig expected;
  expected.mc.run.n_samples = 10;
  CHECK(to_json(c) == to_json(expected));
}

TEST_CASE("invalid values are config errors") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"ctmpc": {"alpha": 0}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"ctmpc": {"alpha": 1.0}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mc": {"n_samples": 0}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mc": {"controller": "pid"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"Ts": -0.01})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {"r": 0}})")), ConfigError);
}

TEST_CASE("unknown keys and wrong types are rejected") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mpc": {"horizn": 20}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"extra": 1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mpc": {"horizon": "20"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mpc": {"horizon": 20.5}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"lqr": {"q_diag": [1, 2, 3]}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"mc": 5})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("load_config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("shipped default file parses to the built-in defaults") {
  const PipelineConfig c = load_config(std::string(TWIP_SOURCE_DIR) + "/configs/default.json");
  CHECK(to_json(c) == to_json(PipelineConfig{}));
}

TEST_CASE("stage hashes track their dependencies only") {
  const PipelineConfig base;
  PipelineConfig c = base;
  c.threads = 7;
  c.output_dir = "x";
  CHECK(synthesis_hash(c) == synthesis_hash(base));
  CHECK(certification_hash(c) == certification_hash(base));
  CHECK(mc_hash(c) == mc_hash(base));

  c = base;
  c.mc.run.seed = 99;
  CHECK(synthesis_hash(c) == synthesis_hash(base));
  CHECK(certification_hash(c) == certification_hash(base));
  CHECK(mc_hash(c) != mc_hash(base));

  c = base;
  c.mpc.horizon = 10;
  CHECK(synthesis_hash(c) != synthesis_hash(base));
  CHECK(fnv1a_hex("").size() == 16);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

}  // TEST_SUITE
