#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gen.hpp"
#include "irltrack/config.hpp"
#include "irltrack/errors.hpp"

using namespace irltrack;
using nlohmann::json;

namespace {

json minimal() { return {{"schema_version", 1}}; }

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig random_config(gen::Rng& rng) {
  ExperimentConfig c;
  c.name = "cfg" + std::to_string(rng.integer(0, 1000));
  auto& s = c.sim;
  std::vector<ParameterSchedule::Segment> segs;
  double t = 0.0;
  for (int i = rng.integer(1, 4); i > 0; --i) {
    segs.push_back({t, {rng.uniform(0.1, 9), rng.uniform(0, 9), rng.uniform(0, 1)}});
    t += rng.integer(1, 20);
  }
  s.schedule = ParameterSchedule(segs);
  s.x0 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  s.x1d = rng.uniform(-2, 2);
  s.identifier.k_f = rng.uniform(1e-3, 0.1);
  s.identifier.l_f = rng.uniform(0.1, 3);
  s.identifier.gamma1 = rng.spd(4, 0.5, 50);
  s.identifier.stack_size = static_cast<std::size_t>(rng.integer(4, 20));
  s.identifier.snapshot_period = rng.uniform(0.1, 2);
  s.identifier.er_enabled = rng.integer(0, 1);
  s.identifier.W_init = rng.vec(8, -1, 1).reshaped(4, 2);
  auto& g = s.critic.gains;
  g.alpha = rng.uniform(1, 50);
  g.k2 = rng.uniform(0, 2);
  g.l = rng.uniform(0.01, 1);
  g.gamma = rng.uniform(0, 1);
  g.T = 1e-3 * rng.integer(1, 300);
  g.K2 = rng.spd(7, 0.05, 1);
  g.K1 = rng.vec(7, -0.05, 0.05);
  s.critic.Q = Eigen::MatrixXd::Constant(1, 1, rng.uniform(0.1, 20));
  s.critic.R = Eigen::VectorXd::Constant(1, rng.uniform(0.1, 5));
  s.critic.u_max = rng.uniform(0.5, 5);
  s.critic.W_init = rng.vec(7, -1, 1);
  s.critic.limit_switching = rng.integer(0, 1);
  s.duration = rng.integer(1, 100);
  s.seed = static_cast<std::uint64_t>(rng.integer(0, 1 << 30));
  s.probe.enabled = rng.integer(0, 1);
  s.probe.amplitude = rng.uniform(0.01, 1);
  s.probe.frequencies = {rng.uniform(0.1, 5), rng.uniform(0.1, 5)};
  s.probe.noise = rng.uniform(0, 0.2);
  c.output.dir = "out/x";
  c.output.csv = rng.integer(0, 1);
  c.output.plots = rng.integer(0, 1);
  return c;
}

}  // namespace

TEST_CASE("minimal config gives the defaults") {
  const ExperimentConfig c = parse_config(minimal());
  ExperimentConfig d;
  d.name = c.name;
  CHECK(c == d);
}

TEST_CASE("round trip") {
  gen::Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    const ExperimentConfig c = random_config(rng);
    c.sim.validate();
    const json j = serialize(c);
    CHECK(parse_config(j) == c);
    CHECK(parse_config(json::parse(j.dump())) == c);
  }
}

TEST_CASE("scalar and diagonal shorthands") {
  json j = minimal();
  j["critic"] = {{"K2", 0.5}, {"Q", 2.0}, {"R", 0.3}};
  j["identifier"] = {{"gamma1", {1.0, 2.0, 3.0, 4.0}}};
  const auto c = parse_config(j);
  CHECK(c.sim.critic.gains.K2.isApprox(0.5 * Eigen::MatrixXd::Identity(7, 7)));
  CHECK(c.sim.critic.Q(0, 0) == 2.0);
  CHECK(c.sim.critic.R(0) == 0.3);
  CHECK(c.sim.identifier.gamma1.diagonal() == Eigen::Vector4d(1, 2, 3, 4));
}

TEST_CASE("errors name the offending field") {
  json j = minimal();
  j["critic"] = {{"alpah", 3.0}};
  CHECK(error_of(j).rfind("critic.alpah", 0) == 0);
  CHECK(error_of(j).find("unknown key") != std::string::npos);

  CHECK(error_of(json::object()).rfind("schema_version", 0) == 0);
  CHECK(error_of({{"schema_version", 2}}).rfind("schema_version", 0) == 0);

  j = minimal();
  j["critic"] = {{"K2", 0.0}};
  CHECK(error_of(j).rfind("critic.K", 0) == 0);

  j = minimal();
  j["critic"] = {{"T", 0.0505}};
  CHECK(error_of(j).rfind("critic.T", 0) == 0);

  j = minimal();
  j["sim"] = {{"dt", "fast"}};
  CHECK(error_of(j).rfind("sim.dt", 0) == 0);

  j = minimal();
  j["plant"] = {{"schedule", {{{"start", 1.0}, {"mass", 1.0}}}}};
  CHECK(error_of(j).rfind("plant.", 0) == 0);

  j = minimal();
  j["identifier"] = {{"gamma1", {{1.0, 2.0}, {3.0, 4.0}}}};
  CHECK(error_of(j).rfind("identifier.gamma1", 0) == 0);
}

TEST_CASE("config files") {
  CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "irltrack_bad.json";
  {
    std::ofstream(path) << "{ not json";
  }
  CHECK_THROWS_AS(parse_config_file(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("variants") {
  const json spec = {{"variants",
                      {{{"name", "a"}, {"overrides", json::object()}},
                       {{"name", "b"}, {"overrides", {{"identifier", {{"er_enabled", false}}}, {"critic", {{"k2", 0.0}}}}}}}}};
  const auto vs = parse_variants(spec);
  REQUIRE(vs.size() == 2);
  ExperimentConfig base;
  const auto a = apply_variant(base, vs[0]);
  const auto b = apply_variant(base, vs[1]);
  CHECK(a.name == "a");
  CHECK(a.sim.identifier.er_enabled);
  CHECK(!b.sim.identifier.er_enabled);
  CHECK(b.sim.critic.gains.k2 == 0.0);
  CHECK(b.sim.critic.gains.l == base.sim.critic.gains.l);

  CHECK(parse_variants({{"variants", json::array()}}).empty());
  CHECK_THROWS_AS(parse_variants({{"variants", {{{"name", "a"}}, {{"name", "a"}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_variants({{"variants", {{{"name", "../x"}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_variants(json::object()), ConfigError);
  const Variant bad{"bad", {{"critic", {{"l", 5.0}}}}};
  CHECK_THROWS_AS(apply_variant(base, bad), ConfigError);
}
