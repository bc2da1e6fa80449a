#include "doctest.h"
#include "soltrunc/verify.hpp"
#include "test_util.hpp"

#include <cmath>
#include <limits>
#include <set>

using namespace soltrunc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.lambdas = {2.0};
  c.resolutions = {12};
  c.samples = 100;
  c.mc_samples = 400;
  c.mc_configs = 3;
  c.suites = {"stokes", "helper", "divfree"};
  return c;
}

}  // namespace

TEST_CASE("report JSON round trip keeps every field, including non-finite numbers") {
  VerificationReport r;
  r.environment.seed = 17;
  r.environment.resolutions = {16, 24};
  r.environment.lambdas = {1, 2, 4};
  r.environment.field = {{"type", "spike"}};
  r.add(CheckRecord{"b.second", anchor::main_lipschitz, 10, std::numeric_limits<double>::infinity(), 2.5, 4, false, "inf"});
  r.add(CheckRecord{"a.first", anchor::main_solenoidal, 3, 1e-13, 0.25, 1e-10, true, "ok"});
  r.add(CheckRecord{"c.nan", anchor::main_distance, 0, std::numeric_limits<double>::quiet_NaN(), 0, 1, false, ""});
  const auto text = r.json_text();
  const auto back = VerificationReport::from_json(nlohmann::json::parse(text));
  CHECK(back.json_text() == text);
  const auto recs = back.records();
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].check_id == "a.first");
  CHECK(std::isinf(recs[1].max_residual));
  CHECK(std::isnan(recs[2].max_residual));
  CHECK_FALSE(back.passed());
  CHECK(back.find("a.first")->pass);
  CHECK(back.find("missing") == nullptr);
  CHECK(back.environment.seed == 17);
  CHECK(back.csv_text() == r.csv_text());
}

TEST_CASE("required anchors are distinct and reported missing on an empty report") {
  const auto req = required_anchors();
  CHECK(req.size() >= 10);
  CHECK(std::set<std::string>(req.begin(), req.end()).size() == req.size());
  CHECK(missing_anchors(VerificationReport{}) == req);
}

TEST_CASE("mean distance of two unit cubes is the Robbins constant") {
  const Box<3> q(Vec3::Zero(), Vec3::Ones());
  const double robbins = (4 + 17 * std::sqrt(2.0) - 6 * std::sqrt(3.0) - 7 * M_PI) / 105 +
                         (std::log(1 + std::sqrt(2.0)) + 2 * std::log(2 + std::sqrt(3.0))) / 5;
  CHECK(robbins == doctest::Approx(0.6617071822671763).epsilon(1e-15));
  // The integrand has a kink on the diagonal; the product rule converges slowly.
  CHECK(mean_distance(q, q, 16) == doctest::Approx(robbins).epsilon(2e-3));
  // Separated cubes: smooth integrand, fast convergence.
  const Box<3> far(Vec3(3, 0, 0), Vec3(4, 1, 1));
  CHECK(mean_distance(q, far, 8) == doctest::Approx(mean_distance(q, far, 16)).epsilon(1e-10));
}

TEST_CASE("helper estimates: constant integrand matches the mean segment length") {
  testutil::Gen gen(41);
  const auto cfgs = random_cube_configurations(5, 42);
  REQUIRE(cfgs.size() == 5);
  const HelperIntegrand one{"one", [](const Vec3&) { return 1.0; }, 4.0 / 3 * M_PI * 1000};
  for (const auto& q : cfgs) {
    const auto e = helper_estimate(one, q, 4000, 43);
    CHECK(std::abs(e.segment - mean_distance(q.q1, q.q2)) <= 4 * e.segment_se + 1e-12);
  }
  const HelperIntegrand zero{"zero", [](const Vec3&) { return 0.0; }, 0.0};
  const auto z = helper_estimate(zero, cfgs[0], 1000, 44);
  CHECK(z.segment == 0.0);
  CHECK(z.simplex == 0.0);
}

TEST_CASE("random cube configurations are admissible") {
  for (const auto& c : random_cube_configurations(50, 45)) {
    CHECK(c.q1.extent().isApprox(Vec3::Ones()));
    CHECK(c.q1.center().norm() <= 1e-15);
    for (const Box<3>* q : {&c.q2, &c.q3}) {
      const double l = q->extent()(0);
      CHECK(l >= 0.25);
      CHECK(l <= 4.0);
      CHECK(q->far_distance(Vec3::Zero()) <= 10.0);
    }
  }
}

TEST_CASE("divfree suite is vacuous when the bad set is empty") {
  const auto u = spike_field(Vec3::Zero(), 1, 0.5);
  const auto c = build_case(u, Box<3>(Vec3::Constant(-2), Vec3::Constant(2)), 1e6, 10, 1.0 / 64, {});
  CHECK(c.cover->size() == 0);
  DivfreeOptions o;
  const auto recs = run_divfree_suite(*c.truncator, c.exclusion(), o);
  for (const auto& r : recs) {
    CHECK(r.pass);
    CHECK(r.sample_count == 0);
  }
}

TEST_CASE("verification is deterministic and seed changes keep the verdict") {
  const auto cfg = small_config();
  const auto a = verify_experiment(cfg).json_text();
  const auto b = verify_experiment(cfg).json_text();
  CHECK(a == b);
  auto other = cfg;
  other.seed = cfg.seed + 1000;
  const auto r1 = VerificationReport::from_json(nlohmann::json::parse(a));
  const auto r2 = verify_experiment(other);
  CHECK(r2.json_text() != a);
  for (const auto& rec : r1.records()) {
    const auto* o = r2.find(rec.check_id);
    REQUIRE(o != nullptr);
    CAPTURE(rec.check_id);
    CHECK(o->pass == rec.pass);
  }
}

TEST_CASE("config parsing and validation") {
  using nlohmann::json;
  const auto d = parse_config(json::object());
  CHECK(d.lambdas == std::vector<double>{1, 2, 4});
  CHECK(d.epsilon == 1.0 / 64);
  CHECK(to_json(parse_config(to_json(d))) == to_json(d));

  try {
    parse_config(json{{"epsilon", 0.1}});
    FAIL("accepted epsilon 0.1");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "epsilon out of range (0, 1/32)");
  }
  CHECK_THROWS_AS(parse_config(json{{"lambda", -1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"resolution", 4}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"degrees", {{"segment", 1}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"colour", "blue"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"suites", {"everything"}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"field", {{"type", "vortex"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"dim", 2}, {"field", {{"type", "spike"}}}}), DimensionError);
  CHECK_THROWS_AS(parse_config(json{{"dim", 4}}), DimensionError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  const auto two = parse_config(json::parse(R"({"dim": 2, "field": {"type": "gradient", "potential": {"type": "bump"}},
                                                "box": {"lo": [-2, -1], "hi": [2, 1]}})"));
  CHECK(two.box_lo == Vec3(-2, -1, -1));
  CHECK(two.box_hi == Vec3(2, 1, 1));

  const auto fam = make_field3(json::parse(R"({"family": "trigonometric", "params": {"A": 1, "B": 0.5, "C": 0.2}})"));
  const auto abc = abc_flow(1, 0.5, 0.2);
  CHECK(fam.value(Vec3(0.1, 0.2, 0.3)).isApprox(abc.value(Vec3(0.1, 0.2, 0.3))));
  const auto poly = make_field3(json::parse(R"({"family": "polynomial", "params": {"terms": [
      {"function": {"type": "polynomial", "terms": [{"coefficient": 1, "powers": [1, 1, 0]}]}, "direction": [0, 0, 1]}]}})"));
  CHECK(poly.family() == FieldFamily::polynomial);
}
