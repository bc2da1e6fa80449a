#include "doctest.h"
#include "soltrunc/maximal.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>

using namespace soltrunc;

namespace {

template <int Dim, typename F>
double ball_average(const BallRule<Dim>& r, const F& f) {
  double s = 0;
  for (std::size_t q = 0; q < r.nodes.size(); ++q) s += r.weights[q] * f(r.nodes[q]);
  return s;
}

}  // namespace

TEST_CASE("ball rules average low moments over the unit ball") {
  const auto b3 = ball_rule<3>();
  double wsum = 0;
  for (double w : b3.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& z : b3.nodes) CHECK(z.norm() <= 1.0);
  // E|z_1| = 3/8 and E z_a^2 = 1/5 on the 3-ball.
  CHECK(ball_average(b3, [](const Vec3& z) { return std::abs(z(0)); }) == doctest::Approx(3.0 / 8).epsilon(1e-13));
  for (int a = 0; a < 3; ++a)
    CHECK(ball_average(b3, [a](const Vec3& z) { return z(a) * z(a); }) == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(std::abs(ball_average(b3, [](const Vec3& z) { return z(0) + z(1) * z(2); })) < 1e-15);

  const auto b2 = ball_rule<2>();
  for (int a = 0; a < 2; ++a)
    CHECK(ball_average(b2, [a](const Vec2& z) { return z(a) * z(a); }) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("radius ladder is geometric and reaches r_max") {
  const auto r = radius_ladder(0.1, 2.0, 1.0);
  REQUIRE(r.size() == 5);
  CHECK(r.front() == doctest::Approx(0.1));
  CHECK(r.back() >= 1.0);
  for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] / r[k - 1] == doctest::Approx(2.0));
}

TEST_CASE("maximal function of a constant field") {
  const auto u = affine_field<3>(Vec3(3, 4, 0), Mat3::Zero());
  const MaximalEvaluator<3> M(u, radius_ladder(0.05, 2, 2));
  const auto [mv, mj] = M.evaluate(Vec3(0.1, 0.2, 0.3));
  CHECK(mv == doctest::Approx(5.0));
  CHECK(mj == 0.0);
}

TEST_CASE("maximal function dominates the centre value and is sublinear") {
  testutil::Gen gen(21);
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto w = abc_flow(1, 0.5, 0.2);
  const auto radii = radius_ladder(0.05, 2, 3);
  const MaximalEvaluator<3> Mu(u, radii), Mw(w, radii), Muw(u + w, radii);
  for (int s = 0; s < 100; ++s) {
    const Vec3 x = gen.point<3>(-1, 1);
    const auto a = Mu.evaluate(x), b = Mw.evaluate(x), c = Muw.evaluate(x);
    CHECK(a.first >= u.value(x).norm());
    CHECK(a.second >= u.jacobian(x).norm());
    CHECK(c.first <= a.first + b.first + 1e-12);
    CHECK(c.second <= a.second + b.second + 1e-12);
  }
}

TEST_CASE("good set above the field maximum is everything") {
  const auto u = spike_field(Vec3::Zero(), 1, 0.5);
  const auto g = good_set<3>(u, 1e6, Box<3>(Vec3::Constant(-2), Vec3::Constant(2)), 10);
  CHECK(g.bad_count() == 0);
}

TEST_CASE("good set distances match a brute-force scan") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto g = good_set<3>(u, 2.0, Box<3>(Vec3::Constant(-3), Vec3::Constant(3)), 12);
  REQUIRE(g.bad_count() > 0);
  const Box<3> block = g.block();
  for (std::int64_t n = 0; n < g.grid.size(); ++n) {
    const Vec3 x = g.grid.node(n);
    // Exterior of the block is good.
    double best = std::min((x - block.lo).minCoeff(), (block.hi - x).minCoeff());
    for (std::int64_t m = 0; m < g.grid.size(); ++m)
      if (!g.is_bad_node(m)) best = std::min(best, g.voxel(m).distance(x));
    CHECK(g.distance[static_cast<std::size_t>(n)] == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("good set marks exactly the nodes above lambda") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto g = good_set<3>(u, 2.0, Box<3>(Vec3::Constant(-3), Vec3::Constant(3)), 12);
  for (std::int64_t n = 0; n < g.grid.size(); ++n) {
    const std::size_t k = static_cast<std::size_t>(n);
    CHECK(g.is_bad_node(n) == (g.maximal_value[k] > 2.0 || g.maximal_jacobian[k] > 2.0));
  }
}

TEST_CASE("good mask round trip") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto g = good_set<3>(u, 2.0, Box<3>(Vec3::Constant(-3), Vec3::Constant(3)), 12);
  const auto path = (std::filesystem::temp_directory_path() / "soltrunc_mask_test.bin").string();
  g.write_mask(path);
  const auto h = GoodSet<3>::read_mask(path, 2.0);
  std::remove(path.c_str());
  CHECK(h.bad == g.bad);
  CHECK(h.grid.extents == g.grid.extents);
  CHECK(h.grid.spacing == g.grid.spacing);
  CHECK(h.distance == g.distance);
}

TEST_CASE("bad-set measure bound is finite on the spike") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto g = good_set<3>(u, 2.0, Box<3>(Vec3::Constant(-3), Vec3::Constant(3)), 16);
  const auto b = bad_set_bound_check(u, g, 2.0);
  CHECK(b.lhs > 0);
  CHECK(b.rhs > 0);
  CHECK(std::isfinite(b.constant));
  CHECK_FALSE(b.flagged);
}
