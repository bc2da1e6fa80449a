#include "doctest.h"
#include "soltrunc/verify.hpp"
#include "test_util.hpp"

#include <set>

using namespace soltrunc;

namespace {

std::shared_ptr<const WhitneyCover<3>> ball_cover(double min_side = 0) {
  auto ball = std::make_shared<BallBadSet<3>>(Vec3::Zero(), 1.0);
  WhitneyOptions o;
  o.min_side = min_side;
  return std::make_shared<const WhitneyCover<3>>(build_cover<3>(ball, 1.0 / 64, o));
}

std::shared_ptr<const WhitneyCover<3>> half_space_cover() {
  auto half = std::make_shared<HalfSpaceBadSet<3>>(0.0, Box<3>(Vec3::Constant(-1), Vec3::Constant(1)));
  WhitneyOptions o;
  o.min_side = 1.0 / 16;
  return std::make_shared<const WhitneyCover<3>>(build_cover<3>(half, 1.0 / 64, o));
}

std::shared_ptr<const WhitneyCover<3>> spike_cover(double lambda = 2.0, int resolution = 16) {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  auto good = std::make_shared<GoodSet<3>>(good_set<3>(u, lambda, Box<3>(Vec3::Constant(-3), Vec3::Constant(3)), resolution));
  return std::make_shared<const WhitneyCover<3>>(build_cover<3>(std::make_shared<VoxelBadSet<3>>(good), 1.0 / 64));
}

// All dyadic cubes below the root that satisfy dist >= side while their
// parent does not, by scanning every level.
std::set<std::pair<int, std::array<std::int64_t, 3>>> brute_force_ball_cubes(double r, double min_side) {
  std::set<std::pair<int, std::array<std::int64_t, 3>>> out;
  const Box<3> root = Box<3>::centered(Vec3::Zero(), 2 * r);
  const double side0 = root.extent()(0);
  auto dist = [&](const Box<3>& q) { return std::max(0.0, r - q.far_distance(Vec3::Zero())); };
  for (int level = 1; side0 * std::ldexp(1.0, -level) >= min_side * (1 - 1e-12); ++level) {
    const double s = side0 * std::ldexp(1.0, -level);
    const std::int64_t n = std::int64_t(1) << level;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t k = 0; k < n; ++k) {
          const Vec3 lo = root.lo + s * Vec3(double(i), double(j), double(k));
          const Box<3> q(lo, lo.array() + s);
          if (dist(q) < s) continue;
          const Vec3 plo = root.lo + 2 * s * Vec3(double(i / 2), double(j / 2), double(k / 2));
          const Box<3> parent(plo, plo.array() + 2 * s);
          if (dist(parent) >= 2 * s) continue;
          out.insert({level, {i, j, k}});
        }
  }
  return out;
}

template <int Dim>
void check_partition(const WhitneyCover<Dim>& c, int count, std::uint64_t seed) {
  const auto cover = std::make_shared<const WhitneyCover<Dim>>(c);
  const PartitionOfUnity<Dim> pu(cover);
  const auto pts = interior_bad_samples(*cover, count, seed, cover->guaranteed_cover_distance());
  REQUIRE(pts.size() == static_cast<std::size_t>(count));
  double worst_sum = 0, worst_grad = 0;
  for (const auto& y : pts) {
    const auto p = pu.evaluate(y);
    double s = 0, gscale = 0;
    Vec<Dim> g = Vec<Dim>::Zero();
    for (std::size_t k = 0; k < p.size(); ++k) {
      s += p.value[k];
      g += p.gradient[k];
      gscale += p.gradient[k].norm();
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1));
    if (gscale > 0) worst_grad = std::max(worst_grad, g.norm() / gscale);
  }
  CHECK(worst_sum <= 1e-14);
  CHECK(worst_grad <= 1e-12);
}

}  // namespace

TEST_CASE("Whitney invariants hold on half-space, ball and spike good sets") {
  const std::vector<std::pair<std::string, std::shared_ptr<const WhitneyCover<3>>>> covers = {
      {"half-space", half_space_cover()}, {"ball", ball_cover()}, {"spike", spike_cover()}};
  for (const auto& [name, c] : covers) {
    CAPTURE(name);
    REQUIRE(c->size() > 0);
    const auto pts = interior_bad_samples(*c, 1000, 5, c->guaranteed_cover_distance());
    const auto r = check_cover_invariants(*c, pts, 0, 152);
    CHECK(r.samples == 1000);
    CHECK(r.disjointness == 0);
    CHECK(r.covering == 0);
    CHECK(r.distance_comparability == 0);
    CHECK(r.neighbour_comparability == 0);
    CHECK(r.bounded_overlap == 0);
    CHECK(r.projection == 0);
    CHECK(r.enlarged == 0);
    CHECK(r.min_distance_ratio >= 1.0);
    CHECK(r.max_distance_ratio <= 4.0 * std::sqrt(3.0));
  }
}

TEST_CASE("ball cover equals the brute-force dyadic enumeration") {
  const auto c = ball_cover(1.0 / 16);
  const auto expected = brute_force_ball_cubes(1.0, 1.0 / 16);
  std::set<std::pair<int, std::array<std::int64_t, 3>>> got;
  for (const auto& q : c->cubes) got.insert({q.level, q.index});
  CHECK(got.size() == c->size());
  CHECK(got == expected);
}

TEST_CASE("frozen cube counts") {
  // Regression values from the reference build.
  CHECK(ball_cover()->size() == 4608);
  CHECK(ball_cover()->overlapping_pairs().size() == 43532);
  CHECK(spike_cover()->size() == 570);
  CHECK(spike_cover(1.0, 16)->size() == 1137);
  auto disk = std::make_shared<BallBadSet<2>>(Vec2::Zero(), 1.0);
  CHECK(build_cover<2>(disk, 1.0 / 64).size() == 240);
}

TEST_CASE("partition of unity sums to one with vanishing gradient sum") {
  check_partition(*half_space_cover(), 1000, 7);
  check_partition(*ball_cover(), 1000, 8);
  check_partition(*spike_cover(), 1000, 9);
  auto disk = std::make_shared<BallBadSet<2>>(Vec2::Zero(), 1.0);
  check_partition(build_cover<2>(disk, 1.0 / 64), 1000, 10);
}

TEST_CASE("partition functions: empty on X, defect near X, derivatives by differences") {
  const auto c = ball_cover();
  const PartitionOfUnity<3> pu(c);
  CHECK(pu.evaluate(Vec3(1.5, 0, 0)).size() == 0);
  CHECK(pu.evaluate(Vec3(1.0, 0, 0)).size() == 0);
  // Closer to X than any admitted cube reaches.
  CHECK_THROWS_AS(pu.evaluate(Vec3(1 - 1e-7, 0, 0)), CoverDefectError);

  testutil::Gen gen(12);
  const auto pts = interior_bad_samples(*c, 50, 13, c->guaranteed_cover_distance());
  for (const auto& y : pts) {
    const auto p = pu.evaluate(y);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const int i = p.index[k];
      auto phi = [&](const Vec3& x) {
        const auto q = pu.evaluate(x);
        for (std::size_t m = 0; m < q.size(); ++m)
          if (q.index[m] == i) return Eigen::Matrix<double, 1, 1>(q.value[m]);
        return Eigen::Matrix<double, 1, 1>(0.0);
      };
      auto grad = [&](const Vec3& x) -> Vec3 {
        const auto q = pu.evaluate(x);
        for (std::size_t m = 0; m < q.size(); ++m)
          if (q.index[m] == i) return q.gradient[m];
        return Vec3::Zero();
      };
      const double h = 1e-6 * c->cubes[static_cast<std::size_t>(i)].side * c->epsilon;
      const Vec3 gd = testutil::central_jacobian<1, 3>(phi, y, h).transpose();
      const Mat3 Hd = testutil::central_jacobian<3, 3>(grad, y, h);
      const double gs = std::max(1.0, p.gradient[k].norm());
      CHECK((p.gradient[k] - gd).norm() <= 1e-5 * gs);
      CHECK((p.hessian[k] - Hd).norm() <= 1e-5 * std::max(1.0, p.hessian[k].norm()));
      CHECK(p.value[k] >= 0.0);
      CHECK(p.value[k] <= 1.0);
    }
  }
}

TEST_CASE("smooth step: values, symmetry and derivatives") {
  double v, d1, d2;
  SmoothStep<>::evaluate(0.5, v, d1, d2);
  CHECK(v == doctest::Approx(0.5));
  CHECK(d2 == doctest::Approx(0.0).epsilon(1e-12));
  testutil::Gen gen(14);
  for (int s = 0; s < 200; ++s) {
    const double x = gen.uniform(0.02, 0.98), h = 1e-6;
    double vp, vm, dp, dm, a, b;
    SmoothStep<>::evaluate(x, v, d1, d2);
    SmoothStep<>::evaluate(1 - x, a, b, b);
    CHECK(v + a == doctest::Approx(1.0).epsilon(1e-15));
    SmoothStep<>::evaluate(x + h, vp, dp, a);
    SmoothStep<>::evaluate(x - h, vm, dm, a);
    CHECK(d1 == doctest::Approx((vp - vm) / (2 * h)).epsilon(1e-6));
    CHECK(d2 == doctest::Approx((dp - dm) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("mu measures: probability on the half cube with variance l^2/48") {
  const auto c = ball_cover();
  for (std::size_t i = 0; i < c->size(); i += 97) {
    const auto mu = mu_quadrature(*c, i, 2);
    const double l = c->cubes[i].side;
    const Vec3 ctr = c->cubes[i].center();
    double w = 0;
    Vec3 mean = Vec3::Zero();
    Mat3 second = Mat3::Zero();
    for (std::size_t q = 0; q < mu.nodes.size(); ++q) {
      w += mu.weights[q];
      mean += mu.weights[q] * mu.nodes[q];
      second += mu.weights[q] * (mu.nodes[q] - ctr) * (mu.nodes[q] - ctr).transpose();
      CHECK(c->cubes[i].scaled(0.5).contains(mu.nodes[q]));
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((mean - ctr).norm() <= 1e-15 * (1 + ctr.norm()));
    CHECK((second - Mat3::Identity() * l * l / 48).norm() <= 1e-15 * l * l);
  }
}
