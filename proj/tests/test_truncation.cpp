#include "doctest.h"
#include "soltrunc/verify.hpp"
#include "test_util.hpp"

using namespace soltrunc;

namespace {

std::shared_ptr<const WhitneyCover<3>> small_ball_cover() {
  static const auto c = [] {
    auto ball = std::make_shared<BallBadSet<3>>(Vec3::Zero(), 1.0);
    WhitneyOptions o;
    o.min_side = 1.0 / 8;
    return std::make_shared<const WhitneyCover<3>>(build_cover<3>(ball, 1.0 / 64, o));
  }();
  return c;
}

// n-point Gauss-Legendre nodes and weights on the concentric half cube of Q.
std::vector<std::pair<Vec3, double>> half_cube_gauss(const DyadicCube<3>& q, int n) {
  const auto g = gauss_legendre<double>(n);
  const Vec3 lo = q.center().array() - q.side / 4;
  std::vector<std::pair<Vec3, double>> out;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        out.push_back({lo + q.side / 2 * Vec3(g.nodes[a], g.nodes[b], g.nodes[c]),
                       g.weights[a] * g.weights[b] * g.weights[c]});
  return out;
}

// Triple corrector at y by a tensor Gauss product over the three half cubes
// and the edge-midpoint rule on each triangle (exact for quadratics). The
// integrand has degree <= 3 in each coordinate for fields up to quadratic, so
// both this rule and the truncator's 2-point measure rule are exact.
double triple_oracle(const AnalyticField<3>& u, const WhitneyCover<3>& c, int i, int j, int k, const Vec3& y, int n) {
  const auto qi = half_cube_gauss(c.cubes[i], n), qj = half_cube_gauss(c.cubes[j], n), qk = half_cube_gauss(c.cubes[k], n);
  double s = 0;
  for (const auto& [xi, wi] : qi)
    for (const auto& [xj, wj] : qj)
      for (const auto& [xk, wk] : qk) {
        const Vec3 nrm = 0.5 * (xj - xi).cross(xk - xi);
        const Vec3 mids[3] = {(xi + xj) / 2, (xj + xk) / 2, (xk + xi) / 2};
        double avg = 0;
        for (const auto& z : mids) avg += nrm.dot(u.jacobian(z) * (y - z)) / 3;
        s += wi * wj * wk * avg;
      }
  return s;
}

Mat3 pair_matrix(const PairCorrector<3>& A, const Vec3& y) { return A(y); }

}  // namespace

TEST_CASE("pair corrector matches the closed form for affine fields") {
  testutil::Gen gen(31);
  const Mat3 G = gen.tracefree();
  const auto u = affine_field<3>(gen.point<3>(), G);
  const auto cover = small_ball_cover();
  const SolenoidalTruncator tr(u, cover);
  REQUIRE(tr.pair_count() > 100);
  for (std::size_t n = 0; n < tr.pair_count(); n += 7) {
    const auto [i, j] = tr.pair_keys()[n];
    const auto& Qi = cover->cubes[static_cast<std::size_t>(i)];
    const auto& Qj = cover->cubes[static_cast<std::size_t>(j)];
    const Vec3 ci = Qi.center(), cj = Qj.center();
    const Vec3 anchor = (ci + cj) / 2;
    const Vec3 g = G * (ci - cj);
    const double si = Qi.side * Qi.side / 48, sj = Qj.side * Qj.side / 48;
    const Mat3 M = (anchor - (ci + cj) / 2) * g.transpose() - (si - sj) / 2 * G.transpose();
    const auto A = tr.build_A(i, j);
    const double scale = std::max(1.0, g.norm());
    CHECK((A.g - g).norm() <= 1e-13 * scale);
    CHECK((A.M - M).norm() <= 1e-13 * scale);
    const Vec3 y = gen.point<3>(-1, 1);
    CHECK((pair_matrix(A, y) - (M + (y - anchor) * g.transpose())).norm() <= 1e-12 * scale);
  }
}

TEST_CASE("triple corrector matches a tensor Gauss oracle") {
  testutil::Gen gen(32);
  const auto cover = small_ball_cover();
  struct Case {
    std::string name;
    AnalyticField<3> u;
    int points;
  };
  const std::vector<Case> cases = {{"affine", affine_field<3>(gen.point<3>(), gen.tracefree()), 3},
                                   {"quadratic", exactness_field(), 3}};
  for (const auto& cs : cases) {
    CAPTURE(cs.name);
    const SolenoidalTruncator tr(cs.u, cover);
    REQUIRE(tr.triple_count() > 0);
    const std::size_t step = std::max<std::size_t>(1, tr.triple_count() / 6);
    for (std::size_t n = 0; n < tr.triple_count(); n += step) {
      const auto [i, j, k] = tr.triple_keys()[n];
      const auto B = tr.build_B(i, j, k);
      for (int s = 0; s < 2; ++s) {
        const Vec3 y = gen.point<3>(-1, 1);
        const double want = triple_oracle(cs.u, *cover, i, j, k, y, cs.points);
        CHECK(B(y) == doctest::Approx(want).epsilon(1e-11).scale(1e-12));
      }
    }
  }
}

TEST_CASE("correctors are antisymmetric under index exchange") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto cover = small_ball_cover();
  const SolenoidalTruncator tr(u, cover);
  testutil::Gen gen(33);
  for (std::size_t n = 0; n < tr.pair_count(); n += 11) {
    const auto [i, j] = tr.pair_keys()[n];
    const Vec3 y = gen.point<3>(-1, 1);
    const Mat3 a = tr.build_A(i, j)(y), b = tr.build_A(j, i)(y);
    CHECK((a + b).norm() <= 1e-12 * std::max(1e-3, a.norm()));
    CHECK((tr.A(i, j)(y) + tr.A(j, i)(y)).norm() == 0.0);
  }
  for (std::size_t n = 0; n < tr.triple_count(); n += 13) {
    const auto [i, j, k] = tr.triple_keys()[n];
    const Vec3 y = gen.point<3>(-1, 1);
    const double b = tr.build_B(i, j, k)(y);
    const double tol = 1e-12 * std::max(1e-3, std::abs(b));
    CHECK(std::abs(b + tr.build_B(j, i, k)(y)) <= tol);
    CHECK(std::abs(b - tr.build_B(j, k, i)(y)) <= tol);
    CHECK(std::abs(b + tr.build_B(i, k, j)(y)) <= tol);
    CHECK(tr.B(i, j, k)(y) == -tr.B(j, i, k)(y));
    CHECK(tr.B(i, j, k)(y) == tr.B(k, i, j)(y));
  }
}

TEST_CASE("truncation equals u on the good set") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto cover = small_ball_cover();
  const SolenoidalTruncator tr(u, cover);
  testutil::Gen gen(34);
  for (int s = 0; s < 200; ++s) {
    // Inside the root box, outside the ball.
    Vec3 y = gen.point<3>(-1, 1);
    while (y.norm() < 1) y = gen.point<3>(-1, 1);
    const auto t = tr.evaluate(y);
    CHECK(t.good);
    CHECK((t.value - u.value(y)).norm() == 0.0);
    CHECK((t.jacobian - u.jacobian(y)).norm() == 0.0);
  }
}

TEST_CASE("linear divergence-free fields truncate to divergence-free fields") {
  testutil::Gen gen(35);
  const auto cover = small_ball_cover();
  for (int rep = 0; rep < 3; ++rep) {
    const auto u = affine_field<3>(gen.point<3>(), gen.tracefree());
    const SolenoidalTruncator tr(u, cover);
    const auto pts = interior_bad_samples(*cover, 200, 36 + rep, cover->guaranteed_cover_distance());
    for (const auto& y : pts) {
      const auto d = tr.divergence_parts(y);
      CHECK(std::abs(d.total()) <= 1e-12 * std::max(1.0, d.term_scale));
      CHECK(std::abs(tr.jacobian(y).trace()) <= 1e-12 * std::max(1.0, d.term_scale));
    }
  }
}

TEST_CASE("analytic Jacobian of the truncation agrees with central differences") {
  const auto u = spike_field(Vec3::Zero(), 6, 0.4);
  const auto cover = small_ball_cover();
  const SolenoidalTruncator tr(u, cover);
  const auto pts = interior_bad_samples(*cover, 60, 37, cover->guaranteed_cover_distance());
  for (const auto& y : pts) {
    double smallest = 1e300;
    for (int i : cover->containing(y)) smallest = std::min(smallest, cover->cubes[static_cast<std::size_t>(i)].side);
    const double h = 1e-5 * smallest * cover->epsilon / 2;
    const Mat3 J = tr.jacobian(y);
    const Mat3 F = testutil::central_jacobian<3, 3>([&](const Vec3& x) { return tr.value(x); }, y, h);
    CHECK((J - F).norm() <= 1e-6 * std::max(1.0, J.norm()));
  }
}

TEST_CASE("classical truncation of a constant field is that constant") {
  const auto u = affine_field<3>(Vec3(1, -2, 0.5), Mat3::Zero());
  const ClassicalTruncator<3> tr(u, small_ball_cover());
  const auto pts = interior_bad_samples(*small_ball_cover(), 200, 38, small_ball_cover()->guaranteed_cover_distance());
  for (const auto& y : pts) {
    CHECK((tr.value(y) - Vec3(1, -2, 0.5)).norm() <= 1e-14);
    CHECK(tr.jacobian(y).norm() <= 1e-10);
  }
}

TEST_CASE("2-D curl-free truncation of a linear gradient has zero curl") {
  auto disk = std::make_shared<BallBadSet<2>>(Vec2::Zero(), 1.0);
  const auto cover = std::make_shared<const WhitneyCover<2>>(build_cover<2>(disk, 1.0 / 64));
  Mat2 S;
  S << 0.7, -0.3, -0.3, 0.2;
  const CurlFreeTruncator<2> tr(affine_field<2>(Vec2(0.1, 0.4), S), cover);
  const auto pts = interior_bad_samples(*cover, 300, 39, cover->guaranteed_cover_distance());
  for (const auto& y : pts) {
    const Mat2 J = tr.jacobian(y);
    CHECK(std::abs(tr.curl(y)) <= 1e-12 * std::max(1.0, J.norm()));
  }
  Mat2 R;
  R << 0, 1, -1, 0;
  CHECK_THROWS_AS(CurlFreeTruncator<2>(affine_field<2>(Vec2::Zero(), R), cover), PreconditionError);
}
