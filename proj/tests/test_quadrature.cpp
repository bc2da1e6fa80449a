#include "doctest.h"
#include "soltrunc/quadrature.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace soltrunc;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// Average of prod lambda_k^alpha_k over a simplex with n + 1 vertices:
// n! prod alpha_k! / (n + |alpha|)!.
template <int Vertices>
double barycentric_moment(const std::array<int, Vertices>& alpha) {
  const int n = Vertices - 1;
  double num = factorial(n);
  int total = 0;
  for (int a : alpha) {
    num *= factorial(a);
    total += a;
  }
  return num / factorial(n + total);
}

template <int Vertices>
double rule_moment(const SimplexRule<Vertices>& rule, const std::array<int, Vertices>& alpha) {
  double s = 0;
  for (Eigen::Index q = 0; q < rule.size(); ++q) {
    double v = rule.weights(q);
    for (int k = 0; k < Vertices; ++k) v *= std::pow(rule.barycentric(q, k), alpha[k]);
    s += v;
  }
  return s;
}

template <int Vertices, typename Visit>
void for_each_exponent(int degree, std::array<int, Vertices>& alpha, int k, int left, const Visit& visit) {
  if (k == Vertices) {
    visit(alpha);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    alpha[k] = e;
    for_each_exponent<Vertices>(degree, alpha, k + 1, left - e, visit);
  }
  alpha[k] = 0;
}

template <int Vertices>
double worst_moment_error(const SimplexRule<Vertices>& rule, int degree) {
  double worst = 0;
  std::array<int, Vertices> alpha{};
  for_each_exponent<Vertices>(degree, alpha, 0, degree, [&](const std::array<int, Vertices>& a) {
    worst = std::max(worst, std::abs(rule_moment<Vertices>(rule, a) - barycentric_moment<Vertices>(a)));
  });
  return worst;
}

}  // namespace

TEST_CASE("gauss_legendre integrates x^k on [0,1] up to degree 2n-1") {
  for (int n = 1; n <= 16; ++n) {
    const auto g = gauss_legendre<double>(n);
    CHECK(g.degree == 2 * n - 1);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0;
      for (int q = 0; q < n; ++q) s += g.weights[q] * std::pow(g.nodes[q], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_legendre<double>(0), QuadratureError);
}

TEST_CASE("simplex rules reproduce barycentric monomial averages") {
  for (int d = 1; d <= 20; ++d) {
    const auto seg = segment_rule(d);
    CHECK(seg.degree >= d);
    CHECK(worst_moment_error(seg, d) < 1e-14);
  }
  for (int d = 1; d <= 12; ++d) {
    CAPTURE(d);
    const auto tri = triangle_rule(d);
    CHECK(tri.degree >= d);
    CHECK(worst_moment_error(tri, d) < 1e-14);
  }
  for (int d = 1; d <= 10; ++d) {
    CAPTURE(d);
    const auto tet = tetra_rule(d);
    CHECK(tet.degree >= d);
    CHECK(worst_moment_error(tet, d) < 1e-14);
  }
}

TEST_CASE("simplex rules have positive weights summing to one") {
  for (int d : {2, 4, 6, 8}) {
    const auto tri = triangle_rule(d);
    const auto tet = tetra_rule(d);
    CHECK(tri.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tet.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tri.weights.minCoeff() > 0);
    CHECK(tet.weights.minCoeff() > 0);
    CHECK(((tri.barycentric.rowwise().sum().array() - 1).abs() < 1e-15).all());
  }
}

TEST_CASE("geometric helpers") {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0), d(0, 0, 1);
  CHECK(area_vector(a, b, c).isApprox(Vec3(0, 0, 0.5)));
  CHECK(signed_volume(a, b, c, d) == doctest::Approx(1.0 / 6));
  CHECK(signed_volume(a, c, b, d) == doctest::Approx(-1.0 / 6));
  Mat3 J;
  J << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  // curl = (d_y w - d_z v, d_z u - d_x w, d_x v - d_y u)
  CHECK(curl_of(J).isApprox(Vec3(8 - 6, 3 - 7, 4 - 2)));
}
