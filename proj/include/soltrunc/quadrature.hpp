#ifndef SOLTRUNC_QUADRATURE_HPP
#define SOLTRUNC_QUADRATURE_HPP

#include "soltrunc/core.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <type_traits>
#include <vector>

namespace soltrunc {

// Rule on [0, 1] with weights summing to one.
template <typename Scalar = double>
struct LineRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;
  int degree = 0;
};

// Gauss-Legendre with n points, exact for degree 2n - 1.
template <typename Scalar = double>
LineRule<Scalar> gauss_legendre(int n) {
  using std::abs;
  using std::cos;
  if (n < 1) throw QuadratureError("gauss_legendre needs at least one point");
  LineRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.degree = 2 * n - 1;
  const Scalar pi = Scalar(3.14159265358979323846264338327950288L);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 1;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      Scalar step = p1 / dp;
      x -= step;
      if (abs(step) <= 4 * Eigen::NumTraits<Scalar>::epsilon() * abs(x)) break;
    }
    {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    const Scalar w = Scalar(1) / ((1 - x * x) * dp * dp);
    rule.nodes[i] = (1 - x) / 2;
    rule.nodes[n - 1 - i] = (1 + x) / 2;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Barycentric rule on a simplex with Vertices corners; weights sum to one.
template <int Vertices>
struct SimplexRule {
  Eigen::Matrix<double, Eigen::Dynamic, Vertices> barycentric;
  Eigen::VectorXd weights;
  int degree = 0;

  Eigen::Index size() const { return weights.size(); }

  template <int Dim>
  Vec<Dim> node(Eigen::Index q, const Eigen::Matrix<double, Dim, Vertices>& corners) const {
    return corners * barycentric.row(q).transpose();
  }
};

using SegmentRule = SimplexRule<2>;
using TriangleRule = SimplexRule<3>;
using TetraRule = SimplexRule<4>;

// Smallest available rule exact for polynomials of total degree <= degree.
SegmentRule segment_rule(int degree);
TriangleRule triangle_rule(int degree);
TetraRule tetra_rule(int degree);

namespace detail {
template <typename T>
auto eval_value(const T& x) {
  if constexpr (std::is_arithmetic_v<T>)
    return x;
  else
    return x.eval();
}
}  // namespace detail

// Average of f over the segment [a, b].
template <int Dim, typename F>
auto segment_average(const F& f, const Vec<Dim>& a, const Vec<Dim>& b, const SegmentRule& rule) {
  Eigen::Matrix<double, Dim, 2> corners;
  corners << a, b;
  auto acc = detail::eval_value(rule.weights(0) * f(rule.node<Dim>(0, corners)));
  for (Eigen::Index q = 1; q < rule.size(); ++q) acc += rule.weights(q) * f(rule.node<Dim>(q, corners));
  return acc;
}

// Average of f over the triangle with corners a, b, c.
template <int Dim, typename F>
auto triangle_average(const F& f, const Vec<Dim>& a, const Vec<Dim>& b, const Vec<Dim>& c,
                      const TriangleRule& rule) {
  Eigen::Matrix<double, Dim, 3> corners;
  corners << a, b, c;
  auto acc = detail::eval_value(rule.weights(0) * f(rule.node<Dim>(0, corners)));
  for (Eigen::Index q = 1; q < rule.size(); ++q) acc += rule.weights(q) * f(rule.node<Dim>(q, corners));
  return acc;
}

template <typename F>
auto tetra_average(const F& f, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                   const TetraRule& rule) {
  Eigen::Matrix<double, 3, 4> corners;
  corners << a, b, c, d;
  auto acc = detail::eval_value(rule.weights(0) * f(rule.node<3>(0, corners)));
  for (Eigen::Index q = 1; q < rule.size(); ++q) acc += rule.weights(q) * f(rule.node<3>(q, corners));
  return acc;
}

// Curl from a Jacobian J(b, c) = d_c u_b.
inline Vec3 curl_of(const Mat3& J) {
  return Vec3(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
}

// Area vector 1/2 (b - a) x (c - a) of the oriented triangle [a, b, c].
inline Vec3 area_vector(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a);
}

// Signed volume of [a, b, c, d].
inline double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 m;
  m << b - a, c - a, d - a;
  return m.determinant() / 6.0;
}

// |u(x1) - u(x2) - avg_[x1,x2] Du (x1 - x2)|.
template <typename Field, int Dim>
double fundamental_theorem_check(const Field& u, const Vec<Dim>& x1, const Vec<Dim>& x2,
                                 const SegmentRule& rule) {
  const Vec<Dim> d = x1 - x2;
  Vec<Dim> avg = segment_average<Dim>([&](const Vec<Dim>& z) -> Vec<Dim> { return u.jacobian(z) * d; },
                                      x1, x2, rule);
  return (u.value(x1) - u.value(x2) - avg).norm();
}

// Sum over edges (1,2), (2,3), (3,1) of avg v.(x_a - x_b) plus
// avg n.curl v with n the area vector of [x1, x2, x3]. Zero for exact rules.
template <typename Field>
double stokes_triangle_check(const Field& v, const Vec3& x1, const Vec3& x2, const Vec3& x3,
                             const SegmentRule& seg, const TriangleRule& tri) {
  const Vec3* x[3] = {&x1, &x2, &x3};
  double edges = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec3& a = *x[e];
    const Vec3& b = *x[(e + 1) % 3];
    const Vec3 d = a - b;
    edges += segment_average<3>([&](const Vec3& z) { return v.value(z).dot(d); }, a, b, seg);
  }
  const Vec3 n = area_vector(x1, x2, x3);
  const double flux = triangle_average<3>([&](const Vec3& z) { return n.dot(curl_of(v.jacobian(z))); },
                                          x1, x2, x3, tri);
  return std::abs(edges + flux);
}

// Outward flux of w through the boundary of [x1, x2, x3, x4] against the
// volume integral of div w. Faces (1,2,3) and (3,4,1) enter with a minus sign.
template <typename Field>
double gauss_green_check(const Field& w, const Vec3& x1, const Vec3& x2, const Vec3& x3, const Vec3& x4,
                         const TriangleRule& tri, const TetraRule& tet) {
  const Vec3* x[4] = {&x1, &x2, &x3, &x4};
  static const int faces[4][3] = {{0, 1, 2}, {1, 2, 3}, {2, 3, 0}, {3, 0, 1}};
  static const double sign[4] = {-1.0, 1.0, -1.0, 1.0};
  double boundary = 0.0;
  for (int f = 0; f < 4; ++f) {
    const Vec3& a = *x[faces[f][0]];
    const Vec3& b = *x[faces[f][1]];
    const Vec3& c = *x[faces[f][2]];
    const Vec3 n = area_vector(a, b, c);
    boundary += sign[f] * triangle_average<3>([&](const Vec3& z) { return w.value(z).dot(n); }, a, b, c, tri);
  }
  const double vol = signed_volume(x1, x2, x3, x4);
  const double interior =
      vol * tetra_average([&](const Vec3& z) { return w.jacobian(z).trace(); }, x1, x2, x3, x4, tet);
  return std::abs(boundary - interior);
}

// Pointwise pair corrector D_ab(x1, x2)(y) = avg_[x1,x2] of
// (Du_b.(x1 - x2)) (y - z)_a - (Du_a.(x1 - x2)) (y - z)_b.
template <typename Field>
double pair_curl_corrector(const Field& u, const Vec3& x1, const Vec3& x2, const Vec3& y, int a, int b,
                           const SegmentRule& seg) {
  const Vec3 d = x1 - x2;
  return segment_average<3>(
      [&](const Vec3& z) {
        const Vec3 g = u.jacobian(z) * d;
        return g(b) * (y - z)(a) - g(a) * (y - z)(b);
      },
      x1, x2, seg);
}

// Pointwise triple corrector B(x1, x2, x3)(y) = avg_Sim n . sum_a d_a u(z) (y - z)_a.
template <typename Field>
double triple_corrector(const Field& u, const Vec3& x1, const Vec3& x2, const Vec3& x3, const Vec3& y,
                        const TriangleRule& tri) {
  const Vec3 n = area_vector(x1, x2, x3);
  return triangle_average<3>([&](const Vec3& z) { return n.dot(u.jacobian(z) * (y - z)); }, x1, x2, x3, tri);
}

// Loop identity for pair correctors: for each cyclic (a, b, c),
// D_ab(1,2) + D_ab(2,3) + D_ab(3,1) + avg_Sim (n.d_c u - n_c div u) = 0.
// Returns the largest residual over the three cyclic choices.
template <typename Field>
double stokes_A_identity_check(const Field& u, const Vec3& x1, const Vec3& x2, const Vec3& x3, const Vec3& y,
                               const SegmentRule& seg, const TriangleRule& tri) {
  const Vec3 n = area_vector(x1, x2, x3);
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    const int a = (c + 1) % 3, b = (c + 2) % 3;
    const double loop = pair_curl_corrector(u, x1, x2, y, a, b, seg) + pair_curl_corrector(u, x2, x3, y, a, b, seg) +
                        pair_curl_corrector(u, x3, x1, y, a, b, seg);
    const double flux = triangle_average<3>(
        [&](const Vec3& z) {
          const Mat3 J = u.jacobian(z);
          return n.dot(J.col(c)) - n(c) * J.trace();
        },
        x1, x2, x3, tri);
    worst = std::max(worst, std::abs(loop + flux));
  }
  return worst;
}

// Cocycle identity B(i,j,k) - B(i,j,l) - B(i,l,k) - B(l,j,k) equals the
// volume integral over [l,i,j,k] of div_z sum_a d_a u(z) (y - z)_a, which
// vanishes for solenoidal u. Returns the residual against that volume term.
template <typename Field>
double stokes_B_identity_check(const Field& u, const Vec3& xi, const Vec3& xj, const Vec3& xk, const Vec3& xl,
                               const Vec3& y, const TriangleRule& tri, const TetraRule& tet,
                               double hessian_step = 1e-5) {
  const double lhs = triple_corrector(u, xi, xj, xk, y, tri) - triple_corrector(u, xi, xj, xl, y, tri) -
                     triple_corrector(u, xi, xl, xk, y, tri) - triple_corrector(u, xl, xj, xk, y, tri);
  const double vol = signed_volume(xl, xi, xj, xk);
  const double interior = vol * tetra_average(
                                    [&](const Vec3& z) {
                                      Vec3 grad_div;
                                      for (int a = 0; a < 3; ++a) {
                                        Vec3 e = Vec3::Zero();
                                        e(a) = hessian_step;
                                        grad_div(a) = (u.jacobian(z + e).trace() - u.jacobian(z - e).trace()) /
                                                      (2 * hessian_step);
                                      }
                                      return grad_div.dot(y - z) - u.jacobian(z).trace();
                                    },
                                    xl, xi, xj, xk, tet);
  return std::abs(lhs - interior);
}

}  // namespace soltrunc

#endif
