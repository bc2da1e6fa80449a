#include "soltrunc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace soltrunc {

namespace {

template <int V>
struct Builder {
  std::vector<std::array<double, V>> points;
  std::vector<double> weights;

  void orbit(double w, std::array<double, V> p) {
    std::sort(p.begin(), p.end());
    do {
      points.push_back(p);
      weights.push_back(w);
    } while (std::next_permutation(p.begin(), p.end()));
  }

  SimplexRule<V> finish(int degree) const {
    SimplexRule<V> rule;
    rule.degree = degree;
    rule.barycentric.resize(static_cast<Eigen::Index>(points.size()), V);
    rule.weights.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t q = 0; q < points.size(); ++q) {
      for (int v = 0; v < V; ++v) rule.barycentric(static_cast<Eigen::Index>(q), v) = points[q][v];
      rule.weights(static_cast<Eigen::Index>(q)) = weights[q];
    }
    return rule;
  }
};

// Conical product rule averaged over every vertex permutation, for degrees
// beyond the tabulated symmetric rules.
TriangleRule collapsed_triangle(int degree) {
  const auto gs = gauss_legendre<double>((degree + 3) / 2);
  const auto gt = gauss_legendre<double>((degree + 2) / 2);
  Builder<3> b;
  for (std::size_t i = 0; i < gs.nodes.size(); ++i)
    for (std::size_t j = 0; j < gt.nodes.size(); ++j) {
      const double s = gs.nodes[i], t = gt.nodes[j];
      const double w = 2.0 * gs.weights[i] * gt.weights[j] * (1 - s);
      std::array<double, 3> p = {1 - s - (1 - s) * t, s, (1 - s) * t};
      std::array<int, 3> perm = {0, 1, 2};
      do {
        b.points.push_back({p[perm[0]], p[perm[1]], p[perm[2]]});
        b.weights.push_back(w / 6.0);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  return b.finish(degree);
}

TetraRule collapsed_tetra(int degree) {
  const auto gs = gauss_legendre<double>((degree + 4) / 2);
  const auto gt = gauss_legendre<double>((degree + 3) / 2);
  const auto gr = gauss_legendre<double>((degree + 2) / 2);
  Builder<4> b;
  for (std::size_t i = 0; i < gs.nodes.size(); ++i)
    for (std::size_t j = 0; j < gt.nodes.size(); ++j)
      for (std::size_t k = 0; k < gr.nodes.size(); ++k) {
        const double s = gs.nodes[i], t = gt.nodes[j], r = gr.nodes[k];
        const double x = s, y = (1 - s) * t, z = (1 - s) * (1 - t) * r;
        const double w = 6.0 * gs.weights[i] * gt.weights[j] * gr.weights[k] * (1 - s) * (1 - s) * (1 - t);
        std::array<double, 4> p = {1 - x - y - z, x, y, z};
        std::array<int, 4> perm = {0, 1, 2, 3};
        do {
          b.points.push_back({p[perm[0]], p[perm[1]], p[perm[2]], p[perm[3]]});
          b.weights.push_back(w / 24.0);
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
  return b.finish(degree);
}

}  // namespace

SegmentRule segment_rule(int degree) {
  if (degree < 0) throw QuadratureError("negative quadrature degree");
  const auto g = gauss_legendre<double>(degree / 2 + 1);
  SegmentRule rule;
  rule.degree = g.degree;
  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  rule.barycentric.resize(n, 2);
  rule.weights.resize(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    rule.barycentric(q, 0) = 1 - g.nodes[q];
    rule.barycentric(q, 1) = g.nodes[q];
    rule.weights(q) = g.weights[q];
  }
  return rule;
}

// Symmetric rules with positive weights and interior nodes; orbit values are
// the classical tabulations refined to double precision on the moment equations.
TriangleRule triangle_rule(int degree) {
  if (degree < 0) throw QuadratureError("negative quadrature degree");
  Builder<3> b;
  if (degree <= 1) {
    b.orbit(1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    return b.finish(1);
  }
  if (degree == 2) {
    b.orbit(1.0 / 3, {2.0 / 3, 1.0 / 6, 1.0 / 6});
    return b.finish(2);
  }
  if (degree <= 4) {
    const double a1 = 0.44594849091596488632, a2 = 0.09157621350977074346;
    b.orbit(0.2233815896780114657, {a1, a1, 1 - 2 * a1});
    b.orbit(0.10995174365532186764, {a2, a2, 1 - 2 * a2});
    return b.finish(4);
  }
  if (degree <= 8) {
    const double a1 = 0.45929258829272315603, a2 = 0.17056930775176020662, a3 = 0.050547228317030975458;
    const double p = 0.26311282963463811342, q = 0.0083947774099576053372;
    b.orbit(0.14431560767778716825, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    b.orbit(0.095091634267284624794, {a1, a1, 1 - 2 * a1});
    b.orbit(0.10321737053471825028, {a2, a2, 1 - 2 * a2});
    b.orbit(0.032458497623198080311, {a3, a3, 1 - 2 * a3});
    b.orbit(0.027230314174434994265, {p, q, 1 - p - q});
    return b.finish(8);
  }
  return collapsed_triangle(degree);
}

TetraRule tetra_rule(int degree) {
  if (degree < 0) throw QuadratureError("negative quadrature degree");
  Builder<4> b;
  if (degree <= 1) {
    b.orbit(1.0, {0.25, 0.25, 0.25, 0.25});
    return b.finish(1);
  }
  if (degree == 2) {
    const double a = 0.13819660112501051518;
    b.orbit(0.25, {a, a, a, 1 - 3 * a});
    return b.finish(2);
  }
  if (degree <= 6) {
    const double a1 = 0.21460287125915202929, a2 = 0.040673958534611353116, a3 = 0.32233789014227551034;
    const double p = 0.063661001875017525299, q = 0.26967233145831580803;
    b.orbit(0.0399227502581674921, {a1, a1, a1, 1 - 3 * a1});
    b.orbit(0.010077211055320642948, {a2, a2, a2, 1 - 3 * a2});
    b.orbit(0.055357181543654722095, {a3, a3, a3, 1 - 3 * a3});
    b.orbit(0.048214285714285714286, {p, p, q, 1 - 2 * p - q});
    return b.finish(6);
  }
  return collapsed_tetra(degree);
}

}  // namespace soltrunc
