#include "soltrunc/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "soltrunc/quadrature.hpp"

namespace soltrunc {

template <>
BallRule<3> ball_rule<3>(int radial, int polar, int azimuthal) {
  if (radial < 1 || polar < 1 || azimuthal < 1) throw QuadratureError("ball rule orders must be positive");
  const auto gr = gauss_legendre<double>(radial);
  const auto gt = gauss_legendre<double>(polar);
  const double pi = 3.14159265358979323846;
  BallRule<3> rule;
  for (int i = 0; i < radial; ++i) {
    const double r = gr.nodes[i];
    const double wr = 3 * r * r * gr.weights[i];
    for (int half = 0; half < 2; ++half)
      for (int j = 0; j < polar; ++j) {
        const double t = half == 0 ? -gt.nodes[j] : gt.nodes[j];
        const double wt = 0.5 * gt.weights[j];
        const double st = std::sqrt(std::max(0.0, 1 - t * t));
        for (int k = 0; k < azimuthal; ++k) {
          const double phi = 2 * pi * (k + 0.5) / azimuthal;
          rule.nodes.emplace_back(r * t, r * st * std::cos(phi), r * st * std::sin(phi));
          rule.weights.push_back(wr * wt / azimuthal);
        }
      }
  }
  return rule;
}

template <>
BallRule<2> ball_rule<2>(int radial, int, int azimuthal) {
  if (radial < 1 || azimuthal < 1) throw QuadratureError("ball rule orders must be positive");
  const auto gr = gauss_legendre<double>(radial);
  const double pi = 3.14159265358979323846;
  BallRule<2> rule;
  for (int i = 0; i < radial; ++i) {
    const double r = gr.nodes[i];
    for (int k = 0; k < azimuthal; ++k) {
      const double phi = 2 * pi * (k + 0.5) / azimuthal;
      rule.nodes.emplace_back(r * std::cos(phi), r * std::sin(phi));
      rule.weights.push_back(2 * r * gr.weights[i] / azimuthal);
    }
  }
  return rule;
}

std::vector<double> radius_ladder(double r_min, double ratio, double r_max) {
  if (!(r_min > 0) || !(ratio > 1)) throw ConfigError("radius ladder needs r_min > 0 and ratio > 1");
  std::vector<double> radii;
  double r = r_min;
  for (;;) {
    radii.push_back(r);
    if (r >= r_max) break;
    r *= ratio;
  }
  return radii;
}

template <int Dim>
std::pair<double, double> MaximalEvaluator<Dim>::evaluate(const Vec<Dim>& x) const {
  Vec<Dim> v;
  Mat<Dim> J;
  u_.evaluate(x, &v, &J);
  double mv = v.norm(), mj = J.norm();
  for (double r : radii_) {
    double av = 0, aj = 0;
    for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
      u_.evaluate(x + r * rule_.nodes[q], &v, &J);
      av += rule_.weights[q] * v.norm();
      aj += rule_.weights[q] * J.norm();
    }
    mv = std::max(mv, av);
    mj = std::max(mj, aj);
  }
  return {mv, mj};
}

template <int Dim>
std::int64_t GoodSet<Dim>::bad_count() const {
  return std::count(bad.begin(), bad.end(), std::uint8_t{1});
}

template <int Dim>
Box<Dim> GoodSet<Dim>::voxel(std::int64_t n) const {
  return Box<Dim>::centered(grid.node(n), grid.spacing);
}

template <int Dim>
Box<Dim> GoodSet<Dim>::block() const {
  const Box<Dim> b = grid.bounds();
  return Box<Dim>(b.lo.array() - grid.spacing / 2, b.hi.array() + grid.spacing / 2);
}

template <int Dim>
bool GoodSet<Dim>::indicator(const Vec<Dim>& x) const {
  std::array<int, Dim> first{}, count{};
  for (int a = 0; a < Dim; ++a) {
    const double s = (x(a) - grid.origin(a)) / grid.spacing + 0.5;
    if (!(s > 0) || !(s < grid.extents[a])) return true;
    const double f = std::floor(s);
    first[a] = static_cast<int>(f);
    count[a] = 1;
    if (s == f) {
      first[a] -= 1;
      count[a] = 2;
    }
  }
  int combos = 1;
  for (int a = 0; a < Dim; ++a) combos *= count[a];
  for (int c = 0; c < combos; ++c) {
    std::array<int, Dim> k{};
    int rest = c;
    for (int a = 0; a < Dim; ++a) {
      k[a] = first[a] + rest % count[a];
      rest /= count[a];
    }
    if (grid.valid(k) && !bad[static_cast<std::size_t>(grid.flat(k))]) return true;
  }
  return false;
}

template <int Dim>
double GoodSet<Dim>::distance_lower_bound(const Vec<Dim>& x) const {
  if (!block().contains_open(x)) return 0.0;
  std::array<int, Dim> k{};
  for (int a = 0; a < Dim; ++a) {
    int i = static_cast<int>(std::lround((x(a) - grid.origin(a)) / grid.spacing));
    k[a] = std::clamp(i, 0, grid.extents[a] - 1);
  }
  const auto n = grid.flat(k);
  return std::max(0.0, distance[static_cast<std::size_t>(n)] - (x - grid.node(k)).norm());
}

template <int Dim>
void GoodSet<Dim>::compute_distances() {
  const auto total = grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d2(static_cast<std::size_t>(total));
  for (std::int64_t n = 0; n < total; ++n) d2[static_cast<std::size_t>(n)] = bad[static_cast<std::size_t>(n)] ? inf : 0.0;
  auto f = [](int delta) {
    const double t = std::max(0.0, std::abs(delta) - 0.5);
    return t * t;
  };
  // Separable exact pass per axis: distances to voxel boxes split into
  // independent per-axis terms.
  for (int axis = 0; axis < Dim; ++axis) {
    const int len = grid.extents[axis];
    std::int64_t stride = 1;
    for (int a = Dim - 1; a > axis; --a) stride *= grid.extents[a];
    std::vector<double> line(len), out(len);
    for (std::int64_t n = 0; n < total; ++n) {
      if (grid.unflat(n)[axis] != 0) continue;
      for (int i = 0; i < len; ++i) line[i] = d2[static_cast<std::size_t>(n + i * stride)];
      for (int i = 0; i < len; ++i) {
        double best = inf;
        for (int g = 0; g < len; ++g)
          if (line[g] < inf) best = std::min(best, line[g] + f(i - g));
        out[i] = best;
      }
      for (int i = 0; i < len; ++i) d2[static_cast<std::size_t>(n + i * stride)] = out[i];
    }
  }
  distance.assign(static_cast<std::size_t>(total), 0.0);
  for (std::int64_t n = 0; n < total; ++n) {
    const auto k = grid.unflat(n);
    double ext = inf;
    for (int a = 0; a < Dim; ++a) ext = std::min({ext, k[a] + 0.5, grid.extents[a] - k[a] - 0.5});
    const double d = std::min(std::sqrt(d2[static_cast<std::size_t>(n)]), ext);
    distance[static_cast<std::size_t>(n)] = bad[static_cast<std::size_t>(n)] ? d * grid.spacing : 0.0;
  }
}

template <int Dim>
GoodSet<Dim> GoodSet<Dim>::from_mask(const Grid<Dim>& grid, std::vector<std::uint8_t> bad, double lambda) {
  if (static_cast<std::int64_t>(bad.size()) != grid.size()) throw ConfigError("mask size does not match grid");
  GoodSet g;
  g.grid = grid;
  g.lambda = lambda;
  g.bad = std::move(bad);
  g.compute_distances();
  return g;
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw Error("truncated mask file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

template <int Dim>
void GoodSet<Dim>::write_mask(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  for (int e : grid.extents) put<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  for (int a = 0; a < Dim; ++a) put<double>(os, grid.origin(a));
  put<double>(os, grid.spacing);
  for (auto b : bad) put<std::uint8_t>(os, b ? 0 : 1);
}

template <int Dim>
GoodSet<Dim> GoodSet<Dim>::read_mask(const std::string& path, double lambda) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  Grid<Dim> grid;
  for (int a = 0; a < Dim; ++a) grid.extents[a] = static_cast<int>(get<std::uint32_t>(is));
  for (int a = 0; a < Dim; ++a) grid.origin(a) = get<double>(is);
  grid.spacing = get<double>(is);
  std::vector<std::uint8_t> bad(static_cast<std::size_t>(grid.size()));
  for (auto& b : bad) b = get<std::uint8_t>(is) ? 0 : 1;
  return from_mask(grid, std::move(bad), lambda);
}

template <int Dim>
GoodSet<Dim> good_set(const AnalyticField<Dim>& u, double lambda, const Box<Dim>& box, int resolution,
                      const GoodSetOptions& options) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  if (resolution < 8) throw ConfigError("good-set resolution must be at least 8");
  GoodSet<Dim> g;
  g.grid = grid_over(box, resolution);
  g.lambda = lambda;
  const double h = g.grid.spacing;
  MaximalEvaluator<Dim> ev(u, radius_ladder(h, options.radius_ratio, box.diameter()),
                           ball_rule<Dim>(options.ball_radial, options.ball_polar, options.ball_azimuthal));
  const auto total = g.grid.size();
  g.maximal_value.resize(static_cast<std::size_t>(total));
  g.maximal_jacobian.resize(static_cast<std::size_t>(total));
  g.bad.resize(static_cast<std::size_t>(total));
  parallel_for(total, [&](std::int64_t n) {
    const auto m = ev.evaluate(g.grid.node(n));
    const auto i = static_cast<std::size_t>(n);
    g.maximal_value[i] = m.first;
    g.maximal_jacobian[i] = m.second;
    g.bad[i] = (m.first > lambda || m.second > lambda) ? 1 : 0;
  });
  g.compute_distances();
  return g;
}

template <int Dim>
BadSetBound bad_set_bound_check(const AnalyticField<Dim>& u, const GoodSet<Dim>& x, double p) {
  if (!(p >= 1)) throw ConfigError("exponent p must be at least 1");
  BadSetBound out;
  const double cell = x.grid.cell_volume();
  const auto total = x.grid.size();
  std::vector<double> contrib(static_cast<std::size_t>(total));
  parallel_for(total, [&](std::int64_t n) {
    Vec<Dim> v;
    Mat<Dim> J;
    u.evaluate(x.grid.node(n), &v, &J);
    const double a = v.norm(), b = J.norm();
    contrib[static_cast<std::size_t>(n)] =
        (a >= x.lambda / 2 || b >= x.lambda / 2) ? std::pow(a, p) + std::pow(b, p) : 0.0;
  });
  double integral = 0;
  for (double c : contrib) integral += c;
  out.lhs = static_cast<double>(x.bad_count()) * cell;
  out.rhs = integral * cell / std::pow(x.lambda, p);
  if (out.rhs > 0) {
    out.constant = out.lhs / out.rhs;
  } else {
    out.constant = out.lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    out.flagged = out.lhs > 0;
  }
  return out;
}

template class MaximalEvaluator<2>;
template class MaximalEvaluator<3>;
template struct GoodSet<2>;
template struct GoodSet<3>;
template GoodSet<2> good_set(const AnalyticField<2>&, double, const Box<2>&, int, const GoodSetOptions&);
template GoodSet<3> good_set(const AnalyticField<3>&, double, const Box<3>&, int, const GoodSetOptions&);
template BadSetBound bad_set_bound_check(const AnalyticField<2>&, const GoodSet<2>&, double);
template BadSetBound bad_set_bound_check(const AnalyticField<3>&, const GoodSet<3>&, double);

}  // namespace soltrunc
