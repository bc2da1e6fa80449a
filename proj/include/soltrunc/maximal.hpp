#ifndef SOLTRUNC_MAXIMAL_HPP
#define SOLTRUNC_MAXIMAL_HPP

#include "soltrunc/fields.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace soltrunc {

// Nodes in the unit ball with weights summing to one (averaging rule).
template <int Dim>
struct BallRule {
  std::vector<Vec<Dim>> nodes;
  std::vector<double> weights;
};

// Product rule in polar coordinates. In 3-D the polar angle is measured from
// the first axis and split at the equator, so |z_1| is integrated exactly.
// In 2-D `polar` is ignored.
template <int Dim>
BallRule<Dim> ball_rule(int radial = 3, int polar = 2, int azimuthal = 4);

// Geometric ladder r_min, r_min * ratio, ... up to and including the first radius >= r_max.
std::vector<double> radius_ladder(double r_min, double ratio, double r_max);

// sup over the ladder of ball averages of f around x, including the centre value.
template <int Dim, typename F>
double maximal_of(const F& f, const Vec<Dim>& x, const std::vector<double>& radii, const BallRule<Dim>& rule) {
  double best = f(x);
  for (double r : radii) {
    double avg = 0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) avg += rule.weights[q] * f(x + r * rule.nodes[q]);
    best = std::max(best, avg);
  }
  return best;
}

enum class MaximalTarget { value, jacobian };

// Discretised uncentered-by-ladder maximal function of |u| and of the
// Frobenius norm |Du|.
template <int Dim>
class MaximalEvaluator {
 public:
  MaximalEvaluator(AnalyticField<Dim> u, std::vector<double> radii, BallRule<Dim> rule = ball_rule<Dim>())
      : u_(std::move(u)), radii_(std::move(radii)), rule_(std::move(rule)) {}

  // Both maximal values from shared field evaluations.
  std::pair<double, double> evaluate(const Vec<Dim>& x) const;
  double operator()(const Vec<Dim>& x, MaximalTarget target) const {
    auto p = evaluate(x);
    return target == MaximalTarget::value ? p.first : p.second;
  }
  const std::vector<double>& radii() const { return radii_; }

 private:
  AnalyticField<Dim> u_;
  std::vector<double> radii_;
  BallRule<Dim> rule_;
};

template <int Dim>
double maximal_value(const MaximalEvaluator<Dim>& ev, const Vec<Dim>& x, MaximalTarget target) {
  return ev(x, target);
}

struct GoodSetOptions {
  double radius_ratio = 2.0;
  int ball_radial = 3;
  int ball_polar = 2;
  int ball_azimuthal = 4;
};

// Grid approximation of X_lambda = {M|u| <= lambda} intersect {M|Du| <= lambda}.
// Node k is good or bad; the continuum good set is the union of the closed
// good voxels (node +- h/2 per axis) together with everything outside the
// voxel block.
template <int Dim>
struct GoodSet {
  Grid<Dim> grid;
  double lambda = 0;
  std::vector<std::uint8_t> bad;
  std::vector<double> maximal_value;
  std::vector<double> maximal_jacobian;
  // Exact Euclidean distance from each node to the continuum good set.
  std::vector<double> distance;

  std::int64_t bad_count() const;
  bool is_bad_node(std::int64_t n) const { return bad[static_cast<std::size_t>(n)] != 0; }
  Box<Dim> voxel(std::int64_t n) const;
  // Closed box of the whole voxel block.
  Box<Dim> block() const;
  bool indicator(const Vec<Dim>& x) const;
  // 1-Lipschitz bound from the nearest node's exact distance.
  double distance_lower_bound(const Vec<Dim>& x) const;

  void compute_distances();
  static GoodSet from_mask(const Grid<Dim>& grid, std::vector<std::uint8_t> bad, double lambda);

  // Little-endian: Dim x u32 extents, Dim x f64 origin, f64 spacing, then one
  // byte per node (1 = good) in row-major order.
  void write_mask(const std::string& path) const;
  static GoodSet read_mask(const std::string& path, double lambda = 0);
};

template <int Dim>
GoodSet<Dim> good_set(const AnalyticField<Dim>& u, double lambda, const Box<Dim>& box, int resolution,
                      const GoodSetOptions& options = {});

struct BadSetBound {
  double lhs = 0;       // |bad set|
  double rhs = 0;       // lambda^-p * integral over {|u| >= lambda/2 or |Du| >= lambda/2} of |u|^p + |Du|^p
  double constant = 0;  // lhs / rhs
  bool flagged = false;  // lhs > 0 with rhs == 0
};

// Grid quadrature on the good-set nodes; the field should vanish near the box boundary.
template <int Dim>
BadSetBound bad_set_bound_check(const AnalyticField<Dim>& u, const GoodSet<Dim>& x, double p);

}  // namespace soltrunc

#endif
