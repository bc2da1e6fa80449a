#ifndef SOLTRUNC_WHITNEY_HPP
#define SOLTRUNC_WHITNEY_HPP

#include "soltrunc/maximal.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace soltrunc {

// Cube of the dyadic lattice below a root cube: side = root_side * 2^-level,
// lower corner = root_corner + index * side.
template <int Dim>
struct DyadicCube {
  int level = 0;
  std::array<std::int64_t, Dim> index{};
  Vec<Dim> corner = Vec<Dim>::Zero();
  double side = 1.0;

  Box<Dim> box() const { return Box<Dim>(corner, corner.array() + side); }
  // Exact box in root-normalised coordinates (root = unit cube), concentric
  // scaling by factor; dyadic so relations between cubes are exact.
  Box<Dim> unit_box(double factor = 1.0) const {
    const double s = std::ldexp(1.0, -level);
    Vec<Dim> c;
    for (int a = 0; a < Dim; ++a) c(a) = (static_cast<double>(index[a]) + 0.5) * s;
    return Box<Dim>::centered(c, s * factor);
  }
  Vec<Dim> center() const { return corner.array() + side / 2; }
  // Concentric cube scaled by factor.
  Box<Dim> scaled(double factor) const { return Box<Dim>::centered(center(), side * factor); }
  bool operator<(const DyadicCube& o) const { return level != o.level ? level < o.level : index < o.index; }
};

// Open bad set described through its complement X.
template <int Dim>
class BadSetGeometry {
 public:
  virtual ~BadSetGeometry() = default;
  // Dyadic root: a cube containing the whole bad set.
  virtual Box<Dim> root() const = 0;
  virtual double distance(const Vec<Dim>& p) const = 0;
  virtual double distance(const Box<Dim>& q) const = 0;
  // Does the interior of q meet the bad set?
  virtual bool meets(const Box<Dim>& q) const = 0;
  virtual bool is_bad(const Vec<Dim>& p) const { return distance(p) > 0; }
  // A point of X closest to q.
  virtual Vec<Dim> nearest_good_point(const Box<Dim>& q) const = 0;
  // Suggested smallest cube side.
  virtual double default_min_side() const = 0;
};

// X = complement of the open ball B(c, r).
template <int Dim>
class BallBadSet final : public BadSetGeometry<Dim> {
 public:
  BallBadSet(const Vec<Dim>& c, double r) : c_(c), r_(r) {}
  Box<Dim> root() const override { return Box<Dim>::centered(c_, 2 * r_); }
  double distance(const Vec<Dim>& p) const override { return std::max(0.0, r_ - (p - c_).norm()); }
  double distance(const Box<Dim>& q) const override { return std::max(0.0, r_ - q.far_distance(c_)); }
  bool meets(const Box<Dim>& q) const override { return q.distance(c_) < r_; }
  Vec<Dim> nearest_good_point(const Box<Dim>& q) const override;
  double default_min_side() const override { return r_ / 16; }

 private:
  Vec<Dim> c_;
  double r_;
};

// X = {x_0 <= offset} together with the complement of the open window.
template <int Dim>
class HalfSpaceBadSet final : public BadSetGeometry<Dim> {
 public:
  HalfSpaceBadSet(double offset, const Box<Dim>& window) : offset_(offset), window_(window) {}
  Box<Dim> root() const override;
  double distance(const Vec<Dim>& p) const override { return distance(Box<Dim>(p, p)); }
  double distance(const Box<Dim>& q) const override;
  bool meets(const Box<Dim>& q) const override;
  Vec<Dim> nearest_good_point(const Box<Dim>& q) const override;
  double default_min_side() const override { return window_.extent().maxCoeff() / 128; }

 private:
  double offset_;
  Box<Dim> window_;
};

// Bad set of a grid good set: X is the union of closed good voxels and the
// exterior of the voxel block. Box distances are exact.
template <int Dim>
class VoxelBadSet final : public BadSetGeometry<Dim> {
 public:
  // min_side defaults to spacing / 2.
  explicit VoxelBadSet(std::shared_ptr<const GoodSet<Dim>> good, double min_side = 0);
  Box<Dim> root() const override;
  double distance(const Vec<Dim>& p) const override { return distance(Box<Dim>(p, p)); }
  double distance(const Box<Dim>& q) const override;
  bool meets(const Box<Dim>& q) const override;
  bool is_bad(const Vec<Dim>& p) const override { return !good_->indicator(p); }
  // Nearest good grid node (exterior excluded); ties broken by node order.
  Vec<Dim> nearest_good_point(const Box<Dim>& q) const override;
  double default_min_side() const override { return min_side_; }
  const GoodSet<Dim>& good_set() const { return *good_; }

 private:
  std::shared_ptr<const GoodSet<Dim>> good_;
  double min_side_;
  std::vector<Box<Dim>> frontier_;          // good voxels with a bad neighbour
  std::vector<std::int64_t> frontier_nodes_;
  std::vector<std::int64_t> prefix_;        // summed bad counts
  // Frontier voxels grouped into coarse buckets for pruned distance queries.
  std::vector<Box<Dim>> bucket_box_;
  std::vector<std::vector<int>> bucket_members_;
  std::int64_t bad_in(const std::array<int, Dim>& lo, const std::array<int, Dim>& hi) const;
};

// Bad set given only through a point distance function and a bounding box.
// Box distances use the Lipschitz lower bound from the centre.
template <int Dim>
class OracleBadSet final : public BadSetGeometry<Dim> {
 public:
  OracleBadSet(std::function<double(const Vec<Dim>&)> dist, const Box<Dim>& bounds, double min_side)
      : d_(std::move(dist)), bounds_(bounds), min_side_(min_side) {}
  Box<Dim> root() const override;
  double distance(const Vec<Dim>& p) const override { return bounds_.contains_open(p) ? d_(p) : 0.0; }
  double distance(const Box<Dim>& q) const override;
  bool meets(const Box<Dim>& q) const override;
  Vec<Dim> nearest_good_point(const Box<Dim>& q) const override;
  double default_min_side() const override { return min_side_; }

 private:
  std::function<double(const Vec<Dim>&)> d_;
  Box<Dim> bounds_;
  double min_side_;
};

// Random-pair check that the point distance is 1-Lipschitz; throws ConstructionError.
template <int Dim>
void check_distance_oracle(const BadSetGeometry<Dim>& g, int pairs = 256, std::uint64_t seed = 7);

struct WhitneyOptions {
  double min_side = 0;  // 0: geometry default
  int max_cubes = 2000000;
};

// Dyadic cubes Q with dist(Q, X) >= side, maximal under inclusion; cubes that
// would need to be smaller than min_side are dropped and counted.
template <int Dim>
struct WhitneyDecomposition {
  std::vector<DyadicCube<Dim>> cubes;
  Box<Dim> root;
  double min_side = 0;
  std::int64_t dropped = 0;
};

template <int Dim>
WhitneyDecomposition<Dim> whitney_decompose(const BadSetGeometry<Dim>& bad, const WhitneyOptions& options = {});

// Dyadic tree over a set of cubes for neighbourhood queries.
template <int Dim>
class CubeIndex {
 public:
  CubeIndex() = default;
  CubeIndex(const std::vector<DyadicCube<Dim>>& cubes, const Box<Dim>& root);

  // Cubes whose unit box, grown by `grow` times its side on each face,
  // satisfies pred. pred must be monotone: true for a box implies true for
  // every superset.
  template <typename Pred>
  void visit(double grow, const Pred& pred, const std::function<void(int)>& emit) const;
  // Queries in unit coordinates.
  std::vector<int> touching(const Box<Dim>& unit, double grow = 0) const;
  std::vector<int> containing_open(const Vec<Dim>& unit, double grow) const;
  Vec<Dim> to_unit(const Vec<Dim>& y) const { return (y - root_.lo) / root_.extent().maxCoeff(); }
  // Number of pairs where one cube contains another.
  std::int64_t nested_pairs() const { return nested_; }

 private:
  struct Key {
    int level;
    std::array<std::int64_t, Dim> index;
    bool operator==(const Key& o) const { return level == o.level && index == o.index; }
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.level) * 0x9E3779B97F4A7C15ULL;
      for (auto i : k.index) h = (h ^ static_cast<std::uint64_t>(i)) * 0x100000001B3ULL + (h >> 29);
      return static_cast<std::size_t>(h);
    }
  };
  static Box<Dim> box_of(const Key& k);
  Box<Dim> root_;
  std::unordered_map<Key, int, Hash> leaves_;
  std::unordered_set<Key, Hash> internal_;
  std::int64_t nested_ = 0;
};

// Whitney cubes Q*_i with enlargements Q_i = (1 + epsilon) Q*_i.
template <int Dim>
struct WhitneyCover {
  std::vector<DyadicCube<Dim>> cubes;
  double epsilon = 1.0 / 64;
  std::vector<double> distances;        // dist(Q*_i, X)
  std::vector<Vec<Dim>> projections;    // z_i in X
  std::vector<std::vector<int>> neighbours;  // closures of Q*_j touching Q*_i, j != i
  std::shared_ptr<const BadSetGeometry<Dim>> geometry;
  CubeIndex<Dim> index;
  Box<Dim> root;
  double min_side = 0;
  std::int64_t dropped = 0;

  std::size_t size() const { return cubes.size(); }
  Box<Dim> core(std::size_t i) const { return cubes[i].box(); }
  Box<Dim> enlarged(std::size_t i) const { return cubes[i].scaled(1 + epsilon); }
  Box<Dim> unit_core(std::size_t i) const { return cubes[i].unit_box(); }
  Box<Dim> unit_enlarged(std::size_t i) const { return cubes[i].unit_box(1 + epsilon); }
  // Indices i with y in the open enlarged cube Q_i.
  std::vector<int> containing(const Vec<Dim>& y) const { return index.containing_open(index.to_unit(y), epsilon / 2); }
  // Pairs i < j whose enlarged cubes overlap.
  std::vector<std::pair<int, int>> overlapping_pairs() const;
  // Triples i < j < k whose enlarged cubes share an interior point.
  std::vector<std::array<int, 3>> overlapping_triples() const;
  // Points with dist(y, X) at least this are inside some Q*_i.
  double guaranteed_cover_distance() const { return (1 + std::sqrt(double(Dim))) * min_side; }
};

constexpr double max_epsilon = 1.0 / 32;

template <int Dim>
WhitneyCover<Dim> build_cover(std::shared_ptr<const BadSetGeometry<Dim>> bad, double epsilon,
                              const WhitneyOptions& options = {});

// Nearest good grid node for each cube; throws ConstructionError when the
// good set has no good node.
template <int Dim>
std::vector<Vec<Dim>> select_projection_points(const std::vector<DyadicCube<Dim>>& cubes, const GoodSet<Dim>& good);

struct CoverInvariantReport {
  std::int64_t cubes = 0;
  std::int64_t samples = 0;
  std::int64_t disjointness = 0;
  std::int64_t covering = 0;
  std::int64_t distance_comparability = 0;
  std::int64_t neighbour_comparability = 0;
  std::int64_t bounded_overlap = 0;
  std::int64_t projection = 0;
  std::int64_t enlarged = 0;
  int max_neighbours = 0;
  int max_multiplicity = 0;
  double min_distance_ratio = 0;  // min over cubes of dist / side
  double max_distance_ratio = 0;

  std::int64_t violations() const {
    return disjointness + covering + distance_comparability + neighbour_comparability + bounded_overlap + projection +
           enlarged;
  }
};

// Checks the Whitney properties on the cover and at the given bad-set sample
// points. projection_slack is added to the 4 dist bound for z_i.
template <int Dim>
CoverInvariantReport check_cover_invariants(const WhitneyCover<Dim>& cover, const std::vector<Vec<Dim>>& samples,
                                            double projection_slack = 0, int overlap_bound = 64);

void write_cover_csv(const WhitneyCover<3>& cover, const std::string& path);

// One-dimensional smooth step s(x) = f(x) / (f(x) + f(1 - x)), f(x) = exp(-1/x).
template <typename Scalar = double>
struct SmoothStep {
  static void evaluate(Scalar x, Scalar& v, Scalar& d1, Scalar& d2) {
    using std::exp;
    if (x <= 0) {
      v = d1 = d2 = 0;
      return;
    }
    if (x >= 1) {
      v = 1;
      d1 = d2 = 0;
      return;
    }
    const Scalar y = 1 - x;
    const Scalar a = exp(-1 / x), b = exp(-1 / y);
    const Scalar a1 = a / (x * x), b1 = -b / (y * y);
    const Scalar a2 = a * (1 / (x * x * x * x) - 2 / (x * x * x));
    const Scalar b2 = b * (1 / (y * y * y * y) - 2 / (y * y * y));
    const Scalar S = a + b, S1 = a1 + b1;
    const Scalar N = a1 * b - a * b1, N1 = a2 * b - a * b2;
    v = a / S;
    d1 = N / (S * S);
    d2 = (N1 * S - 2 * N * S1) / (S * S * S);
  }
};

// psi(t) = 1 on [0, 1], 0 outside (-epsilon/2, 1 + epsilon/2), smooth ramps between.
template <typename Scalar = double>
struct Bump1D {
  Scalar epsilon = Scalar(1) / 64;

  void evaluate(Scalar t, Scalar& v, Scalar& d1, Scalar& d2) const {
    const Scalar half = epsilon / 2;
    if (t >= 0 && t <= 1) {
      v = 1;
      d1 = d2 = 0;
    } else if (t < 0) {
      SmoothStep<Scalar>::evaluate((t + half) / half, v, d1, d2);
      d1 /= half;
      d2 /= half * half;
    } else {
      SmoothStep<Scalar>::evaluate((1 + half - t) / half, v, d1, d2);
      d1 = -d1 / half;
      d2 /= half * half;
    }
  }
};

// Tensor-product bump of a cube: prod_a psi((y_a - lo_a) / side).
template <int Dim, typename Scalar = double>
void cube_bump(const Bump1D<Scalar>& psi, const Point<Scalar, Dim>& corner, Scalar side, const Point<Scalar, Dim>& y,
               Scalar& v, Point<Scalar, Dim>& g, Tensor2<Scalar, Dim>& H) {
  Point<Scalar, Dim> p, p1, p2;
  for (int a = 0; a < Dim; ++a) {
    psi.evaluate((y(a) - corner(a)) / side, p(a), p1(a), p2(a));
    p1(a) /= side;
    p2(a) /= side * side;
  }
  auto prod_except = [&](int a, int b) {
    Scalar r = 1;
    for (int c = 0; c < Dim; ++c)
      if (c != a && c != b) r *= p(c);
    return r;
  };
  v = prod_except(-1, -1);
  for (int a = 0; a < Dim; ++a) {
    g(a) = p1(a) * prod_except(a, -1);
    H(a, a) = p2(a) * prod_except(a, -1);
    for (int b = a + 1; b < Dim; ++b) H(a, b) = H(b, a) = p1(a) * p1(b) * prod_except(a, b);
  }
}

// Partition functions phi_i with nonzero value at a point.
template <int Dim>
struct PartitionSample {
  std::vector<int> index;
  std::vector<double> value;
  std::vector<Vec<Dim>> gradient;
  std::vector<Mat<Dim>> hessian;

  std::size_t size() const { return index.size(); }
};

template <int Dim>
class PartitionOfUnity {
 public:
  explicit PartitionOfUnity(std::shared_ptr<const WhitneyCover<Dim>> cover)
      : cover_(std::move(cover)), psi_{cover_->epsilon} {}

  // Empty on X; throws CoverDefectError at a bad point no enlarged cube contains.
  PartitionSample<Dim> evaluate(const Vec<Dim>& y) const;
  const WhitneyCover<Dim>& cover() const { return *cover_; }
  const std::shared_ptr<const WhitneyCover<Dim>>& cover_ptr() const { return cover_; }

 private:
  std::shared_ptr<const WhitneyCover<Dim>> cover_;
  Bump1D<double> psi_;
};

template <int Dim>
PartitionSample<Dim> partition_eval(const PartitionOfUnity<Dim>& pu, const Vec<Dim>& y) {
  return pu.evaluate(y);
}

// Probability measure mu_i: uniform on the concentric half cube of Q*_i,
// discretised by a q-point Gauss tensor rule.
template <int Dim>
struct DiscreteMeasure {
  std::vector<Vec<Dim>> nodes;
  std::vector<double> weights;
};

template <int Dim>
DiscreteMeasure<Dim> mu_quadrature(const WhitneyCover<Dim>& cover, std::size_t i, int q);

}  // namespace soltrunc

#endif
