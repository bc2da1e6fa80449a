#ifndef SOLTRUNC_TRUNCATION_HPP
#define SOLTRUNC_TRUNCATION_HPP

#include "soltrunc/quadrature.hpp"
#include "soltrunc/whitney.hpp"

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace soltrunc {

// value(y) = offset + slope . (y - anchor); expanded around a nearby anchor
// so that evaluation does not cancel. constant_term() gives the global form
// value(y) = c + slope . y.
template <int Dim>
struct AffineCorrector {
  double offset = 0;
  Vec<Dim> slope = Vec<Dim>::Zero();
  Vec<Dim> anchor = Vec<Dim>::Zero();

  double operator()(const Vec<Dim>& y) const { return offset + slope.dot(y - anchor); }
  double constant_term() const { return offset - slope.dot(anchor); }
  AffineCorrector operator-() const { return {-offset, -slope, anchor}; }
};

// Pair corrector A(i,j)(y)_{ab} = M_{ab} + (y - anchor)_a g_b where
// g = int int avg_[x_i,x_j] Du (x_i - x_j) and
// M_{ab} = int int avg (anchor - z)_a (Du (x_i - x_j))_b.
template <int Dim>
struct PairCorrector {
  Mat<Dim> M = Mat<Dim>::Zero();
  Vec<Dim> g = Vec<Dim>::Zero();
  Vec<Dim> anchor = Vec<Dim>::Zero();
  double du_scale = 0;  // mean |Du| over the integration nodes

  Mat<Dim> operator()(const Vec<Dim>& y) const { return M + (y - anchor) * g.transpose(); }
  AffineCorrector<Dim> entry(int a, int b) const {
    Vec<Dim> s = Vec<Dim>::Zero();
    s(a) = g(b);
    return {M(a, b), s, anchor};
  }
  PairCorrector operator-() const { return {-M, -g, anchor, du_scale}; }
};

struct TruncationRules {
  int segment_degree = 8;
  int triangle_degree = 4;
  int tetra_degree = 6;
  int mu_order = 2;  // Gauss-Legendre points per axis of the half cube
};

// Classical truncation sum_i phi_i int u dmu_i on the bad set, u on X.
template <int Dim>
class ClassicalTruncator {
 public:
  ClassicalTruncator(AnalyticField<Dim> u, std::shared_ptr<const WhitneyCover<Dim>> cover, int mu_order = 2);
  Vec<Dim> value(const Vec<Dim>& y) const;
  Mat<Dim> jacobian(const Vec<Dim>& y) const;
  const Vec<Dim>& mean(std::size_t i) const { return means_[i]; }

 private:
  AnalyticField<Dim> u_;
  PartitionOfUnity<Dim> pu_;
  std::vector<Vec<Dim>> means_;
};

template <int Dim>
Vec<Dim> classic_truncation(const ClassicalTruncator<Dim>& t, const Vec<Dim>& y) {
  return t.value(y);
}

// Curl-free truncation v~ = D(T V) written in terms of v = DV:
// v~ = sum_i phi_i vbar_i + sum_{i != j} phi_j grad phi_i G(i,j)(y),
// G(i,j)(y) = int int avg_[x_i,x_j] (x_i - x_j)^T Dv(z) (y - z).
template <int Dim>
class CurlFreeTruncator {
 public:
  // Throws PreconditionError when v is not curl-free at probe points.
  CurlFreeTruncator(AnalyticField<Dim> v, std::shared_ptr<const WhitneyCover<Dim>> cover, TruncationRules rules = {});
  Vec<Dim> value(const Vec<Dim>& y) const;
  Mat<Dim> jacobian(const Vec<Dim>& y) const;
  // Antisymmetric part of the Jacobian; the scalar curl in 2-D.
  double curl(const Vec<Dim>& y) const;
  AffineCorrector<Dim> build_G(int i, int j) const;
  std::size_t pair_count() const { return pairs_.size(); }

 private:
  void evaluate(const Vec<Dim>& y, Vec<Dim>* v, Mat<Dim>* J) const;
  AffineCorrector<Dim> lookup(int i, int j) const;

  AnalyticField<Dim> v_;
  std::shared_ptr<const WhitneyCover<Dim>> cover_;
  PartitionOfUnity<Dim> pu_;
  TruncationRules rules_;
  SegmentRule seg_;
  std::vector<Vec<Dim>> means_;
  std::vector<DiscreteMeasure<Dim>> mu_;
  std::vector<AffineCorrector<Dim>> pairs_;
  std::unordered_map<std::uint64_t, int> pair_slot_;
};

template <int Dim>
Vec<Dim> curlfree_truncation(const CurlFreeTruncator<Dim>& t, const Vec<Dim>& y) {
  return t.value(y);
}

// Divergence of the three parts of T u, each from its own product rule, with
// cross-checks through the alternative closed forms.
struct DivergenceParts {
  double t0 = 0, s = 0, r = 0;
  // sum_{i,j} phi_j grad phi_i . g(i,j): the T0 divergence via pair slopes.
  double t0_pairs = 0;
  // -t0_pairs - sum_cyc sum_{i,j} d_a phi_j d_b phi_i (A_ab - A_ba)(i,j).
  double s_pairs = 0;
  // -t0_pairs + sum_cyc sum_{i,j,k} phi_k d_a phi_j d_b phi_i C_c(i,j,k).
  double s_triples = 0;
  // Largest magnitude among the summed terms; rounding scale for residuals.
  double term_scale = 0;

  double total() const { return t0 + s + r; }
};

struct TruncationSample {
  bool good = false;
  int cubes = 0;
  Vec3 value = Vec3::Zero();
  Mat3 jacobian = Mat3::Zero();
  Vec3 t0 = Vec3::Zero(), s = Vec3::Zero(), r = Vec3::Zero();
  Mat3 jt0 = Mat3::Zero(), js = Mat3::Zero(), jr = Mat3::Zero();
};

// T u = T0 u + S u + R u on the bad set and u on X.
class SolenoidalTruncator {
 public:
  SolenoidalTruncator(AnalyticField<3> u, std::shared_ptr<const WhitneyCover<3>> cover, TruncationRules rules = {});

  // Correctors straight from quadrature, in the given index order.
  PairCorrector<3> build_A(int i, int j) const;
  AffineCorrector<3> build_B(int i, int j, int k) const;
  // Table lookups, antisymmetric by construction.
  PairCorrector<3> A(int i, int j) const;
  AffineCorrector<3> B(int i, int j, int k) const;

  TruncationSample evaluate(const Vec3& y, bool with_jacobian = true) const;
  Vec3 value(const Vec3& y) const { return evaluate(y, false).value; }
  Mat3 jacobian(const Vec3& y) const { return evaluate(y, true).jacobian; }
  DivergenceParts divergence_parts(const Vec3& y) const;

  std::size_t pair_count() const { return pair_keys_.size(); }
  std::size_t triple_count() const { return triple_keys_.size(); }
  const std::vector<std::pair<int, int>>& pair_keys() const { return pair_keys_; }
  const std::vector<std::array<int, 3>>& triple_keys() const { return triple_keys_; }
  const PairCorrector<3>& pair_table(std::size_t n) const { return pairs_[n]; }
  const AffineCorrector<3>& triple_table(std::size_t n) const { return triples_[n]; }
  double triple_scale(std::size_t n) const { return triple_du_[n]; }
  const Vec3& mean(std::size_t i) const { return means_[i]; }
  const WhitneyCover<3>& cover() const { return *cover_; }
  const AnalyticField<3>& field() const { return u_; }
  const TruncationRules& rules() const { return rules_; }

  // One row per stored corrector: key indices and the constant and slope of
  // the affine map in global coordinates.
  void write_pair_csv(const std::string& path) const;
  void write_triple_csv(const std::string& path) const;

 private:
  std::pair<AffineCorrector<3>, double> triple_with_scale(int i, int j, int k) const;

  AnalyticField<3> u_;
  std::shared_ptr<const WhitneyCover<3>> cover_;
  PartitionOfUnity<3> pu_;
  TruncationRules rules_;
  SegmentRule seg_;
  TriangleRule tri_;
  std::vector<DiscreteMeasure<3>> mu_;
  std::vector<Vec3> means_;
  std::vector<std::pair<int, int>> pair_keys_;
  std::vector<PairCorrector<3>> pairs_;
  std::unordered_map<std::uint64_t, int> pair_slot_;
  std::vector<std::array<int, 3>> triple_keys_;
  std::vector<AffineCorrector<3>> triples_;
  std::vector<double> triple_du_;
  std::unordered_map<std::uint64_t, int> triple_slot_;
};

inline Vec3 truncate(const SolenoidalTruncator& t, const Vec3& y) { return t.value(y); }
inline Mat3 truncate_jacobian(const SolenoidalTruncator& t, const Vec3& y) { return t.jacobian(y); }
inline DivergenceParts divergence_parts(const SolenoidalTruncator& t, const Vec3& y) {
  return t.divergence_parts(y);
}

}  // namespace soltrunc

#endif
