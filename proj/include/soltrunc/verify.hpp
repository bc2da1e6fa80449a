#ifndef SOLTRUNC_VERIFY_HPP
#define SOLTRUNC_VERIFY_HPP

#include "soltrunc/config.hpp"
#include "soltrunc/truncation.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace soltrunc {

struct CheckRecord {
  std::string check_id;
  std::string paper_anchor;
  std::int64_t sample_count = 0;
  double max_residual = 0;
  double empirical_constant = 0;
  double tolerance = 0;
  bool pass = false;
  std::string note;
};

struct ReportEnvironment {
  std::uint64_t seed = 0;
  TruncationRules rules;
  std::vector<int> resolutions;
  double epsilon = 1.0 / 64;
  std::vector<double> lambdas;
  std::string mu_convention = "uniform probability on the concentric half cube, tensor Gauss-Legendre";
  nlohmann::json field;
};

class VerificationReport {
 public:
  ReportEnvironment environment;

  void add(CheckRecord r) { records_.push_back(std::move(r)); }
  void add(const std::vector<CheckRecord>& rs) { records_.insert(records_.end(), rs.begin(), rs.end()); }
  // Records ordered by check_id (stable for equal ids).
  std::vector<CheckRecord> records() const;
  const CheckRecord* find(const std::string& id) const;
  bool passed() const;

  nlohmann::json to_json() const;
  static VerificationReport from_json(const nlohmann::json& j);
  std::string json_text() const { return to_json().dump(2) + "\n"; }
  std::string csv_text() const;
  std::string summary_table() const;

 private:
  std::vector<CheckRecord> records_;
};

// Descriptive anchors naming the statement each check certifies.
namespace anchor {
inline constexpr const char* pointwise_maximal = "pointwise Lipschitz estimate through the maximal function of Du";
inline constexpr const char* bad_set_measure = "measure estimate for the bad set";
inline constexpr const char* sublinear = "sublinearity of the maximal function";
inline constexpr const char* classical = "classical Lipschitz truncation is Lipschitz and agrees with u on X";
inline constexpr const char* derivative_formula = "strong derivative and divergence of T u on the bad set";
inline constexpr const char* term_bounds = "S and R converge absolutely with W1,inf bounds and support in the bad set";
inline constexpr const char* corrector_size = "size estimates of the pair and triple correctors";
inline constexpr const char* simplex_stokes = "fundamental theorem, Stokes and Gauss-Green on simplices";
inline constexpr const char* corrector_stokes = "Stokes identities for the pair and triple correctors";
inline constexpr const char* segment_simplex = "segment and simplex integral estimates";
inline constexpr const char* main_solenoidal = "main theorem: T u is divergence free";
inline constexpr const char* main_lipschitz = "main theorem: W1,inf bound by C lambda";
inline constexpr const char* main_distance = "main theorem: W1,p distance to u";
inline constexpr const char* main_measure = "main theorem: T u = u off a set of small measure";
}  // namespace anchor

std::vector<std::string> required_anchors();
std::vector<std::string> missing_anchors(const VerificationReport& report);

// Uniform points of the union of cube cores at distance >= exclusion from X.
template <int Dim>
std::vector<Vec<Dim>> interior_bad_samples(const WhitneyCover<Dim>& cover, int count, std::uint64_t seed,
                                           double exclusion);
// Distance from X below which derivative samples are not taken: one grid
// cell, or the distance up to which the cover is guaranteed to reach.
template <int Dim>
double sample_exclusion(const WhitneyCover<Dim>& cover, double spacing) {
  return std::max(spacing, cover.guaranteed_cover_distance());
}

// Good set, cover and truncator for one (lambda, resolution) pair.
struct TruncationCase {
  double lambda = 0;
  int resolution = 0;
  std::shared_ptr<const GoodSet<3>> good;
  std::shared_ptr<const VoxelBadSet<3>> geometry;
  std::shared_ptr<const WhitneyCover<3>> cover;
  std::shared_ptr<const SolenoidalTruncator> truncator;
  double exclusion() const { return sample_exclusion(*cover, good->grid.spacing); }
};

TruncationCase build_case(const AnalyticField<3>& u, const Box<3>& box, double lambda, int resolution,
                          double epsilon, const TruncationRules& rules, bool with_truncator = true);

// Simplex identities on random configurations: exactness for a linear
// divergence-free field and decay under doubling of the rule degree for a
// trigonometric one.
std::vector<CheckRecord> run_stokes_suite(int configurations, std::uint64_t seed);

struct DivfreeOptions {
  int samples = 1000;
  std::uint64_t seed = 1;
  double tolerance = 1e-10;              // absolute, on |div T u|
  double assembly_tolerance = 1e-12;     // relative to the term scale
  double quadrature_tolerance = 1e-11;   // relative, for the closed-form assembly
};

std::vector<CheckRecord> run_divfree_suite(const SolenoidalTruncator& tr, double exclusion,
                                           const DivfreeOptions& options);

// Quadratic divergence-free field 0.1 (xz, -yz, 0) + 0.05 (0, y^2, -2yz),
// integrated exactly by the default rules.
AnalyticField<3> exactness_field();
// Solenoidality of exactness_field() truncated on the given cover.
std::vector<CheckRecord> divfree_exactness_records(std::shared_ptr<const WhitneyCover<3>> cover, double lambda,
                                                   double exclusion, const TruncationRules& rules, int samples,
                                                   std::uint64_t seed);

// Analytic Jacobian against central differences with step 1e-5 times the
// ramp width of the smallest cube at the point; error relative to
// max(|J|, lambda).
CheckRecord jacobian_fd_record(const SolenoidalTruncator& tr, double lambda, double exclusion, int samples,
                               std::uint64_t seed);

// Largest |div T u| at the samples.
double max_divergence(const SolenoidalTruncator& tr, const std::vector<Vec3>& samples);

// Residual at degree 4 against degree 8 on the given cover.
CheckRecord divfree_order_record(const AnalyticField<3>& u, std::shared_ptr<const WhitneyCover<3>> cover,
                                 double exclusion, int mu_order, int samples, std::uint64_t seed);

// log l against log of corrector sizes over the local mean |Du|. Sizes are
// sups over the overlap box; correctors are affine, so corners suffice. l is
// the geometric mean of the member sides.
struct CorrectorScaling {
  std::vector<double> pair_side, A, gradA;
  std::vector<double> triple_side, B, gradB;
  void append(const CorrectorScaling& o);
};

CorrectorScaling corrector_scaling(const SolenoidalTruncator& tr);
// Slope of the upper envelope (largest size per third-octave bin of l)
// against the exponents 2, 1, 3, 2 (+-0.25).
std::vector<CheckRecord> corrector_records(const CorrectorScaling& s, const std::string& prefix,
                                           const std::string& note);
// Scaling on a many-level cover: ball bad set of radius 2, ABC flow.
std::vector<CheckRecord> ball_scaling_records(double epsilon, const TruncationRules& rules);

// Per-case quantities of the bounds suite.
struct BoundsMeasurement {
  double lambda = 0;
  int resolution = 0;
  std::size_t cubes = 0;
  std::int64_t samples = 0;
  std::int64_t good_samples = 0;
  double w1inf = 0;  // sup (|T u| + |D T u|) / lambda
  double t0 = 0, s = 0, r = 0;
  double identity = 0;  // max |T u - u| on X
  std::int64_t support = 0;
  double wp_lhs = 0, wp_rhs = 0;
  double measure_lhs = 0, measure_rhs = 0;
  double uncovered = 0;  // fraction of bad quadrature points outside every enlarged cube
  double absolute_sum = 0;
  CorrectorScaling scaling;
};

BoundsMeasurement measure_bounds(const TruncationCase& c, const AnalyticField<3>& u, double p, int samples,
                                 std::uint64_t seed);
std::vector<CheckRecord> bounds_records(const std::vector<BoundsMeasurement>& m);

// Scalar integrand with its integral over the ball of radius 10 about 0.
struct HelperIntegrand {
  std::string name;
  std::function<double(const Vec3&)> f;
  double ball_integral = 0;
};

std::vector<HelperIntegrand> standard_helper_integrands();

struct HelperEstimate {
  double segment = 0, segment_se = 0;
  double simplex = 0, simplex_se = 0;
  std::int64_t samples = 0;
};

struct CubeConfiguration {
  Box<3> q1, q2, q3;
};

std::vector<CubeConfiguration> random_cube_configurations(int count, std::uint64_t seed);
// Averages over x_k in Q_k of the segment integral of v on [x1, x2] and of the
// surface integral on [x1, x2, x3], by stratified Monte Carlo.
HelperEstimate helper_estimate(const HelperIntegrand& v, const CubeConfiguration& q, int samples, std::uint64_t seed);
// Mean distance of uniform points of two boxes by tensor Gauss-Legendre.
double mean_distance(const Box<3>& a, const Box<3>& b, int points = 8);

std::vector<CheckRecord> run_helper_lemma_suite(const std::vector<HelperIntegrand>& integrands, int configurations,
                                                int samples, std::uint64_t seed);

struct ClassicalMeasurement {
  double lambda = 0;
  int resolution = 0;
  std::int64_t samples = 0;
  double lipschitz = 0;  // sup (|T u| + |D T u|) / lambda
  double identity = 0;
  double wp_ratio = 0;
  double measure_constant = 0;
};

ClassicalMeasurement measure_classical(const TruncationCase& c, const AnalyticField<3>& u, double p, int samples,
                                       std::uint64_t seed);
std::vector<CheckRecord> classical_records(const std::vector<ClassicalMeasurement>& m);
// |u(x) - u(y)| / (|x - y| (M|Du|(x) + M|Du|(y))) at random pairs, coarse and refined maximal functions.
std::vector<CheckRecord> maximal_records(const AnalyticField<3>& u, const Box<3>& box, int pairs, std::uint64_t seed);

// Scalar curl of the 2-D curl-free truncation at bad-set samples, segment degree 16 and 32.
std::vector<CheckRecord> run_curlfree_suite(const AnalyticField<2>& v, double lambda, const Box<2>& box,
                                            int resolution, double epsilon, int mu_order, int samples,
                                            std::uint64_t seed);

// Runs the suites selected in the config.
VerificationReport verify_experiment(const ExperimentConfig& config);

}  // namespace soltrunc

#endif
