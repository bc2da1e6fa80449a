#include "soltrunc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace soltrunc {

using nlohmann::json;

namespace {

constexpr double kFinite = std::numeric_limits<double>::max();
const char* kCurlFreeAnchor = "curl-free truncation in two dimensions";

json number_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

CheckRecord make_record(const std::string& id, const char* anchor, std::int64_t n, double residual,
                        double constant, double tolerance, std::string note = {}) {
  CheckRecord r;
  r.check_id = id;
  r.paper_anchor = anchor;
  r.sample_count = n;
  r.max_residual = residual;
  r.empirical_constant = constant;
  r.tolerance = tolerance;
  r.pass = std::isfinite(residual) && residual <= tolerance;
  r.note = std::move(note);
  return r;
}

CheckRecord inconclusive(const std::string& id, const char* anchor) {
  CheckRecord r = make_record(id, anchor, 0, 0, 0, 0, "inconclusive: no interior bad-set samples");
  r.pass = true;
  return r;
}

// max / min over the values; 1 when all vanish.
double spread(const std::vector<double>& v) {
  if (v.empty()) return 1;
  const double hi = *std::max_element(v.begin(), v.end());
  const double lo = *std::min_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  if (hi == 0) return 1;
  if (lo <= 0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

std::string list_note(const std::string& label, const std::vector<double>& v) {
  std::string s = label + " [";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + fmt(v[k]);
  return s + "]";
}

CheckRecord stability_record(const std::string& id, const char* anchor, const std::vector<double>& v,
                             std::int64_t n, const std::string& label) {
  const double hi = v.empty() ? 0 : *std::max_element(v.begin(), v.end());
  std::string note = list_note(label, v) + "; pass when max/min <= 4";
  if (std::count(v.begin(), v.end(), 0.0) > 0 && hi > 0) note += "; a zero entry means no sample met the support";
  return make_record(id, anchor, n, spread(v), hi, 4.0, note);
}

struct LineFit {
  double slope = 0, intercept = 0;
  std::int64_t n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.n = static_cast<std::int64_t>(x.size());
  if (x.size() < 2) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  return f;
}

template <int Dim>
std::array<Vec<Dim>, (1 << Dim)> corners(const Box<Dim>& b) {
  std::array<Vec<Dim>, (1 << Dim)> c;
  for (int m = 0; m < (1 << Dim); ++m)
    for (int a = 0; a < Dim; ++a) c[static_cast<std::size_t>(m)](a) = (m >> a) & 1 ? b.hi(a) : b.lo(a);
  return c;
}

// Good points next to the bad set: one random point in each good voxel
// that shares a face with a bad voxel.
std::vector<Vec3> good_frontier_points(const GoodSet<3>& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  std::vector<Vec3> out;
  const auto& grid = g.grid;
  for (std::int64_t n = 0; n < grid.size(); ++n) {
    if (g.is_bad_node(n)) continue;
    const auto k = grid.unflat(n);
    bool frontier = false;
    for (int a = 0; a < 3 && !frontier; ++a)
      for (int s = -1; s <= 1; s += 2) {
        auto q = k;
        q[static_cast<std::size_t>(a)] += s;
        if (grid.valid(q) && g.is_bad_node(grid.flat(q))) frontier = true;
      }
    if (!frontier) continue;
    Vec3 y = grid.node(n);
    for (int a = 0; a < 3; ++a) y(a) += U(rng) * grid.spacing;
    out.push_back(y);
  }
  return out;
}

// Midpoints of the 2^3 sub-voxels of every bad voxel, with weight h^3 / 8.
std::vector<Vec3> bad_quadrature_points(const GoodSet<3>& g) {
  std::vector<Vec3> out;
  const double q = g.grid.spacing / 4;
  for (std::int64_t n = 0; n < g.grid.size(); ++n) {
    if (!g.is_bad_node(n)) continue;
    const Vec3 c = g.grid.node(n);
    for (int m = 0; m < 8; ++m) out.push_back(c + Vec3(m & 1 ? q : -q, m & 2 ? q : -q, m & 4 ? q : -q));
  }
  return out;
}

}  // namespace

std::vector<CheckRecord> VerificationReport::records() const {
  auto r = records_;
  std::stable_sort(r.begin(), r.end(), [](const CheckRecord& a, const CheckRecord& b) { return a.check_id < b.check_id; });
  return r;
}

const CheckRecord* VerificationReport::find(const std::string& id) const {
  for (const auto& r : records_)
    if (r.check_id == id) return &r;
  return nullptr;
}

bool VerificationReport::passed() const {
  return std::all_of(records_.begin(), records_.end(), [](const CheckRecord& r) { return r.pass; });
}

json VerificationReport::to_json() const {
  json env;
  env["seed"] = environment.seed;
  env["rule_degrees"] = {{"segment", environment.rules.segment_degree},
                         {"triangle", environment.rules.triangle_degree},
                         {"tetra", environment.rules.tetra_degree},
                         {"mu", environment.rules.mu_order}};
  env["grid_resolutions"] = environment.resolutions;
  env["epsilon"] = environment.epsilon;
  env["lambda_ladder"] = environment.lambdas;
  env["mu_cube_convention"] = environment.mu_convention;
  env["field"] = environment.field;
  json recs = json::array();
  for (const auto& r : records()) {
    recs.push_back({{"check_id", r.check_id},
                    {"paper_anchor", r.paper_anchor},
                    {"sample_count", r.sample_count},
                    {"max_residual", number_json(r.max_residual)},
                    {"empirical_constant", number_json(r.empirical_constant)},
                    {"tolerance", number_json(r.tolerance)},
                    {"pass", r.pass},
                    {"note", r.note}});
  }
  return {{"environment", env}, {"records", recs}, {"pass", passed()}};
}

VerificationReport VerificationReport::from_json(const json& j) {
  VerificationReport rep;
  try {
    const auto& env = j.at("environment");
    rep.environment.seed = env.at("seed").get<std::uint64_t>();
    const auto& d = env.at("rule_degrees");
    rep.environment.rules.segment_degree = d.at("segment").get<int>();
    rep.environment.rules.triangle_degree = d.at("triangle").get<int>();
    rep.environment.rules.tetra_degree = d.at("tetra").get<int>();
    rep.environment.rules.mu_order = d.at("mu").get<int>();
    rep.environment.resolutions = env.at("grid_resolutions").get<std::vector<int>>();
    rep.environment.epsilon = env.at("epsilon").get<double>();
    rep.environment.lambdas = env.at("lambda_ladder").get<std::vector<double>>();
    rep.environment.mu_convention = env.at("mu_cube_convention").get<std::string>();
    rep.environment.field = env.at("field");
    for (const auto& r : j.at("records")) {
      CheckRecord c;
      c.check_id = r.at("check_id").get<std::string>();
      c.paper_anchor = r.at("paper_anchor").get<std::string>();
      c.sample_count = r.at("sample_count").get<std::int64_t>();
      c.max_residual = number_from(r.at("max_residual"));
      c.empirical_constant = number_from(r.at("empirical_constant"));
      c.tolerance = number_from(r.at("tolerance"));
      c.pass = r.at("pass").get<bool>();
      c.note = r.value("note", "");
      rep.add(c);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return rep;
}

std::string VerificationReport::csv_text() const {
  std::ostringstream os;
  os << "check_id,paper_anchor,sample_count,max_residual,empirical_constant,tolerance,pass,note\n";
  char buf[128];
  for (const auto& r : records()) {
    std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g,%.10g,%s", static_cast<long long>(r.sample_count),
                  r.max_residual, r.empirical_constant, r.tolerance, r.pass ? "true" : "false");
    os << csv_quote(r.check_id) << ',' << csv_quote(r.paper_anchor) << ',' << buf << ',' << csv_quote(r.note)
       << '\n';
  }
  return os.str();
}

std::string VerificationReport::summary_table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s  %-32s %8s %12s %12s %12s\n", "", "check", "samples", "residual", "tolerance",
                "constant");
  os << buf;
  for (const auto& r : records()) {
    std::snprintf(buf, sizeof buf, "%-4s  %-32s %8lld %12.4g %12.4g %12.4g\n", r.pass ? "PASS" : "FAIL",
                  r.check_id.c_str(), static_cast<long long>(r.sample_count), r.max_residual, r.tolerance,
                  r.empirical_constant);
    os << buf;
  }
  return os.str();
}

std::vector<std::string> required_anchors() {
  return {anchor::pointwise_maximal, anchor::bad_set_measure, anchor::sublinear,       anchor::classical,
          anchor::derivative_formula, anchor::term_bounds,    anchor::corrector_size,  anchor::corrector_stokes,
          anchor::segment_simplex,   anchor::main_solenoidal, anchor::main_lipschitz,  anchor::main_distance,
          anchor::main_measure};
}

std::vector<std::string> missing_anchors(const VerificationReport& report) {
  std::set<std::string> seen;
  for (const auto& r : report.records()) seen.insert(r.paper_anchor);
  std::vector<std::string> out;
  for (const auto& a : required_anchors())
    if (!seen.count(a)) out.push_back(a);
  return out;
}

template <int Dim>
std::vector<Vec<Dim>> interior_bad_samples(const WhitneyCover<Dim>& cover, int count, std::uint64_t seed,
                                           double exclusion) {
  std::vector<Vec<Dim>> out;
  if (cover.size() == 0 || count <= 0) return out;
  std::vector<double> cumulative(cover.size());
  double total = 0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    total += std::pow(cover.cubes[i].side, Dim);
    cumulative[i] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::int64_t attempts = 200LL * count;
  for (std::int64_t t = 0; t < attempts && static_cast<int>(out.size()) < count; ++t) {
    const double pick = U(rng) * total;
    const auto i = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                            cumulative.begin());
    const auto& q = cover.cubes[std::min(i, cover.size() - 1)];
    Vec<Dim> y;
    for (int a = 0; a < Dim; ++a) y(a) = q.corner(a) + U(rng) * q.side;
    if (!cover.geometry->is_bad(y) || cover.geometry->distance(y) < exclusion) continue;
    out.push_back(y);
  }
  return out;
}

template std::vector<Vec<2>> interior_bad_samples(const WhitneyCover<2>&, int, std::uint64_t, double);
template std::vector<Vec<3>> interior_bad_samples(const WhitneyCover<3>&, int, std::uint64_t, double);

TruncationCase build_case(const AnalyticField<3>& u, const Box<3>& box, double lambda, int resolution,
                          double epsilon, const TruncationRules& rules, bool with_truncator) {
  TruncationCase c;
  c.lambda = lambda;
  c.resolution = resolution;
  auto good = std::make_shared<GoodSet<3>>(good_set<3>(u, lambda, box, resolution));
  c.good = good;
  auto geo = std::make_shared<VoxelBadSet<3>>(good);
  c.geometry = geo;
  c.cover = std::make_shared<const WhitneyCover<3>>(build_cover<3>(geo, epsilon));
  if (with_truncator) c.truncator = std::make_shared<const SolenoidalTruncator>(u, c.cover, rules);
  return c;
}

std::vector<CheckRecord> run_stokes_suite(int configurations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto point = [&](double s) { return Vec3(s * U(rng), s * U(rng), s * U(rng)); };

  Mat3 M;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) M(a, b) = U(rng);
  M.diagonal().array() -= M.trace() / 3;
  const auto lin = affine_field<3>(point(1), M);
  const auto trig = abc_flow(1.0, 0.8, 0.6, 1.0);

  struct Rules {
    SegmentRule seg;
    TriangleRule tri;
    TetraRule tet;
  };
  const Rules exact{segment_rule(8), triangle_rule(8), tetra_rule(6)};
  const Rules low{segment_rule(4), triangle_rule(4), tetra_rule(3)};
  const Rules high{segment_rule(8), triangle_rule(8), tetra_rule(6)};

  const char* names[5] = {"fundamental", "stokes", "gauss_green", "pair_loop", "triple_cocycle"};
  const char* anchors[5] = {anchor::simplex_stokes, anchor::simplex_stokes, anchor::simplex_stokes,
                            anchor::corrector_stokes, anchor::corrector_stokes};
  auto residuals = [](const AnalyticField<3>& u, const Rules& r, const std::array<Vec3, 5>& x) {
    std::array<double, 5> out{};
    out[0] = fundamental_theorem_check<AnalyticField<3>, 3>(u, x[0], x[1], r.seg);
    out[1] = stokes_triangle_check(u, x[0], x[1], x[2], r.seg, r.tri);
    out[2] = gauss_green_check(u, x[0], x[1], x[2], x[3], r.tri, r.tet);
    out[3] = stokes_A_identity_check(u, x[0], x[1], x[2], x[4], r.seg, r.tri);
    out[4] = stokes_B_identity_check(u, x[0], x[1], x[2], x[3], x[4], r.tri, r.tet);
    return out;
  };

  std::array<double, 5> lin_max{}, low_max{}, high_max{};
  for (int c = 0; c < configurations; ++c) {
    std::array<Vec3, 5> x;
    for (auto& p : x) p = point(1);
    const auto a = residuals(lin, exact, x);
    std::array<Vec3, 5> xt;
    for (auto& p : xt) p = point(2);
    const auto lo = residuals(trig, low, xt);
    const auto hi = residuals(trig, high, xt);
    for (int k = 0; k < 5; ++k) {
      lin_max[static_cast<std::size_t>(k)] = std::max(lin_max[static_cast<std::size_t>(k)], a[static_cast<std::size_t>(k)]);
      low_max[static_cast<std::size_t>(k)] = std::max(low_max[static_cast<std::size_t>(k)], lo[static_cast<std::size_t>(k)]);
      high_max[static_cast<std::size_t>(k)] = std::max(high_max[static_cast<std::size_t>(k)], hi[static_cast<std::size_t>(k)]);
    }
  }
  std::vector<CheckRecord> out;
  for (std::size_t k = 0; k < 5; ++k) {
    out.push_back(make_record(std::string("stokes.linear.") + names[k], anchors[k], configurations, lin_max[k],
                              lin_max[k], 1e-11, "linear divergence-free field"));
    const double ratio = low_max[k] > 0 ? high_max[k] / low_max[k] : 0;
    out.push_back(make_record(std::string("stokes.refinement.") + names[k], anchors[k], configurations, ratio,
                              high_max[k], 0.1,
                              "ABC flow, residual ratio degree 8 / degree 4 (tetra 6 / 3); low " + fmt(low_max[k]) +
                                  " high " + fmt(high_max[k])));
  }
  return out;
}

double max_divergence(const SolenoidalTruncator& tr, const std::vector<Vec3>& samples) {
  std::vector<double> v(samples.size());
  parallel_for(static_cast<std::int64_t>(samples.size()), [&](std::int64_t k) {
    v[static_cast<std::size_t>(k)] = std::abs(tr.divergence_parts(samples[static_cast<std::size_t>(k)]).total());
  });
  return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

std::vector<CheckRecord> run_divfree_suite(const SolenoidalTruncator& tr, double exclusion,
                                           const DivfreeOptions& o) {
  const auto pts = interior_bad_samples(tr.cover(), o.samples, o.seed, exclusion);
  if (pts.empty())
    return {inconclusive("divfree.residual", anchor::main_solenoidal),
            inconclusive("divfree.assembly.pairs", anchor::derivative_formula),
            inconclusive("divfree.assembly.triples", anchor::derivative_formula),
            inconclusive("divfree.assembly.trace", anchor::derivative_formula)};
  struct Row {
    double div, rel, pairs, triples, trace;
  };
  std::vector<Row> rows(pts.size());
  parallel_for(static_cast<std::int64_t>(pts.size()), [&](std::int64_t k) {
    const Vec3& y = pts[static_cast<std::size_t>(k)];
    const auto d = tr.divergence_parts(y);
    const double scale = std::max(d.term_scale, std::numeric_limits<double>::min());
    const double tr_j = tr.jacobian(y).trace();
    rows[static_cast<std::size_t>(k)] = {std::abs(d.total()), std::abs(d.total()) / scale,
                                         std::abs(d.s - d.s_pairs) / scale,
                                         std::abs(d.s - d.s_triples) / scale,
                                         std::abs(tr_j - d.total()) / scale};
  });
  Row m{0, 0, 0, 0, 0};
  for (const auto& r : rows) {
    m.div = std::max(m.div, r.div);
    m.rel = std::max(m.rel, r.rel);
    m.pairs = std::max(m.pairs, r.pairs);
    m.triples = std::max(m.triples, r.triples);
    m.trace = std::max(m.trace, r.trace);
  }
  const auto n = static_cast<std::int64_t>(pts.size());
  return {make_record("divfree.residual", anchor::main_solenoidal, n, m.div, m.rel, o.tolerance,
                      "constant = max |div T u| / term scale"),
          make_record("divfree.assembly.pairs", anchor::derivative_formula, n, m.pairs, m.pairs,
                      o.assembly_tolerance, "div S from the pair table against its product rule, relative"),
          make_record("divfree.assembly.triples", anchor::derivative_formula, n, m.triples, m.triples,
                      o.quadrature_tolerance, "div S against its triple-corrector form, relative"),
          make_record("divfree.assembly.trace", anchor::derivative_formula, n, m.trace, m.trace,
                      o.assembly_tolerance, "trace of the Jacobian against the summed parts, relative")};
}

AnalyticField<3> exactness_field() {
  VectorPotential pot;
  pot.family = FieldFamily::polynomial;
  pot.terms.push_back({std::make_shared<Polynomial<3>>(std::vector<Monomial<3>>{{0.1, {1, 1, 1}}}), Vec3::UnitZ()});
  pot.terms.push_back({std::make_shared<Polynomial<3>>(std::vector<Monomial<3>>{{0.05, {0, 2, 1}}}), Vec3::UnitX()});
  return make_curl_field(pot);
}

std::vector<CheckRecord> divfree_exactness_records(std::shared_ptr<const WhitneyCover<3>> cover, double lambda,
                                                   double exclusion, const TruncationRules& rules, int samples,
                                                   std::uint64_t seed) {
  const SolenoidalTruncator tr(exactness_field(), std::move(cover), rules);
  DivfreeOptions o;
  o.samples = samples;
  o.seed = seed;
  o.tolerance = 1e-10 * lambda;
  auto recs = run_divfree_suite(tr, exclusion, o);
  for (auto& r : recs) {
    r.check_id.replace(0, std::string("divfree").size(), "divfree.exact");
    r.note += "; quadratic solenoidal field on the cover of the configured field";
  }
  return recs;
}

CheckRecord jacobian_fd_record(const SolenoidalTruncator& tr, double lambda, double exclusion, int samples,
                               std::uint64_t seed) {
  const auto& cover = tr.cover();
  const auto pts = interior_bad_samples(cover, samples, seed, exclusion);
  if (pts.empty()) return inconclusive("jacobian.central_difference", anchor::derivative_formula);
  std::vector<double> err(pts.size());
  parallel_for(static_cast<std::int64_t>(pts.size()), [&](std::int64_t k) {
    const Vec3& y = pts[static_cast<std::size_t>(k)];
    double side = std::numeric_limits<double>::max();
    for (int i : cover.containing(y)) side = std::min(side, cover.cubes[static_cast<std::size_t>(i)].side);
    const double h = 1e-5 * side * cover.epsilon / 2;
    const Mat3 J = tr.jacobian(y);
    Mat3 F;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e(a) = h;
      F.col(a) = (tr.value(y + e) - tr.value(y - e)) / (2 * h);
    }
    err[static_cast<std::size_t>(k)] = (J - F).norm() / std::max(J.norm(), lambda);
  });
  const double worst = *std::max_element(err.begin(), err.end());
  return make_record("jacobian.central_difference", anchor::derivative_formula, static_cast<std::int64_t>(pts.size()),
                     worst, worst, 1e-6, "|DTu - central difference| / max(|DTu|, lambda)");
}

CheckRecord divfree_order_record(const AnalyticField<3>& u, std::shared_ptr<const WhitneyCover<3>> cover,
                                 double exclusion, int mu_order, int samples, std::uint64_t seed) {
  const auto pts = interior_bad_samples(*cover, samples, seed, exclusion);
  if (pts.empty()) return inconclusive("divfree.order", anchor::main_solenoidal);
  TruncationRules lo, hi;
  lo.segment_degree = lo.triangle_degree = 4;
  hi.segment_degree = hi.triangle_degree = 8;
  lo.mu_order = hi.mu_order = mu_order;
  const double r4 = max_divergence(SolenoidalTruncator(u, cover, lo), pts);
  const double r8 = max_divergence(SolenoidalTruncator(u, cover, hi), pts);
  const double ratio = r4 > 0 ? r8 / r4 : 0;
  return make_record("divfree.order", anchor::main_solenoidal, static_cast<std::int64_t>(pts.size()), ratio, r8,
                     0.1, "max |div T u| at degree 8 / degree 4; degree 4: " + fmt(r4) + " degree 8: " + fmt(r8));
}

BoundsMeasurement measure_bounds(const TruncationCase& c, const AnalyticField<3>& u, double p, int samples,
                                 std::uint64_t seed) {
  BoundsMeasurement m;
  m.lambda = c.lambda;
  m.resolution = c.resolution;
  m.cubes = c.cover->size();
  const auto& tr = *c.truncator;
  const auto& cover = *c.cover;
  const double lam = c.lambda;

  const auto pts = interior_bad_samples(cover, samples, seed, c.exclusion());
  m.samples = static_cast<std::int64_t>(pts.size());
  std::vector<std::array<double, 4>> sup(pts.size());
  parallel_for(m.samples, [&](std::int64_t k) {
    const auto s = tr.evaluate(pts[static_cast<std::size_t>(k)], true);
    sup[static_cast<std::size_t>(k)] = {s.value.norm() + s.jacobian.norm(), s.t0.norm() + s.jt0.norm(),
                                        s.s.norm() + s.js.norm(), s.r.norm() + s.jr.norm()};
  });
  for (const auto& s : sup) {
    m.w1inf = std::max(m.w1inf, s[0]);
    m.t0 = std::max(m.t0, s[1]);
    m.s = std::max(m.s, s[2]);
    m.r = std::max(m.r, s[3]);
  }

  const auto good_pts = good_frontier_points(*c.good, seed + 1);
  m.good_samples = static_cast<std::int64_t>(good_pts.size());
  for (const auto& y : good_pts) {
    if (!cover.root.contains(y) || cover.geometry->is_bad(y)) continue;
    Vec3 v;
    Mat3 J;
    u.evaluate(y, &v, &J);
    const auto s = tr.evaluate(y, true);
    m.identity = std::max({m.identity, (s.value - v).norm(), (s.jacobian - J).norm()});
    m.w1inf = std::max(m.w1inf, v.norm() + J.norm());
    if (!cover.containing(y).empty()) ++m.support;
  }

  const auto quad = bad_quadrature_points(*c.good);
  const double w = c.good->grid.cell_volume() / 8;
  std::vector<double> contrib(quad.size(), 0.0);
  std::vector<std::uint8_t> missed(quad.size(), 0);
  parallel_for(static_cast<std::int64_t>(quad.size()), [&](std::int64_t k) {
    const Vec3& y = quad[static_cast<std::size_t>(k)];
    try {
      const auto s = tr.evaluate(y, true);
      Vec3 v;
      Mat3 J;
      u.evaluate(y, &v, &J);
      contrib[static_cast<std::size_t>(k)] = w * (std::pow((s.value - v).norm(), p) + std::pow((s.jacobian - J).norm(), p));
    } catch (const CoverDefectError&) {
      missed[static_cast<std::size_t>(k)] = 1;
    }
  });
  for (double x : contrib) m.wp_lhs += x;
  const auto n_missed = std::count(missed.begin(), missed.end(), 1);
  m.uncovered = quad.empty() ? 0 : static_cast<double>(n_missed) / static_cast<double>(quad.size());
  const auto bound = bad_set_bound_check(u, *c.good, p);
  m.measure_lhs = bound.lhs;
  m.measure_rhs = bound.rhs;
  m.wp_rhs = bound.rhs * std::pow(lam, p);

  const double g1 = 2.0 / cover.epsilon;
  for (std::size_t n = 0; n < tr.pair_count(); ++n) {
    const auto [i, j] = tr.pair_keys()[n];
    const auto& P = tr.pair_table(n);
    const Box<3> box =
        cover.enlarged(static_cast<std::size_t>(i)).intersection(cover.enlarged(static_cast<std::size_t>(j)));
    double amax = 0;
    for (const auto& y : corners<3>(box)) amax = std::max(amax, P(y).norm());
    const double l = std::sqrt(cover.cubes[static_cast<std::size_t>(i)].side * cover.cubes[static_cast<std::size_t>(j)].side);
    m.absolute_sum += box.extent().prod() * (amax * (g1 / l + 2 * g1 * g1 / (l * l)) + P.g.norm() * g1 / l);
  }
  m.scaling = corrector_scaling(tr);

  m.w1inf /= lam;
  m.t0 /= lam;
  m.s /= lam;
  m.r /= lam;
  return m;
}

std::vector<CheckRecord> bounds_records(const std::vector<BoundsMeasurement>& ms) {
  std::vector<double> w, t0, s, r, dist, meas;
  std::int64_t n = 0, ng = 0, support = 0;
  double identity = 0, abs_sum = 0, uncovered = 0;
  for (const auto& m : ms) {
    w.push_back(m.w1inf);
    t0.push_back(m.t0);
    s.push_back(m.s);
    r.push_back(m.r);
    dist.push_back(m.wp_rhs > 0 ? m.wp_lhs / m.wp_rhs : (m.wp_lhs > 0 ? std::numeric_limits<double>::infinity() : 0));
    meas.push_back(m.measure_rhs > 0 ? m.measure_lhs / m.measure_rhs
                                     : (m.measure_lhs > 0 ? std::numeric_limits<double>::infinity() : 0));
    n += m.samples;
    ng += m.good_samples;
    support += m.support;
    identity = std::max(identity, m.identity);
    abs_sum = std::max(abs_sum, m.absolute_sum);
    uncovered = std::max(uncovered, m.uncovered);
  }
  std::vector<CheckRecord> out;
  out.push_back(stability_record("bounds.lipschitz", anchor::main_lipschitz, w, n, "sup(|Tu|+|DTu|)/lambda per case"));
  out.push_back(stability_record("bounds.term.t0", anchor::term_bounds, t0, n, "sup(|T0u|+|DT0u|)/lambda"));
  out.push_back(stability_record("bounds.term.s", anchor::term_bounds, s, n, "sup(|Su|+|DSu|)/lambda"));
  out.push_back(stability_record("bounds.term.r", anchor::term_bounds, r, n, "sup(|Ru|+|DRu|)/lambda"));
  out.push_back(make_record("bounds.support", anchor::term_bounds, ng, static_cast<double>(support), 0, 0,
                            "good points adjacent to the bad set lying in an enlarged cube"));
  out.push_back(make_record("bounds.absolute_sum", anchor::term_bounds, static_cast<std::int64_t>(ms.size()), abs_sum,
                            abs_sum, kFinite, "sum over pairs of a W1,1 bound of phi_j dphi_i A; must be finite"));
  out.push_back(make_record("bounds.identity", anchor::main_measure, ng, identity, 0, 0,
                            "max |Tu - u| + |DTu - Du| on X next to the bad set"));
  auto d = stability_record("bounds.distance", anchor::main_distance, dist, n,
                            "||Tu-u||^p_W1p / integral over {|u|>=L or |Du|>=L}");
  d.note += "; max uncovered fraction " + fmt(uncovered);
  out.push_back(d);
  out.push_back(stability_record("bounds.measure", anchor::main_measure, meas, n, "|bad set| lambda^p / integral"));

  CorrectorScaling pooled;
  for (const auto& m : ms) pooled.append(m.scaling);
  const auto rec = corrector_records(pooled, "corrector", "spike ladder, all cases pooled");
  out.insert(out.end(), rec.begin(), rec.end());
  return out;
}

void CorrectorScaling::append(const CorrectorScaling& o) {
  auto cat = [](std::vector<double>& a, const std::vector<double>& b) { a.insert(a.end(), b.begin(), b.end()); };
  cat(pair_side, o.pair_side);
  cat(A, o.A);
  cat(gradA, o.gradA);
  cat(triple_side, o.triple_side);
  cat(B, o.B);
  cat(gradB, o.gradB);
}

CorrectorScaling corrector_scaling(const SolenoidalTruncator& tr) {
  const auto& cover = tr.cover();
  CorrectorScaling s;
  for (std::size_t n = 0; n < tr.pair_count(); ++n) {
    const auto [i, j] = tr.pair_keys()[n];
    const auto& P = tr.pair_table(n);
    const Box<3> box =
        cover.enlarged(static_cast<std::size_t>(i)).intersection(cover.enlarged(static_cast<std::size_t>(j)));
    double amax = 0;
    for (const auto& y : corners<3>(box)) amax = std::max(amax, P(y).norm());
    if (P.du_scale <= 0 || amax <= 0 || P.g.norm() <= 0) continue;
    const double l = std::sqrt(cover.cubes[static_cast<std::size_t>(i)].side * cover.cubes[static_cast<std::size_t>(j)].side);
    s.pair_side.push_back(std::log(l));
    s.A.push_back(std::log(amax / P.du_scale));
    s.gradA.push_back(std::log(P.g.norm() / P.du_scale));
  }
  for (std::size_t n = 0; n < tr.triple_count(); ++n) {
    const auto& key = tr.triple_keys()[n];
    const auto& B = tr.triple_table(n);
    const double du = tr.triple_scale(n);
    Box<3> box = cover.enlarged(static_cast<std::size_t>(key[0]));
    double lp = 1;
    for (int t : key) {
      box = box.intersection(cover.enlarged(static_cast<std::size_t>(t)));
      lp *= cover.cubes[static_cast<std::size_t>(t)].side;
    }
    double bmax = 0;
    for (const auto& y : corners<3>(box)) bmax = std::max(bmax, std::abs(B(y)));
    if (du <= 0 || bmax <= 0 || B.slope.norm() <= 0) continue;
    s.triple_side.push_back(std::log(std::cbrt(lp)));
    s.B.push_back(std::log(bmax / du));
    s.gradB.push_back(std::log(B.slope.norm() / du));
  }
  return s;
}

std::vector<CheckRecord> corrector_records(const CorrectorScaling& s, const std::string& prefix,
                                           const std::string& note) {
  struct Spec {
    const char* name;
    double expected;
    const std::vector<double>* x;
    const std::vector<double>* y;
  };
  const Spec specs[4] = {{"A", 2, &s.pair_side, &s.A},
                         {"gradA", 1, &s.pair_side, &s.gradA},
                         {"B", 3, &s.triple_side, &s.B},
                         {"gradB", 2, &s.triple_side, &s.gradB}};
  std::vector<CheckRecord> out;
  for (const auto& sp : specs) {
    const std::string id = prefix + "." + sp.name;
    const auto& x = *sp.x;
    const auto& y = *sp.y;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (x.size() < 2 || *hi - *lo < 1e-9) {
      out.push_back(inconclusive(id, anchor::corrector_size));
      out.back().note = "inconclusive: a single side length";
      continue;
    }
    // Upper envelope: largest size in each third-octave bin of l holding at
    // least 5 correctors.
    std::map<long, std::pair<double, int>> bins;
    for (std::size_t k = 0; k < x.size(); ++k) {
      auto& b = bins[std::lround(3 * x[k] / std::log(2.0))];
      b.first = b.second == 0 ? y[k] : std::max(b.first, y[k]);
      ++b.second;
    }
    std::vector<double> bx, by;
    for (const auto& [key, b] : bins)
      if (b.second >= 5) {
        bx.push_back(static_cast<double>(key) * std::log(2.0) / 3);
        by.push_back(b.first);
      }
    if (bx.size() < 2) {
      out.push_back(inconclusive(id, anchor::corrector_size));
      out.back().note = "inconclusive: fewer than two populated side bins";
      continue;
    }
    const auto fit = fit_line(bx, by);
    double c = 0;
    for (std::size_t k = 0; k < x.size(); ++k) c = std::max(c, std::exp(y[k] - sp.expected * x[k]));
    out.push_back(make_record(id, anchor::corrector_size, static_cast<std::int64_t>(x.size()),
                              std::abs(fit.slope - sp.expected), c, 0.25,
                              note + "; envelope slope " + fmt(fit.slope) + " over " + std::to_string(bx.size()) +
                                  " bins, all-point slope " + fmt(fit_line(x, y).slope) + ", expected " +
                                  fmt(sp.expected) + "; sides over a factor " + fmt(std::exp(*hi - *lo)) +
                                  "; constant = max size / (local mean |Du| l^expected)"));
  }
  return out;
}

std::vector<CheckRecord> ball_scaling_records(double epsilon, const TruncationRules& rules) {
  auto geo = std::make_shared<BallBadSet<3>>(Vec3::Zero(), 2.0);
  auto cover = std::make_shared<const WhitneyCover<3>>(build_cover<3>(geo, epsilon));
  const SolenoidalTruncator tr(abc_flow(1.0, 1.0, 1.0, 1.0), cover, rules);
  return corrector_records(corrector_scaling(tr), "corrector.ball", "ABC flow on a ball bad set of radius 2");
}

std::vector<HelperIntegrand> standard_helper_integrands() {
  const double pi = 3.14159265358979323846;
  std::vector<HelperIntegrand> out;
  out.push_back({"constant", [](const Vec3&) { return 1.0; }, 4.0 / 3.0 * pi * 1000.0});
  // Gaussian of unit width; the mass outside the radius-10 ball is below 1e-18.
  const Vec3 c(0.3, -0.2, 0.1);
  out.push_back({"gaussian", [c](const Vec3& z) { return std::exp(-0.5 * (z - c).squaredNorm()); },
                 std::pow(2 * pi, 1.5)});
  // (|z|^2 + delta^2)^(-3/4): radially integrated on [0, 10] with the
  // substitution r = delta sinh t, which makes the integrand smooth.
  const double delta = 0.05;
  const auto gl = gauss_legendre<double>(64);
  const double tmax = std::asinh(10.0 / delta);
  double radial = 0;
  for (int piece = 0; piece < 8; ++piece) {
    const double a = tmax * piece / 8, b = tmax * (piece + 1) / 8;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double t = a + (b - a) * gl.nodes[q];
      const double r = delta * std::sinh(t);
      const double dr = delta * std::cosh(t);
      radial += (b - a) * gl.weights[q] * r * r * std::pow(r * r + delta * delta, -0.75) * dr;
    }
  }
  out.push_back({"near_singular", [delta](const Vec3& z) { return std::pow(z.squaredNorm() + delta * delta, -0.75); },
                 4 * pi * radial});
  return out;
}

std::vector<CubeConfiguration> random_cube_configurations(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<CubeConfiguration> out;
  const Box<3> q1 = Box<3>::centered(Vec3::Zero(), 1.0);
  auto random_cube = [&]() {
    for (;;) {
      const double side = 0.25 * std::pow(16.0, U(rng));
      Vec3 c;
      for (int a = 0; a < 3; ++a) c(a) = -6 + 12 * U(rng);
      const Box<3> q = Box<3>::centered(c, side);
      if (q.far_distance(Vec3::Zero()) < 10) return q;
    }
  };
  for (int k = 0; k < count; ++k) out.push_back({q1, random_cube(), random_cube()});
  return out;
}

HelperEstimate helper_estimate(const HelperIntegrand& v, const CubeConfiguration& q, int samples,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto in_box = [&](const Box<3>& b, const Vec3& cell_lo, double cell) {
    Vec3 x;
    for (int a = 0; a < 3; ++a) x(a) = b.lo(a) + (cell_lo(a) + cell * U(rng)) * b.extent()(a);
    return x;
  };
  // 2^3 strata of Q1 crossed with 2^3 strata of Q2.
  constexpr int strata = 64;
  const int per = std::max(2, samples / strata);
  HelperEstimate e;
  double seg_var = 0, sim_var = 0;
  for (int s = 0; s < strata; ++s) {
    const Vec3 c1((s & 1) * 0.5, ((s >> 1) & 1) * 0.5, ((s >> 2) & 1) * 0.5);
    const Vec3 c2(((s >> 3) & 1) * 0.5, ((s >> 4) & 1) * 0.5, ((s >> 5) & 1) * 0.5);
    double seg_sum = 0, seg_sq = 0, sim_sum = 0, sim_sq = 0;
    for (int k = 0; k < per; ++k) {
      const Vec3 x1 = in_box(q.q1, c1, 0.5);
      const Vec3 x2 = in_box(q.q2, c2, 0.5);
      const Vec3 x3 = in_box(q.q3, Vec3::Zero(), 1.0);
      const double t = U(rng);
      const double seg = (x2 - x1).norm() * v.f(x1 + t * (x2 - x1));
      double a = U(rng), b = U(rng);
      if (a + b > 1) {
        a = 1 - a;
        b = 1 - b;
      }
      const double area = 0.5 * (x2 - x1).cross(x3 - x1).norm();
      const double sim = area * v.f(x1 + a * (x2 - x1) + b * (x3 - x1));
      seg_sum += seg;
      seg_sq += seg * seg;
      sim_sum += sim;
      sim_sq += sim * sim;
    }
    const double m1 = seg_sum / per, m2 = sim_sum / per;
    e.segment += m1 / strata;
    e.simplex += m2 / strata;
    seg_var += std::max(0.0, seg_sq / per - m1 * m1) * per / (per - 1) / per / (strata * strata);
    sim_var += std::max(0.0, sim_sq / per - m2 * m2) * per / (per - 1) / per / (strata * strata);
  }
  e.segment_se = std::sqrt(seg_var);
  e.simplex_se = std::sqrt(sim_var);
  e.samples = static_cast<std::int64_t>(per) * strata;
  return e;
}

double mean_distance(const Box<3>& a, const Box<3>& b, int points) {
  const auto gl = gauss_legendre<double>(points);
  const auto n = gl.nodes.size();
  double acc = 0;
  for (std::size_t i0 = 0; i0 < n; ++i0)
    for (std::size_t i1 = 0; i1 < n; ++i1)
      for (std::size_t i2 = 0; i2 < n; ++i2) {
        const Vec3 x = a.lo + Vec3(gl.nodes[i0], gl.nodes[i1], gl.nodes[i2]).cwiseProduct(a.extent());
        const double wx = gl.weights[i0] * gl.weights[i1] * gl.weights[i2];
        for (std::size_t j0 = 0; j0 < n; ++j0)
          for (std::size_t j1 = 0; j1 < n; ++j1)
            for (std::size_t j2 = 0; j2 < n; ++j2) {
              const Vec3 y = b.lo + Vec3(gl.nodes[j0], gl.nodes[j1], gl.nodes[j2]).cwiseProduct(b.extent());
              acc += wx * gl.weights[j0] * gl.weights[j1] * gl.weights[j2] * (x - y).norm();
            }
      }
  return acc;
}

std::vector<CheckRecord> run_helper_lemma_suite(const std::vector<HelperIntegrand>& integrands, int configurations,
                                                int samples, std::uint64_t seed) {
  std::vector<CheckRecord> out;
  const auto configs = random_cube_configurations(configurations, seed);

  // Closed-form oracle for v = 1 on a fixed pair of disjoint cubes.
  {
    const CubeConfiguration fixed{Box<3>::centered(Vec3::Zero(), 1.0), Box<3>(Vec3(1.5, 0, 0), Vec3(2.5, 1, 1)),
                                  Box<3>(Vec3(0, 2, 0), Vec3(0.5, 2.5, 0.5))};
    const HelperIntegrand one{"constant", [](const Vec3&) { return 1.0; }, 0};
    const auto e = helper_estimate(one, fixed, samples, seed + 17);
    const double exact = mean_distance(fixed.q1, fixed.q2);
    const double z = e.segment_se > 0 ? std::abs(e.segment - exact) / e.segment_se : 0;
    out.push_back(make_record("helper.constant_oracle", anchor::segment_simplex, e.samples, z, exact, 2.0,
                              "|MC - Gauss| / SE for the mean segment length; MC " + fmt(e.segment)));
  }

  for (const auto& v : integrands) {
    for (int kind = 0; kind < 2; ++kind) {
      const std::string id = std::string("helper.") + (kind == 0 ? "segment." : "simplex.") + v.name;
      double worst = 0, worst_se = 0, worst_rel = 0;
      std::size_t worst_k = 0;
      std::int64_t n = 0;
      bool noisy = false;
      std::vector<HelperEstimate> est(configs.size());
      std::vector<int> used(configs.size());
      parallel_for(static_cast<std::int64_t>(configs.size()), [&](std::int64_t k) {
        int s = samples;
        HelperEstimate e;
        // Escalate the sample size while the relative standard error exceeds 5%.
        for (int round = 0; round < 4; ++round, s *= 4) {
          e = helper_estimate(v, configs[static_cast<std::size_t>(k)], s, seed + 1000 * static_cast<std::uint64_t>(k));
          const double m = kind == 0 ? e.segment : e.simplex;
          const double se = kind == 0 ? e.segment_se : e.simplex_se;
          if (m <= 0 || se <= 0.05 * m) break;
        }
        est[static_cast<std::size_t>(k)] = e;
        used[static_cast<std::size_t>(k)] = s;
      });
      for (std::size_t k = 0; k < configs.size(); ++k) {
        const auto& e = est[k];
        const double m = kind == 0 ? e.segment : e.simplex;
        const double se = kind == 0 ? e.segment_se : e.simplex_se;
        n += e.samples;
        if (m > 0 && se > 0.05 * m) noisy = true;
        const double ratio = m / v.ball_integral;
        worst_rel = std::max(worst_rel, m > 0 ? se / m : 0.0);
        if (ratio > worst) {
          worst = ratio;
          worst_se = se / v.ball_integral;
          worst_k = k;
        }
      }
      // Replicate the worst configuration with an independent stream.
      const auto rep = helper_estimate(v, configs[worst_k], used[worst_k], seed + 7919 + worst_k);
      const double rep_ratio = (kind == 0 ? rep.segment : rep.simplex) / v.ball_integral;
      const double rep_se = (kind == 0 ? rep.segment_se : rep.simplex_se) / v.ball_integral;
      const double combined = std::sqrt(worst_se * worst_se + rep_se * rep_se);
      const double z = combined > 0 ? std::abs(worst - rep_ratio) / combined : 0;
      auto rec = make_record(id, anchor::segment_simplex, n, z, worst, 2.0,
                             "max lhs / ball integral over configurations; residual = replicate difference in "
                             "standard errors; max relative SE " +
                                 fmt(worst_rel));
      if (!std::isfinite(worst)) rec.pass = false;
      if (noisy) {
        rec.note += "; inconclusive: relative SE above 5% after escalation";
      }
      out.push_back(rec);
    }
  }
  return out;
}

ClassicalMeasurement measure_classical(const TruncationCase& c, const AnalyticField<3>& u, double p, int samples,
                                       std::uint64_t seed) {
  ClassicalMeasurement m;
  m.lambda = c.lambda;
  m.resolution = c.resolution;
  const ClassicalTruncator<3> T(u, c.cover, 2);
  const auto pts = interior_bad_samples(*c.cover, samples, seed, c.exclusion());
  m.samples = static_cast<std::int64_t>(pts.size());
  for (const auto& y : pts) m.lipschitz = std::max(m.lipschitz, T.value(y).norm() + T.jacobian(y).norm());
  for (const auto& y : good_frontier_points(*c.good, seed + 1)) {
    if (!c.cover->root.contains(y) || c.cover->geometry->is_bad(y)) continue;
    m.identity = std::max(m.identity, (T.value(y) - u.value(y)).norm());
    m.lipschitz = std::max(m.lipschitz, u.value(y).norm() + u.jacobian(y).norm());
  }
  double lhs = 0;
  const double w = c.good->grid.cell_volume() / 8;
  for (const auto& y : bad_quadrature_points(*c.good)) {
    try {
      lhs += w * (std::pow((T.value(y) - u.value(y)).norm(), p) + std::pow((T.jacobian(y) - u.jacobian(y)).norm(), p));
    } catch (const CoverDefectError&) {
    }
  }
  const auto bound = bad_set_bound_check(u, *c.good, p);
  const double rhs = bound.rhs * std::pow(c.lambda, p);
  m.wp_ratio = rhs > 0 ? lhs / rhs : (lhs > 0 ? std::numeric_limits<double>::infinity() : 0);
  m.measure_constant = bound.constant;
  m.lipschitz /= c.lambda;
  return m;
}

std::vector<CheckRecord> classical_records(const std::vector<ClassicalMeasurement>& ms) {
  std::vector<double> lip, wp, meas;
  std::int64_t n = 0;
  double identity = 0;
  for (const auto& m : ms) {
    lip.push_back(m.lipschitz);
    wp.push_back(m.wp_ratio);
    meas.push_back(m.measure_constant);
    n += m.samples;
    identity = std::max(identity, m.identity);
  }
  const double wp_max = wp.empty() ? 0 : *std::max_element(wp.begin(), wp.end());
  const double meas_max = meas.empty() ? 0 : *std::max_element(meas.begin(), meas.end());
  return {stability_record("classical.lipschitz", anchor::classical, lip, n, "sup(|T u|+|D T u|)/lambda"),
          make_record("classical.identity", anchor::classical, n, identity, 0, 0, "max |T u - u| on X"),
          make_record("classical.distance", anchor::classical, n, wp_max, wp_max, kFinite,
                      list_note("||u - T u||^p_W1p / rhs, must be finite", wp)),
          make_record("maximal.measure", anchor::bad_set_measure, n, meas_max, meas_max, kFinite,
                      list_note("|bad set| lambda^p / integral, must be finite", meas))};
}

std::vector<CheckRecord> maximal_records(const AnalyticField<3>& u, const Box<3>& box, int pairs,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto point = [&]() {
    Vec3 x;
    for (int a = 0; a < 3; ++a) x(a) = box.lo(a) + U(rng) * (box.hi(a) - box.lo(a));
    return x;
  };
  const double diam = box.diameter();
  const MaximalEvaluator<3> coarse(u, radius_ladder(diam / 128, 2.0, diam));
  const MaximalEvaluator<3> fine(u, radius_ladder(diam / 256, std::sqrt(2.0), diam), ball_rule<3>(5, 3, 8));
  std::vector<std::pair<Vec3, Vec3>> xy(static_cast<std::size_t>(pairs));
  for (auto& p : xy) p = {point(), point()};
  std::vector<std::array<double, 2>> ratio(xy.size());
  parallel_for(static_cast<std::int64_t>(xy.size()), [&](std::int64_t k) {
    const auto& [x, y] = xy[static_cast<std::size_t>(k)];
    const double num = (u.value(x) - u.value(y)).norm();
    const double d = (x - y).norm();
    const double c = d * (coarse(x, MaximalTarget::jacobian) + coarse(y, MaximalTarget::jacobian));
    const double f = d * (fine(x, MaximalTarget::jacobian) + fine(y, MaximalTarget::jacobian));
    ratio[static_cast<std::size_t>(k)] = {c > 0 ? num / c : 0, f > 0 ? num / f : 0};
  });
  double cc = 0, cf = 0;
  for (const auto& r : ratio) {
    cc = std::max(cc, r[0]);
    cf = std::max(cf, r[1]);
  }
  std::vector<CheckRecord> out;
  out.push_back(stability_record("maximal.pointwise", anchor::pointwise_maximal, {cc, cf}, pairs,
                                 "|u(x)-u(y)| / (|x-y| (M|Du|(x)+M|Du|(y))), coarse and refined maximal function"));

  // Sublinearity against a second field, with a shared discretisation.
  const auto w = 0.5 * abc_flow(1.0, 1.0, 1.0, 1.0);
  const auto sum = u + w;
  const auto radii = radius_ladder(diam / 64, 2.0, diam);
  const MaximalEvaluator<3> mu(u, radii), mw(w, radii), ms(sum, radii);
  double worst = 0;
  for (int k = 0; k < pairs; ++k) {
    const Vec3 x = point();
    const auto a = mu.evaluate(x), b = mw.evaluate(x), s = ms.evaluate(x);
    const double scale = 1 + a.first + b.first + a.second + b.second;
    worst = std::max({worst, (s.first - a.first - b.first) / scale, (s.second - a.second - b.second) / scale});
  }
  out.push_back(make_record("maximal.sublinear", anchor::sublinear, pairs, std::max(0.0, worst), 0, 1e-12,
                            "max (M(u+w) - Mu - Mw) relative, value and Jacobian"));
  return out;
}

std::vector<CheckRecord> run_curlfree_suite(const AnalyticField<2>& v, double lambda, const Box<2>& box,
                                            int resolution, double epsilon, int mu_order, int samples,
                                            std::uint64_t seed) {
  auto good = std::make_shared<GoodSet<2>>(good_set<2>(v, lambda, box, resolution));
  auto geo = std::make_shared<VoxelBadSet<2>>(good);
  auto cover = std::make_shared<const WhitneyCover<2>>(build_cover<2>(geo, epsilon));
  const auto pts = interior_bad_samples(*cover, samples, seed, sample_exclusion(*cover, good->grid.spacing));
  if (pts.empty()) return {inconclusive("curlfree.curl", kCurlFreeAnchor), inconclusive("curlfree.order", kCurlFreeAnchor)};
  TruncationRules lo, hi;
  // The ramps amplify segment quadrature error by 1/(epsilon l). On long
  // segments of large cubes degree 16 leaves up to 1e-6; 32 reaches roundoff.
  lo.segment_degree = 16;
  hi.segment_degree = 32;
  lo.mu_order = hi.mu_order = mu_order;
  const CurlFreeTruncator<2> tlo(v, cover, lo), thi(v, cover, hi);
  double clo = 0, chi = 0;
  for (const auto& y : pts) {
    clo = std::max(clo, std::abs(tlo.curl(y)));
    chi = std::max(chi, std::abs(thi.curl(y)));
  }
  const auto n = static_cast<std::int64_t>(pts.size());
  return {make_record("curlfree.curl", kCurlFreeAnchor, n, chi, chi / lambda, 1e-6 * lambda,
                      "max scalar curl at segment degree 32; tolerance 1e-6 lambda"),
          make_record("curlfree.order", kCurlFreeAnchor, n, clo > 0 ? chi / clo : 0, chi, 1.0,
                      "curl ratio degree 32 / degree 16; degree 16: " + fmt(clo))};
}

VerificationReport verify_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  VerificationReport rep;
  rep.environment.seed = cfg.seed;
  rep.environment.rules = cfg.rules;
  rep.environment.resolutions = cfg.resolutions;
  rep.environment.epsilon = cfg.epsilon;
  rep.environment.lambdas = cfg.lambdas;
  rep.environment.field = cfg.field;
  const std::set<std::string> suites(cfg.suites.begin(), cfg.suites.end());

  if (cfg.dim == 2) {
    const auto v = make_field2(cfg.field);
    const Box<2> box(cfg.box_lo.head<2>(), cfg.box_hi.head<2>());
    rep.add(run_curlfree_suite(v, cfg.lambda(), box, cfg.resolution(), cfg.epsilon, cfg.rules.mu_order, 100, cfg.seed));
    return rep;
  }

  const auto u = make_field3(cfg.field);
  if (suites.count("stokes")) rep.add(run_stokes_suite(100, cfg.seed));
  if (suites.count("helper"))
    rep.add(run_helper_lemma_suite(standard_helper_integrands(), cfg.mc_configs, cfg.mc_samples, cfg.seed + 3));

  const bool need_tr = suites.count("bounds") || suites.count("divfree");
  if (!need_tr && !suites.count("classical")) return rep;
  std::vector<TruncationCase> cases;
  for (int res : cfg.resolutions)
    for (double lam : cfg.lambdas) cases.push_back(build_case(u, cfg.box(), lam, res, cfg.epsilon, cfg.rules, need_tr));

  if (suites.count("divfree")) {
    const auto& c = cases.front();
    DivfreeOptions o;
    o.samples = cfg.samples;
    o.seed = cfg.seed + 5;
    const bool exact_class = u.family() == FieldFamily::polynomial;
    o.tolerance = exact_class ? 1e-10 * c.lambda : kFinite;
    o.quadrature_tolerance = exact_class ? 1e-11 : kFinite;
    auto recs = run_divfree_suite(*c.truncator, c.exclusion(), o);
    if (!exact_class)
      for (auto& r : recs)
        if (r.tolerance == kFinite) r.note += "; quadrature-limited for this field, certified by divfree.order";
    rep.add(recs);
    rep.add(divfree_exactness_records(c.cover, c.lambda, c.exclusion(), cfg.rules, cfg.samples, cfg.seed + 4));
    rep.add(jacobian_fd_record(*c.truncator, c.lambda, c.exclusion(), 100, cfg.seed + 8));
    if (!exact_class) {
      // Order check on the smallest cover of the ladder.
      const auto smallest = std::min_element(cases.begin(), cases.end(), [](const auto& a, const auto& b) {
        return a.cover->size() < b.cover->size();
      });
      rep.add(divfree_order_record(u, smallest->cover, smallest->exclusion(), cfg.rules.mu_order,
                                   std::min(cfg.samples, 300), cfg.seed + 6));
    }
  }
  if (suites.count("bounds")) {
    std::vector<BoundsMeasurement> ms;
    for (const auto& c : cases) ms.push_back(measure_bounds(c, u, cfg.p, cfg.samples, cfg.seed + 7));
    rep.add(bounds_records(ms));
    rep.add(ball_scaling_records(cfg.epsilon, cfg.rules));
  }
  if (suites.count("classical")) {
    std::vector<ClassicalMeasurement> ms;
    for (const auto& c : cases) ms.push_back(measure_classical(c, u, cfg.p, cfg.samples, cfg.seed + 9));
    rep.add(classical_records(ms));
    rep.add(maximal_records(u, cfg.box(), 200, cfg.seed + 11));
  }
  return rep;
}

}  // namespace soltrunc
