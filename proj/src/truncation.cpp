#include "soltrunc/truncation.hpp"

#include <algorithm>
#include <cstdio>

namespace soltrunc {

namespace {

template <int Dim>
void require_domain(const WhitneyCover<Dim>& cover, const Vec<Dim>& y) {
  if (!cover.root.contains(y)) throw DomainError("point outside the cover domain");
}

template <int Dim>
std::vector<Vec<Dim>> measure_means(const AnalyticField<Dim>& u, const WhitneyCover<Dim>& cover,
                                    std::vector<DiscreteMeasure<Dim>>& mu, int q) {
  mu.resize(cover.size());
  std::vector<Vec<Dim>> means(cover.size());
  parallel_for(static_cast<std::int64_t>(cover.size()), [&](std::int64_t i) {
    const auto s = static_cast<std::size_t>(i);
    mu[s] = mu_quadrature(cover, s, q);
    Vec<Dim> acc = Vec<Dim>::Zero();
    for (std::size_t n = 0; n < mu[s].nodes.size(); ++n) acc += mu[s].weights[n] * u.value(mu[s].nodes[n]);
    means[s] = acc;
  });
  return means;
}

inline std::uint64_t pair_key(int i, int j, std::size_t n) {
  return static_cast<std::uint64_t>(i) * n + static_cast<std::uint64_t>(j);
}

inline std::uint64_t triple_key(int i, int j, int k, std::size_t n) {
  return (static_cast<std::uint64_t>(i) * n + static_cast<std::uint64_t>(j)) * n + static_cast<std::uint64_t>(k);
}

// Sorts (i, j, k) and returns the permutation sign.
inline int sort3(int& i, int& j, int& k) {
  int sign = 1;
  if (i > j) std::swap(i, j), sign = -sign;
  if (j > k) std::swap(j, k), sign = -sign;
  if (i > j) std::swap(i, j), sign = -sign;
  return sign;
}

}  // namespace

template <int Dim>
ClassicalTruncator<Dim>::ClassicalTruncator(AnalyticField<Dim> u, std::shared_ptr<const WhitneyCover<Dim>> cover,
                                            int mu_order)
    : u_(std::move(u)), pu_(cover) {
  std::vector<DiscreteMeasure<Dim>> mu;
  means_ = measure_means(u_, *cover, mu, mu_order);
}

template <int Dim>
Vec<Dim> ClassicalTruncator<Dim>::value(const Vec<Dim>& y) const {
  require_domain(pu_.cover(), y);
  if (!pu_.cover().geometry->is_bad(y)) return u_.value(y);
  const auto p = pu_.evaluate(y);
  Vec<Dim> acc = Vec<Dim>::Zero();
  for (std::size_t k = 0; k < p.size(); ++k) acc += p.value[k] * means_[static_cast<std::size_t>(p.index[k])];
  return acc;
}

template <int Dim>
Mat<Dim> ClassicalTruncator<Dim>::jacobian(const Vec<Dim>& y) const {
  require_domain(pu_.cover(), y);
  if (!pu_.cover().geometry->is_bad(y)) return u_.jacobian(y);
  const auto p = pu_.evaluate(y);
  Mat<Dim> acc = Mat<Dim>::Zero();
  for (std::size_t k = 0; k < p.size(); ++k)
    acc += means_[static_cast<std::size_t>(p.index[k])] * p.gradient[k].transpose();
  return acc;
}

template <int Dim>
CurlFreeTruncator<Dim>::CurlFreeTruncator(AnalyticField<Dim> v, std::shared_ptr<const WhitneyCover<Dim>> cover,
                                          TruncationRules rules)
    : v_(std::move(v)), cover_(cover), pu_(cover), rules_(rules), seg_(segment_rule(rules.segment_degree)) {
  // Probe the curl-free precondition on a fixed lattice of the root box.
  const Box<Dim> root = cover_->root;
  const int probes = 5;
  int total = 1;
  for (int a = 0; a < Dim; ++a) total *= probes;
  for (int f = 0; f < total; ++f) {
    Vec<Dim> x;
    int rest = f;
    for (int a = 0; a < Dim; ++a) {
      x(a) = root.lo(a) + (rest % probes + 0.5) / probes * (root.hi(a) - root.lo(a));
      rest /= probes;
    }
    const Mat<Dim> J = v_.jacobian(x);
    if ((J - J.transpose()).norm() > 1e-10 * (1 + J.norm()))
      throw PreconditionError("field is not curl-free");
  }
  means_ = measure_means(v_, *cover_, mu_, rules_.mu_order);
  const auto keys = cover_->overlapping_pairs();
  pairs_.resize(keys.size());
  parallel_for(static_cast<std::int64_t>(keys.size()), [&](std::int64_t n) {
    pairs_[static_cast<std::size_t>(n)] = build_G(keys[static_cast<std::size_t>(n)].first, keys[static_cast<std::size_t>(n)].second);
  });
  for (std::size_t n = 0; n < keys.size(); ++n)
    pair_slot_.emplace(pair_key(keys[n].first, keys[n].second, cover_->size()), static_cast<int>(n));
}

template <int Dim>
AffineCorrector<Dim> CurlFreeTruncator<Dim>::build_G(int i, int j) const {
  const auto& mi = mu_[static_cast<std::size_t>(i)];
  const auto& mj = mu_[static_cast<std::size_t>(j)];
  AffineCorrector<Dim> G;
  G.anchor = (cover_->cubes[static_cast<std::size_t>(i)].center() + cover_->cubes[static_cast<std::size_t>(j)].center()) / 2;
  for (std::size_t a = 0; a < mi.nodes.size(); ++a)
    for (std::size_t b = 0; b < mj.nodes.size(); ++b) {
      const Vec<Dim> d = mi.nodes[a] - mj.nodes[b];
      Eigen::Matrix<double, Dim, 2> corners;
      corners << mi.nodes[a], mj.nodes[b];
      for (Eigen::Index q = 0; q < seg_.size(); ++q) {
        const double w = mi.weights[a] * mj.weights[b] * seg_.weights(q);
        const Vec<Dim> z = seg_.node<Dim>(q, corners);
        const Vec<Dim> Jd = v_.jacobian(z).transpose() * d;
        G.slope += w * Jd;
        G.offset += w * Jd.dot(G.anchor - z);
      }
    }
  return G;
}

template <int Dim>
AffineCorrector<Dim> CurlFreeTruncator<Dim>::lookup(int i, int j) const {
  const bool flip = i > j;
  if (flip) std::swap(i, j);
  auto it = pair_slot_.find(pair_key(i, j, cover_->size()));
  if (it == pair_slot_.end()) throw Error("missing pair corrector");
  const auto& G = pairs_[static_cast<std::size_t>(it->second)];
  return flip ? -G : G;
}

template <int Dim>
void CurlFreeTruncator<Dim>::evaluate(const Vec<Dim>& y, Vec<Dim>* v, Mat<Dim>* J) const {
  require_domain(*cover_, y);
  if (!cover_->geometry->is_bad(y)) {
    v_.evaluate(y, v, J);
    return;
  }
  const auto p = pu_.evaluate(y);
  const std::size_t m = p.size();
  Vec<Dim> val = Vec<Dim>::Zero();
  Mat<Dim> jac = Mat<Dim>::Zero();
  for (std::size_t k = 0; k < m; ++k) {
    const auto& vb = means_[static_cast<std::size_t>(p.index[k])];
    val += p.value[k] * vb;
    jac += vb * p.gradient[k].transpose();
  }
  for (std::size_t ki = 0; ki < m; ++ki)
    for (std::size_t kj = 0; kj < m; ++kj) {
      if (ki == kj) continue;
      const auto G = lookup(p.index[ki], p.index[kj]);
      const double g = G(y);
      val += p.value[kj] * g * p.gradient[ki];
      jac += g * p.gradient[ki] * p.gradient[kj].transpose() + p.value[kj] * g * p.hessian[ki] +
             p.value[kj] * p.gradient[ki] * G.slope.transpose();
    }
  if (v) *v = val;
  if (J) *J = jac;
}

template <int Dim>
Vec<Dim> CurlFreeTruncator<Dim>::value(const Vec<Dim>& y) const {
  Vec<Dim> v;
  evaluate(y, &v, nullptr);
  return v;
}

template <int Dim>
Mat<Dim> CurlFreeTruncator<Dim>::jacobian(const Vec<Dim>& y) const {
  Mat<Dim> J;
  evaluate(y, nullptr, &J);
  return J;
}

template <int Dim>
double CurlFreeTruncator<Dim>::curl(const Vec<Dim>& y) const {
  const Mat<Dim> J = jacobian(y);
  if constexpr (Dim == 2) return J(1, 0) - J(0, 1);
  return (J - J.transpose()).norm() / std::sqrt(2.0);
}

SolenoidalTruncator::SolenoidalTruncator(AnalyticField<3> u, std::shared_ptr<const WhitneyCover<3>> cover,
                                         TruncationRules rules)
    : u_(std::move(u)),
      cover_(cover),
      pu_(cover),
      rules_(rules),
      seg_(segment_rule(rules.segment_degree)),
      tri_(triangle_rule(rules.triangle_degree)) {
  means_ = measure_means(u_, *cover_, mu_, rules_.mu_order);
  const std::size_t n = cover_->size();
  pair_keys_ = cover_->overlapping_pairs();
  pairs_.resize(pair_keys_.size());
  parallel_for(static_cast<std::int64_t>(pair_keys_.size()), [&](std::int64_t t) {
    const auto& k = pair_keys_[static_cast<std::size_t>(t)];
    pairs_[static_cast<std::size_t>(t)] = build_A(k.first, k.second);
  });
  for (std::size_t t = 0; t < pair_keys_.size(); ++t)
    pair_slot_.emplace(pair_key(pair_keys_[t].first, pair_keys_[t].second, n), static_cast<int>(t));
  triple_keys_ = cover_->overlapping_triples();
  triples_.resize(triple_keys_.size());
  triple_du_.resize(triple_keys_.size());
  parallel_for(static_cast<std::int64_t>(triple_keys_.size()), [&](std::int64_t t) {
    const auto& k = triple_keys_[static_cast<std::size_t>(t)];
    auto r = triple_with_scale(k[0], k[1], k[2]);
    triples_[static_cast<std::size_t>(t)] = r.first;
    triple_du_[static_cast<std::size_t>(t)] = r.second;
  });
  triple_slot_.reserve(triple_keys_.size());
  for (std::size_t t = 0; t < triple_keys_.size(); ++t)
    triple_slot_.emplace(triple_key(triple_keys_[t][0], triple_keys_[t][1], triple_keys_[t][2], n), static_cast<int>(t));
}

PairCorrector<3> SolenoidalTruncator::build_A(int i, int j) const {
  const auto& mi = mu_[static_cast<std::size_t>(i)];
  const auto& mj = mu_[static_cast<std::size_t>(j)];
  PairCorrector<3> A;
  A.anchor = (cover_->cubes[static_cast<std::size_t>(i)].center() + cover_->cubes[static_cast<std::size_t>(j)].center()) / 2;
  double du = 0;
  for (std::size_t a = 0; a < mi.nodes.size(); ++a)
    for (std::size_t b = 0; b < mj.nodes.size(); ++b) {
      const Vec3 d = mi.nodes[a] - mj.nodes[b];
      Eigen::Matrix<double, 3, 2> corners;
      corners << mi.nodes[a], mj.nodes[b];
      for (Eigen::Index q = 0; q < seg_.size(); ++q) {
        const double w = mi.weights[a] * mj.weights[b] * seg_.weights(q);
        const Vec3 z = seg_.node<3>(q, corners);
        const Mat3 J = u_.jacobian(z);
        const Vec3 v = J * d;
        A.g += w * v;
        A.M += w * (A.anchor - z) * v.transpose();
        du += w * J.norm();
      }
    }
  A.du_scale = du;
  return A;
}

std::pair<AffineCorrector<3>, double> SolenoidalTruncator::triple_with_scale(int i, int j, int k) const {
  const auto& mi = mu_[static_cast<std::size_t>(i)];
  const auto& mj = mu_[static_cast<std::size_t>(j)];
  const auto& mk = mu_[static_cast<std::size_t>(k)];
  AffineCorrector<3> B;
  B.anchor = (cover_->cubes[static_cast<std::size_t>(i)].center() + cover_->cubes[static_cast<std::size_t>(j)].center() +
              cover_->cubes[static_cast<std::size_t>(k)].center()) / 3;
  double du = 0;
  for (std::size_t a = 0; a < mi.nodes.size(); ++a)
    for (std::size_t b = 0; b < mj.nodes.size(); ++b)
      for (std::size_t c = 0; c < mk.nodes.size(); ++c) {
        const Vec3 n = area_vector(mi.nodes[a], mj.nodes[b], mk.nodes[c]);
        Eigen::Matrix<double, 3, 3> corners;
        corners << mi.nodes[a], mj.nodes[b], mk.nodes[c];
        const double wm = mi.weights[a] * mj.weights[b] * mk.weights[c];
        for (Eigen::Index q = 0; q < tri_.size(); ++q) {
          const double w = wm * tri_.weights(q);
          const Vec3 z = tri_.node<3>(q, corners);
          const Mat3 J = u_.jacobian(z);
          const Vec3 Jn = J.transpose() * n;
          B.slope += w * Jn;
          B.offset += w * Jn.dot(B.anchor - z);
          du += w * J.norm();
        }
      }
  return {B, du};
}

AffineCorrector<3> SolenoidalTruncator::build_B(int i, int j, int k) const { return triple_with_scale(i, j, k).first; }

PairCorrector<3> SolenoidalTruncator::A(int i, int j) const {
  const bool flip = i > j;
  if (flip) std::swap(i, j);
  auto it = pair_slot_.find(pair_key(i, j, cover_->size()));
  if (it == pair_slot_.end()) throw Error("missing pair corrector");
  const auto& P = pairs_[static_cast<std::size_t>(it->second)];
  return flip ? -P : P;
}

AffineCorrector<3> SolenoidalTruncator::B(int i, int j, int k) const {
  const int sign = sort3(i, j, k);
  auto it = triple_slot_.find(triple_key(i, j, k, cover_->size()));
  if (it == triple_slot_.end()) throw Error("missing triple corrector");
  const auto& T = triples_[static_cast<std::size_t>(it->second)];
  return sign > 0 ? T : -T;
}

TruncationSample SolenoidalTruncator::evaluate(const Vec3& y, bool with_jacobian) const {
  require_domain(*cover_, y);
  TruncationSample out;
  if (!cover_->geometry->is_bad(y)) {
    out.good = true;
    u_.evaluate(y, &out.value, &out.jacobian);
    out.t0 = out.value;
    out.jt0 = out.jacobian;
    return out;
  }
  const auto p = pu_.evaluate(y);
  const std::size_t m = p.size();
  out.cubes = static_cast<int>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& ub = means_[static_cast<std::size_t>(p.index[k])];
    out.t0 += p.value[k] * ub;
    if (with_jacobian) out.jt0 += ub * p.gradient[k].transpose();
  }
  // S u = -1/2 sum_{i,j} phi_j (A - A^T)(i,j)(y) grad phi_i.
  for (std::size_t ki = 0; ki < m; ++ki)
    for (std::size_t kj = 0; kj < m; ++kj) {
      if (ki == kj) continue;
      const auto P = A(p.index[ki], p.index[kj]);
      const Mat3 Ay = P(y);
      const Mat3 D = Ay - Ay.transpose();
      const Vec3& gi = p.gradient[ki];
      const Vec3 Dg = D * gi;
      out.s -= 0.5 * p.value[kj] * Dg;
      if (with_jacobian)
        out.js -= 0.5 * (Dg * p.gradient[kj].transpose() +
                         p.value[kj] * (P.g.dot(gi) * Mat3::Identity() - P.g * gi.transpose()) +
                         p.value[kj] * D * p.hessian[ki]);
    }
  // R u_a = -sum_{i,j,k} phi_k d_b phi_j d_c phi_i B(i,j,k)(y), (a, b, c) cyclic.
  for (std::size_t ki = 0; ki < m; ++ki)
    for (std::size_t kj = 0; kj < m; ++kj) {
      if (kj == ki) continue;
      for (std::size_t kk = 0; kk < m; ++kk) {
        if (kk == ki || kk == kj) continue;
        const auto T = B(p.index[ki], p.index[kj], p.index[kk]);
        const double b = T(y);
        const double phik = p.value[kk];
        const Vec3& gi = p.gradient[ki];
        const Vec3& gj = p.gradient[kj];
        const Vec3& gk = p.gradient[kk];
        for (int a = 0; a < 3; ++a) {
          const int bb = (a + 1) % 3, cc = (a + 2) % 3;
          const double w = gj(bb) * gi(cc);
          out.r(a) -= phik * w * b;
          if (with_jacobian)
            out.jr.row(a) -= (w * b * gk + phik * gi(cc) * b * p.hessian[kj].col(bb) +
                              phik * gj(bb) * b * p.hessian[ki].col(cc) + phik * w * T.slope)
                                 .transpose();
        }
      }
    }
  out.value = out.t0 + out.s + out.r;
  out.jacobian = out.jt0 + out.js + out.jr;
  return out;
}

DivergenceParts SolenoidalTruncator::divergence_parts(const Vec3& y) const {
  const auto smp = evaluate(y, true);
  DivergenceParts d;
  d.t0 = smp.jt0.trace();
  d.s = smp.js.trace();
  d.r = smp.jr.trace();
  d.term_scale = std::max({smp.jt0.norm(), smp.js.norm(), smp.jr.norm()});
  if (smp.good) {
    d.t0_pairs = d.t0;
    d.s_pairs = d.s;
    d.s_triples = d.s;
    return d;
  }
  const auto p = pu_.evaluate(y);
  const std::size_t m = p.size();
  double scale = 0;
  double cyc = 0;
  for (std::size_t ki = 0; ki < m; ++ki)
    for (std::size_t kj = 0; kj < m; ++kj) {
      if (ki == kj) continue;
      const auto P = A(p.index[ki], p.index[kj]);
      const Mat3 Ay = P(y);
      const double t = p.value[kj] * p.gradient[ki].dot(P.g);
      d.t0_pairs += t;
      scale = std::max(scale, std::abs(t));
      for (int c = 0; c < 3; ++c) {
        const int a = (c + 1) % 3, b = (c + 2) % 3;
        const double term = p.gradient[kj](a) * p.gradient[ki](b) * (Ay(a, b) - Ay(b, a));
        cyc += term;
        scale = std::max(scale, std::abs(term));
      }
    }
  d.s_pairs = -d.t0_pairs - cyc;
  double K = 0;
  for (std::size_t ki = 0; ki < m; ++ki)
    for (std::size_t kj = 0; kj < m; ++kj) {
      if (kj == ki) continue;
      for (std::size_t kk = 0; kk < m; ++kk) {
        if (kk == ki || kk == kj) continue;
        const auto T = B(p.index[ki], p.index[kj], p.index[kk]);
        const double b = T(y);
        for (int c = 0; c < 3; ++c) {
          const int a = (c + 1) % 3, bb = (c + 2) % 3;
          const double term = p.value[kk] * p.gradient[kj](a) * p.gradient[ki](bb) * T.slope(c);
          K += term;
          scale = std::max(scale, std::abs(term));
          scale = std::max(scale, std::abs(p.gradient[kk](c) * p.gradient[kj](a) * p.gradient[ki](bb) * b));
        }
      }
    }
  d.s_triples = -d.t0_pairs + K;
  d.term_scale = std::max(d.term_scale, scale);
  return d;
}

void SolenoidalTruncator::write_pair_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "i,j,alpha,beta,constant,slope_x,slope_y,slope_z\n");
  for (std::size_t t = 0; t < pairs_.size(); ++t)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const auto e = pairs_[t].entry(a, b);
        std::fprintf(f, "%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", pair_keys_[t].first, pair_keys_[t].second, a, b,
                     e.constant_term(), e.slope(0), e.slope(1), e.slope(2));
      }
  std::fclose(f);
}

void SolenoidalTruncator::write_triple_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "i,j,k,constant,slope_x,slope_y,slope_z\n");
  for (std::size_t t = 0; t < triples_.size(); ++t) {
    const auto& e = triples_[t];
    std::fprintf(f, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", triple_keys_[t][0], triple_keys_[t][1], triple_keys_[t][2],
                 e.constant_term(), e.slope(0), e.slope(1), e.slope(2));
  }
  std::fclose(f);
}

template class ClassicalTruncator<2>;
template class ClassicalTruncator<3>;
template class CurlFreeTruncator<2>;
template class CurlFreeTruncator<3>;

}  // namespace soltrunc
