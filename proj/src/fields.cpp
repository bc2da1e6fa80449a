#include "soltrunc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace soltrunc {

std::string to_string(FieldFamily f) {
  switch (f) {
    case FieldFamily::polynomial: return "polynomial";
    case FieldFamily::trigonometric: return "trigonometric";
    case FieldFamily::curl_potential: return "curl_potential";
    case FieldFamily::spike: return "spike";
    case FieldFamily::gradient: return "gradient";
    case FieldFamily::composite: return "composite";
  }
  return "unknown";
}

namespace {

// Product rule for prod_a p_a(x_a) given per-axis value, first and second derivative.
template <int Dim>
void separable_product(double scale, const Vec<Dim>& v, const Vec<Dim>& d1, const Vec<Dim>& d2, double& f,
                       Vec<Dim>& g, Mat<Dim>& H) {
  auto prod_except = [&](int a, int b) {
    double p = scale;
    for (int c = 0; c < Dim; ++c)
      if (c != a && c != b) p *= v(c);
    return p;
  };
  f += prod_except(-1, -1);
  for (int a = 0; a < Dim; ++a) {
    g(a) += d1(a) * prod_except(a, -1);
    H(a, a) += d2(a) * prod_except(a, -1);
    for (int b = a + 1; b < Dim; ++b) {
      const double h = d1(a) * d1(b) * prod_except(a, b);
      H(a, b) += h;
      H(b, a) += h;
    }
  }
}

}  // namespace

template <int Dim>
void Polynomial<Dim>::evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const {
  f = 0;
  g.setZero();
  H.setZero();
  for (const auto& t : terms_) {
    Vec<Dim> v, d1, d2;
    for (int a = 0; a < Dim; ++a) {
      const int p = t.powers[a];
      v(a) = std::pow(x(a), p);
      d1(a) = p >= 1 ? p * std::pow(x(a), p - 1) : 0.0;
      d2(a) = p >= 2 ? p * (p - 1) * std::pow(x(a), p - 2) : 0.0;
    }
    separable_product<Dim>(t.coefficient, v, d1, d2, f, g, H);
  }
}

template <int Dim>
int Polynomial<Dim>::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int p : t.powers) s += p;
    d = std::max(d, s);
  }
  return d;
}

template <int Dim>
void TrigProduct<Dim>::evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const {
  f = 0;
  g.setZero();
  H.setZero();
  Vec<Dim> v, d1, d2;
  for (int a = 0; a < Dim; ++a) {
    const double arg = k_(a) * x(a) + phase_(a);
    v(a) = std::sin(arg);
    d1(a) = k_(a) * std::cos(arg);
    d2(a) = -k_(a) * k_(a) * v(a);
  }
  separable_product<Dim>(amplitude_, v, d1, d2, f, g, H);
}

template <int Dim>
void CompactBump<Dim>::evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const {
  const Vec<Dim> r = x - c_;
  const double w2 = w_ * w_;
  const double s = r.squaredNorm() / w2;
  if (s >= 16.0) {
    f = 0;
    g.setZero();
    H.setZero();
    return;
  }
  const double q = 1.0 - s / 16.0;
  const double h = std::exp(1.0 - 1.0 / q);
  const double h1 = -h / (16.0 * q * q);
  const double h2 = -h1 / (16.0 * q * q) - h / (128.0 * q * q * q);
  const Vec<Dim> ds = 2.0 * r / w2;
  f = amplitude_ * h;
  g = amplitude_ * h1 * ds;
  H = amplitude_ * (h2 * ds * ds.transpose() + (2.0 * h1 / w2) * Mat<Dim>::Identity());
}

template <int Dim>
void Gaussian<Dim>::evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const {
  const Vec<Dim> r = x - c_;
  const double s2 = s_ * s_;
  f = amplitude_ * std::exp(-r.squaredNorm() / (2 * s2));
  g = -f * r / s2;
  H = f * (r * r.transpose() / (s2 * s2) - Mat<Dim>::Identity() / s2);
}

namespace {

template <int Dim>
class AffineField final : public VectorField<Dim> {
 public:
  AffineField(const Vec<Dim>& c, const Mat<Dim>& M) : c_(c), M_(M) {}
  void evaluate(const Vec<Dim>& x, Vec<Dim>* v, Mat<Dim>* J) const override {
    if (v) *v = c_ + M_ * x;
    if (J) *J = M_;
  }
  FieldFamily family() const override { return FieldFamily::polynomial; }

 private:
  Vec<Dim> c_;
  Mat<Dim> M_;
};

template <int Dim>
class PolynomialField final : public VectorField<Dim> {
 public:
  explicit PolynomialField(std::array<Polynomial<Dim>, Dim> p) : p_(std::move(p)) {}
  void evaluate(const Vec<Dim>& x, Vec<Dim>* v, Mat<Dim>* J) const override {
    for (int b = 0; b < Dim; ++b) {
      double f;
      Vec<Dim> g;
      Mat<Dim> H;
      p_[b].evaluate(x, f, g, H);
      if (v) (*v)(b) = f;
      if (J) J->row(b) = g.transpose();
    }
  }
  FieldFamily family() const override { return FieldFamily::polynomial; }

 private:
  std::array<Polynomial<Dim>, Dim> p_;
};

template <int Dim>
class GradientField final : public VectorField<Dim> {
 public:
  explicit GradientField(std::shared_ptr<const ScalarFunction<Dim>> V) : V_(std::move(V)) {}
  void evaluate(const Vec<Dim>& x, Vec<Dim>* v, Mat<Dim>* J) const override {
    double f;
    Vec<Dim> g;
    Mat<Dim> H;
    V_->evaluate(x, f, g, H);
    if (v) *v = g;
    if (J) *J = H;
  }
  FieldFamily family() const override { return FieldFamily::gradient; }

 private:
  std::shared_ptr<const ScalarFunction<Dim>> V_;
};

class CurlField final : public VectorField<3> {
 public:
  explicit CurlField(VectorPotential U) : U_(std::move(U)) {}
  void evaluate(const Vec3& x, Vec3* v, Mat3* J) const override {
    if (v) v->setZero();
    if (J) J->setZero();
    for (const auto& t : U_.terms) {
      double f;
      Vec3 g;
      Mat3 H;
      t.f->evaluate(x, f, g, H);
      if (v) *v += g.cross(t.direction);
      if (J)
        for (int m = 0; m < 3; ++m) J->col(m) += H.col(m).cross(t.direction);
    }
  }
  FieldFamily family() const override { return U_.family; }

 private:
  VectorPotential U_;
};

class AbcFlow final : public VectorField<3> {
 public:
  AbcFlow(double A, double B, double C, double k) : A_(A), B_(B), C_(C), k_(k) {}
  void evaluate(const Vec3& x, Vec3* v, Mat3* J) const override {
    const double sx = std::sin(k_ * x(0)), cx = std::cos(k_ * x(0));
    const double sy = std::sin(k_ * x(1)), cy = std::cos(k_ * x(1));
    const double sz = std::sin(k_ * x(2)), cz = std::cos(k_ * x(2));
    if (v) *v = Vec3(A_ * sz + C_ * cy, B_ * sx + A_ * cz, C_ * sy + B_ * cx);
    if (J) {
      *J << 0, -C_ * k_ * sy, A_ * k_ * cz,
            B_ * k_ * cx, 0, -A_ * k_ * sz,
            -B_ * k_ * sx, C_ * k_ * cy, 0;
    }
  }
  FieldFamily family() const override { return FieldFamily::trigonometric; }

 private:
  double A_, B_, C_, k_;
};

template <int Dim>
class SumField final : public VectorField<Dim> {
 public:
  SumField(std::shared_ptr<const VectorField<Dim>> a, std::shared_ptr<const VectorField<Dim>> b, double sa, double sb)
      : a_(std::move(a)), b_(std::move(b)), sa_(sa), sb_(sb) {}
  void evaluate(const Vec<Dim>& x, Vec<Dim>* v, Mat<Dim>* J) const override {
    Vec<Dim> va, vb;
    Mat<Dim> Ja, Jb;
    a_->evaluate(x, v ? &va : nullptr, J ? &Ja : nullptr);
    if (b_) b_->evaluate(x, v ? &vb : nullptr, J ? &Jb : nullptr);
    if (v) *v = b_ ? (sa_ * va + sb_ * vb).eval() : (sa_ * va).eval();
    if (J) *J = b_ ? (sa_ * Ja + sb_ * Jb).eval() : (sa_ * Ja).eval();
  }
  FieldFamily family() const override {
    if (!b_ || a_->family() == b_->family()) return a_->family();
    return FieldFamily::composite;
  }

 private:
  std::shared_ptr<const VectorField<Dim>> a_, b_;
  double sa_, sb_;
};

}  // namespace

template <int Dim>
AnalyticField<Dim> operator+(const AnalyticField<Dim>& a, const AnalyticField<Dim>& b) {
  return AnalyticField<Dim>(std::make_shared<SumField<Dim>>(a.impl(), b.impl(), 1.0, 1.0));
}

template <int Dim>
AnalyticField<Dim> operator*(double s, const AnalyticField<Dim>& a) {
  return AnalyticField<Dim>(std::make_shared<SumField<Dim>>(a.impl(), nullptr, s, 0.0));
}

template <int Dim>
AnalyticField<Dim> affine_field(const Vec<Dim>& c, const Mat<Dim>& M) {
  return AnalyticField<Dim>(std::make_shared<AffineField<Dim>>(c, M));
}

template <int Dim>
AnalyticField<Dim> polynomial_field(std::array<Polynomial<Dim>, Dim> components) {
  return AnalyticField<Dim>(std::make_shared<PolynomialField<Dim>>(std::move(components)));
}

template <int Dim>
AnalyticField<Dim> gradient_field(std::shared_ptr<const ScalarFunction<Dim>> potential) {
  return AnalyticField<Dim>(std::make_shared<GradientField<Dim>>(std::move(potential)));
}

AnalyticField<3> make_curl_field(const VectorPotential& potential) {
  for (const auto& t : potential.terms)
    if (!t.f) throw ConfigError("vector potential term without a scalar function");
  return AnalyticField<3>(std::make_shared<CurlField>(potential));
}

AnalyticField<3> spike_field(const Vec3& center, double amplitude, double width, const Vec3& direction) {
  if (!(width > 0)) throw ConfigError("spike width must be positive");
  VectorPotential U;
  U.family = FieldFamily::spike;
  U.terms.push_back({std::make_shared<CompactBump<3>>(center, amplitude * width, width), direction});
  return make_curl_field(U);
}

AnalyticField<3> abc_flow(double A, double B, double C, double k) {
  return AnalyticField<3>(std::make_shared<AbcFlow>(A, B, C, k));
}

Vec3 GridField::interpolate(const Vec3& x) const {
  std::array<int, 3> k0{};
  Vec3 t;
  for (int a = 0; a < 3; ++a) {
    const double s = (x(a) - grid.origin(a)) / grid.spacing;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, std::max(grid.extents[a] - 2, 0));
    k0[a] = i;
    t(a) = std::clamp(s - i, 0.0, 1.0);
  }
  Vec3 acc = Vec3::Zero();
  for (int c = 0; c < 8; ++c) {
    std::array<int, 3> k = k0;
    double w = 1;
    for (int a = 0; a < 3; ++a) {
      const int bit = (c >> a) & 1;
      k[a] = std::min(k[a] + bit, grid.extents[a] - 1);
      w *= bit ? t(a) : 1 - t(a);
    }
    acc += w * values[static_cast<std::size_t>(grid.flat(k))];
  }
  return acc;
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
  if (!is.read(buf, sizeof(T))) throw Error("truncated grid file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void GridField::write(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  for (int e : grid.extents) put<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  for (int a = 0; a < 3; ++a) put<double>(os, grid.origin(a));
  put<double>(os, grid.spacing);
  for (const auto& v : values)
    for (int a = 0; a < 3; ++a) put<double>(os, v(a));
}

GridField GridField::read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  GridField g;
  for (int a = 0; a < 3; ++a) g.grid.extents[a] = static_cast<int>(get<std::uint32_t>(is));
  for (int a = 0; a < 3; ++a) g.grid.origin(a) = get<double>(is);
  g.grid.spacing = get<double>(is);
  g.values.resize(static_cast<std::size_t>(g.grid.size()));
  for (auto& v : g.values)
    for (int a = 0; a < 3; ++a) v(a) = get<double>(is);
  return g;
}

template class Polynomial<2>;
template class Polynomial<3>;
template class TrigProduct<2>;
template class TrigProduct<3>;
template class CompactBump<2>;
template class CompactBump<3>;
template class Gaussian<2>;
template class Gaussian<3>;
template AnalyticField<2> operator+(const AnalyticField<2>&, const AnalyticField<2>&);
template AnalyticField<3> operator+(const AnalyticField<3>&, const AnalyticField<3>&);
template AnalyticField<2> operator*(double, const AnalyticField<2>&);
template AnalyticField<3> operator*(double, const AnalyticField<3>&);
template AnalyticField<2> affine_field(const Vec2&, const Mat2&);
template AnalyticField<3> affine_field(const Vec3&, const Mat3&);
template AnalyticField<2> polynomial_field<2>(std::array<Polynomial<2>, 2>);
template AnalyticField<3> polynomial_field<3>(std::array<Polynomial<3>, 3>);
template AnalyticField<2> gradient_field(std::shared_ptr<const ScalarFunction<2>>);
template AnalyticField<3> gradient_field(std::shared_ptr<const ScalarFunction<3>>);

}  // namespace soltrunc
