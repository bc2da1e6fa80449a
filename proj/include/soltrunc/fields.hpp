#ifndef SOLTRUNC_FIELDS_HPP
#define SOLTRUNC_FIELDS_HPP

#include "soltrunc/grid.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace soltrunc {

enum class FieldFamily { polynomial, trigonometric, curl_potential, spike, gradient, composite };

std::string to_string(FieldFamily f);

// Smooth scalar function with value, gradient and Hessian.
template <int Dim>
class ScalarFunction {
 public:
  virtual ~ScalarFunction() = default;
  virtual void evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const = 0;

  double value(const Vec<Dim>& x) const {
    double f;
    Vec<Dim> g;
    Mat<Dim> H;
    evaluate(x, f, g, H);
    return f;
  }
  Vec<Dim> gradient(const Vec<Dim>& x) const {
    double f;
    Vec<Dim> g;
    Mat<Dim> H;
    evaluate(x, f, g, H);
    return g;
  }
  Mat<Dim> hessian(const Vec<Dim>& x) const {
    double f;
    Vec<Dim> g;
    Mat<Dim> H;
    evaluate(x, f, g, H);
    return H;
  }
};

template <int Dim>
struct Monomial {
  double coefficient = 1.0;
  std::array<int, Dim> powers{};
};

// Finite sum of monomials.
template <int Dim>
class Polynomial final : public ScalarFunction<Dim> {
 public:
  explicit Polynomial(std::vector<Monomial<Dim>> terms) : terms_(std::move(terms)) {}
  void evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const override;
  int degree() const;

 private:
  std::vector<Monomial<Dim>> terms_;
};

// amplitude * prod_a sin(k_a x_a + phase_a).
template <int Dim>
class TrigProduct final : public ScalarFunction<Dim> {
 public:
  TrigProduct(double amplitude, const Vec<Dim>& wavenumber, const Vec<Dim>& phase)
      : amplitude_(amplitude), k_(wavenumber), phase_(phase) {}
  void evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const override;

 private:
  double amplitude_;
  Vec<Dim> k_, phase_;
};

// amplitude * h(|x - c|^2 / w^2), h(s) = exp(1 - 1/(1 - s/16)) on s < 16 and 0
// beyond, so the support is the closed ball of radius 4w and h(0) = 1.
template <int Dim>
class CompactBump final : public ScalarFunction<Dim> {
 public:
  CompactBump(const Vec<Dim>& center, double amplitude, double width)
      : c_(center), amplitude_(amplitude), w_(width) {}
  void evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const override;
  double support_radius() const { return 4 * w_; }

 private:
  Vec<Dim> c_;
  double amplitude_, w_;
};

// amplitude * exp(-|x - c|^2 / (2 sigma^2)).
template <int Dim>
class Gaussian final : public ScalarFunction<Dim> {
 public:
  Gaussian(const Vec<Dim>& center, double amplitude, double sigma) : c_(center), amplitude_(amplitude), s_(sigma) {}
  void evaluate(const Vec<Dim>& x, double& f, Vec<Dim>& g, Mat<Dim>& H) const override;

 private:
  Vec<Dim> c_;
  double amplitude_, s_;
};

// Vector field with Jacobian J(b, c) = d_c u_b.
template <int Dim>
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual void evaluate(const Vec<Dim>& x, Vec<Dim>* value, Mat<Dim>* jacobian) const = 0;
  virtual FieldFamily family() const = 0;
};

// Value-semantics handle over a shared immutable field.
template <int Dim>
class AnalyticField {
 public:
  AnalyticField() = default;
  explicit AnalyticField(std::shared_ptr<const VectorField<Dim>> impl) : impl_(std::move(impl)) {}

  Vec<Dim> value(const Vec<Dim>& x) const {
    Vec<Dim> v;
    impl_->evaluate(x, &v, nullptr);
    return v;
  }
  Mat<Dim> jacobian(const Vec<Dim>& x) const {
    Mat<Dim> J;
    impl_->evaluate(x, nullptr, &J);
    return J;
  }
  // Trace of the analytic Jacobian.
  double divergence(const Vec<Dim>& x) const { return jacobian(x).trace(); }
  void evaluate(const Vec<Dim>& x, Vec<Dim>* v, Mat<Dim>* J) const { impl_->evaluate(x, v, J); }
  FieldFamily family() const { return impl_->family(); }
  bool valid() const { return static_cast<bool>(impl_); }
  const std::shared_ptr<const VectorField<Dim>>& impl() const { return impl_; }

 private:
  std::shared_ptr<const VectorField<Dim>> impl_;
};

template <int Dim>
AnalyticField<Dim> operator+(const AnalyticField<Dim>& a, const AnalyticField<Dim>& b);
template <int Dim>
AnalyticField<Dim> operator*(double s, const AnalyticField<Dim>& a);

// c + M x.
template <int Dim>
AnalyticField<Dim> affine_field(const Vec<Dim>& c, const Mat<Dim>& M);

// Componentwise polynomial.
template <int Dim>
AnalyticField<Dim> polynomial_field(std::array<Polynomial<Dim>, Dim> components);

// Gradient of a scalar potential; curl-free.
template <int Dim>
AnalyticField<Dim> gradient_field(std::shared_ptr<const ScalarFunction<Dim>> potential);

// Vector potential U = sum_t f_t(z) d_t with constant directions d_t.
struct VectorPotential {
  struct Term {
    std::shared_ptr<const ScalarFunction<3>> f;
    Vec3 direction;
  };
  std::vector<Term> terms;
  FieldFamily family = FieldFamily::curl_potential;
};

// u = curl U = sum_t grad f_t x d_t, divergence free up to rounding.
AnalyticField<3> make_curl_field(const VectorPotential& potential);

// Compactly supported solenoidal bump: curl of amplitude * width * h(|z - c|^2/width^2) d.
AnalyticField<3> spike_field(const Vec3& center, double amplitude, double width, const Vec3& direction = Vec3::UnitZ());

// Arnold-Beltrami-Childress flow, solenoidal trigonometric field.
AnalyticField<3> abc_flow(double A, double B, double C, double k = 1.0);

// Values of a field on grid nodes; trilinear interpolation in between.
struct GridField {
  Grid<3> grid;
  std::vector<Vec3> values;

  Vec3 interpolate(const Vec3& x) const;
  // Little-endian: 3 x u32 extents, 3 x f64 origin, f64 spacing, then
  // 3 x f64 per node in row-major order.
  void write(const std::string& path) const;
  static GridField read(const std::string& path);
};

template <typename F>
GridField sample_to_grid(const F& f, const Grid<3>& grid) {
  GridField out{grid, std::vector<Vec3>(static_cast<std::size_t>(grid.size()))};
  parallel_for(grid.size(), [&](std::int64_t n) { out.values[static_cast<std::size_t>(n)] = f(grid.node(n)); });
  return out;
}

}  // namespace soltrunc

#endif
