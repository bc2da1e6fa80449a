#include "doctest.h"
#include "soltrunc/fields.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>

using namespace soltrunc;

namespace {

std::vector<std::pair<std::string, AnalyticField<3>>> field_zoo() {
  testutil::Gen gen(11);
  VectorPotential pot;
  pot.terms.push_back({std::make_shared<Gaussian<3>>(Vec3(0.2, -0.1, 0.3), 1.5, 0.7), Vec3(0.3, 0.5, -0.8)});
  pot.terms.push_back({std::make_shared<TrigProduct<3>>(0.8, Vec3(1, 2, 0.5), Vec3(0.1, 0.2, 0.3)), Vec3::UnitX()});
  pot.terms.push_back({std::make_shared<CompactBump<3>>(Vec3(0.1, 0.1, 0), 2.0, 0.5), Vec3::UnitY()});
  std::array<Polynomial<3>, 3> comps = {Polynomial<3>({{0.5, {1, 1, 0}}, {1.0, {0, 0, 2}}}),
                                        Polynomial<3>({{-0.5, {0, 2, 0}}, {0.3, {1, 0, 1}}}),
                                        Polynomial<3>({{0.7, {0, 0, 0}}, {0.2, {2, 0, 1}}})};
  return {{"affine", affine_field<3>(Vec3(0.1, -0.2, 0.3), gen.matrix())},
          {"polynomial", polynomial_field<3>(comps)},
          {"spike", spike_field(Vec3(0.1, 0, -0.1), 6, 0.4)},
          {"spike_tilted", spike_field(Vec3::Zero(), 3, 0.6, Vec3(1, 1, 0).normalized())},
          {"abc", abc_flow(1.0, 0.7, 0.4, 2.0)},
          {"curl_potential", make_curl_field(pot)},
          {"gradient", gradient_field<3>(std::make_shared<Gaussian<3>>(Vec3(0.3, 0, 0), 2.0, 0.5))},
          {"sum", spike_field(Vec3::Zero(), 2, 0.5) + 0.5 * abc_flow(1, 1, 1)}};
}

}  // namespace

TEST_CASE("analytic Jacobians agree with central differences") {
  testutil::Gen gen(3);
  for (const auto& [name, u] : field_zoo()) {
    CAPTURE(name);
    for (int s = 0; s < 50; ++s) {
      const Vec3 x = gen.point<3>(-1.5, 1.5);
      const Mat3 J = u.jacobian(x);
      const Mat3 F = testutil::central_jacobian<3, 3>([&](const Vec3& y) { return u.value(y); }, x, 1e-6);
      CHECK((J - F).norm() <= 1e-6 * std::max(1.0, J.norm()));
    }
  }
}

TEST_CASE("curl-type fields are divergence free and gradients are curl free") {
  testutil::Gen gen(4);
  for (const auto& [name, u] : field_zoo()) {
    if (name == "affine" || name == "polynomial" || name == "gradient") continue;
    CAPTURE(name);
    for (int s = 0; s < 100; ++s) {
      const Vec3 x = gen.point<3>(-2, 2);
      CHECK(std::abs(u.divergence(x)) <= 1e-13 * std::max(1.0, u.jacobian(x).norm()));
    }
  }
  const auto g = gradient_field<3>(std::make_shared<TrigProduct<3>>(1.0, Vec3(1, 2, 3), Vec3(0.5, 0, 0.2)));
  for (int s = 0; s < 100; ++s) {
    const Mat3 J = g.jacobian(gen.point<3>());
    CHECK((J - J.transpose()).norm() <= 1e-13 * std::max(1.0, J.norm()));
  }
}

TEST_CASE("scalar functions: gradient and Hessian by differences") {
  testutil::Gen gen(5);
  const std::vector<std::shared_ptr<const ScalarFunction<2>>> fs = {
      std::make_shared<Gaussian<2>>(Vec2(0.1, 0.2), 2.0, 0.6), std::make_shared<CompactBump<2>>(Vec2::Zero(), 3.0, 0.5),
      std::make_shared<TrigProduct<2>>(1.0, Vec2(1.5, 0.5), Vec2(0.3, 0.1)),
      std::make_shared<Polynomial<2>>(std::vector<Monomial<2>>{{1.0, {3, 1}}, {-2.0, {0, 2}}})};
  for (const auto& f : fs) {
    for (int s = 0; s < 40; ++s) {
      const Vec2 x = gen.point<2>(-1.2, 1.2);
      const Vec2 g = f->gradient(x);
      const Mat2 H = f->hessian(x);
      const Vec2 gd = testutil::central_jacobian<1, 2>([&](const Vec2& y) { return Eigen::Matrix<double, 1, 1>(f->value(y)); }, x, 1e-6).transpose();
      const Mat2 Hd = testutil::central_jacobian<2, 2>([&](const Vec2& y) { return f->gradient(y); }, x, 1e-6);
      CHECK((g - gd).norm() <= 1e-6 * std::max(1.0, g.norm()));
      CHECK((H - Hd).norm() <= 1e-6 * std::max(1.0, H.norm()));
    }
  }
}

TEST_CASE("compact bump vanishes outside its support radius") {
  const CompactBump<3> b(Vec3(0.5, 0, 0), 2.0, 0.25);
  CHECK(b.value(Vec3(0.5, 0, 0) + Vec3(b.support_radius() * 1.001, 0, 0)) == 0.0);
  CHECK(b.value(Vec3(0.5, 0, 0)) > 0.0);
}

TEST_CASE("field arithmetic and family tags") {
  const auto a = abc_flow(1, 1, 1);
  const auto s = spike_field(Vec3::Zero(), 1, 1);
  const Vec3 x(0.3, -0.2, 0.1);
  CHECK((a + s).value(x).isApprox(a.value(x) + s.value(x)));
  CHECK((2.5 * a).jacobian(x).isApprox(2.5 * a.jacobian(x)));
  CHECK(a.family() == FieldFamily::trigonometric);
  CHECK(s.family() == FieldFamily::spike);
  CHECK((a + s).family() == FieldFamily::composite);
}

TEST_CASE("GridField round trip is bit exact and interpolation reproduces affine fields") {
  Grid<3> grid = grid_over(Box<3>(Vec3(-1, -1, -1), Vec3(1, 2, 1)), 9);
  testutil::Gen gen(6);
  const Mat3 M = gen.matrix();
  const Vec3 c = gen.point<3>();
  const auto u = affine_field<3>(c, M);
  const GridField f = sample_to_grid([&](const Vec3& y) { return u.value(y); }, grid);
  const auto path = (std::filesystem::temp_directory_path() / "soltrunc_gridfield_test.bin").string();
  f.write(path);
  const GridField g = GridField::read(path);
  std::remove(path.c_str());
  CHECK(g.grid.extents == f.grid.extents);
  CHECK(g.grid.spacing == f.grid.spacing);
  CHECK(g.grid.origin == f.grid.origin);
  REQUIRE(g.values.size() == f.values.size());
  bool same = true;
  for (std::size_t n = 0; n < f.values.size(); ++n) same = same && (g.values[n].array() == f.values[n].array()).all();
  CHECK(same);
  for (int s = 0; s < 50; ++s) {
    const Vec3 x = gen.point<3>(-0.9, 0.9);
    CHECK((g.interpolate(x) - u.value(x)).norm() <= 1e-12);
  }
}

TEST_CASE("zero field samples to a zero grid") {
  const auto z = affine_field<3>(Vec3::Zero(), Mat3::Zero());
  const auto f = sample_to_grid([&](const Vec3& y) { return z.value(y); }, grid_over(Box<3>(Vec3(-1, -1, -1), Vec3(1, 1, 1)), 8));
  for (const auto& v : f.values) CHECK(v.isZero(0));
}
