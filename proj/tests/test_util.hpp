#ifndef SOLTRUNC_TEST_UTIL_HPP
#define SOLTRUNC_TEST_UTIL_HPP

#include "soltrunc/core.hpp"

#include <random>

namespace testutil {

using soltrunc::Mat3;
using soltrunc::Vec;

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double a = -1, double b = 1) { return std::uniform_real_distribution<double>(a, b)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
  template <int Dim>
  Vec<Dim> point(double a = -1, double b = 1) {
    Vec<Dim> x;
    for (int k = 0; k < Dim; ++k) x(k) = uniform(a, b);
    return x;
  }
  Mat3 matrix() {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = uniform();
    return m;
  }
  // Random trace-free matrix: the slope of a linear divergence-free field.
  Mat3 tracefree() {
    Mat3 m = matrix();
    m(2, 2) = -m(0, 0) - m(1, 1);
    return m;
  }
};

// Central differences of x -> f(x) (vector valued) in each coordinate.
template <int Rows, int Dim, typename F>
Eigen::Matrix<double, Rows, Dim> central_jacobian(const F& f, const Vec<Dim>& x, double h) {
  Eigen::Matrix<double, Rows, Dim> J;
  for (int a = 0; a < Dim; ++a) {
    Vec<Dim> e = Vec<Dim>::Zero();
    e(a) = h;
    J.col(a) = (f(x + e) - f(x - e)) / (2 * h);
  }
  return J;
}

}  // namespace testutil

#endif
