#ifndef SOLTRUNC_CORE_HPP
#define SOLTRUNC_CORE_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace soltrunc {

template <typename Scalar, int Dim>
using Point = Eigen::Matrix<Scalar, Dim, 1>;
template <typename Scalar, int Dim>
using Tensor2 = Eigen::Matrix<Scalar, Dim, Dim>;

template <int Dim>
using Vec = Point<double, Dim>;
template <int Dim>
using Mat = Tensor2<double, Dim>;

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;
using Mat2 = Mat<2>;
using Mat3 = Mat<3>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConstructionError : Error {
  using Error::Error;
};
struct CoverDefectError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct QuadratureError : Error {
  using Error::Error;
};

// Worker count, capped by SOLTRUNC_THREADS when set.
int thread_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write into per-index slots so results never depend on scheduling.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

// z-component of the planar cross product, the two-dimensional curl.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace soltrunc

#endif
