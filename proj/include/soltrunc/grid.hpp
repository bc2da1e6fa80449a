#ifndef SOLTRUNC_GRID_HPP
#define SOLTRUNC_GRID_HPP

#include "soltrunc/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace soltrunc {

// Closed axis-aligned box.
template <int Dim>
struct Box {
  Vec<Dim> lo = Vec<Dim>::Zero();
  Vec<Dim> hi = Vec<Dim>::Zero();

  Box() = default;
  Box(const Vec<Dim>& l, const Vec<Dim>& h) : lo(l), hi(h) {}
  static Box centered(const Vec<Dim>& c, double side) {
    return Box(c.array() - side / 2, c.array() + side / 2);
  }

  Vec<Dim> center() const { return (lo + hi) / 2; }
  Vec<Dim> extent() const { return hi - lo; }
  double diameter() const { return extent().norm(); }
  bool contains(const Vec<Dim>& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
  bool contains_open(const Vec<Dim>& x) const { return (x.array() > lo.array()).all() && (x.array() < hi.array()).all(); }
  // Closures share a point.
  bool touches(const Box& o) const { return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all(); }
  // Interiors overlap.
  bool overlaps(const Box& o) const { return (lo.array() < o.hi.array()).all() && (o.lo.array() < hi.array()).all(); }
  Box intersection(const Box& o) const { return Box(lo.cwiseMax(o.lo), hi.cwiseMin(o.hi)); }

  double distance(const Vec<Dim>& x) const {
    return (lo - x).cwiseMax(x - hi).cwiseMax(0.0).norm();
  }
  double distance(const Box& o) const {
    return (lo - o.hi).cwiseMax(o.lo - hi).cwiseMax(0.0).norm();
  }
  // Largest distance from x to a point of the box.
  double far_distance(const Vec<Dim>& x) const {
    return (x - lo).cwiseAbs().cwiseMax((x - hi).cwiseAbs()).norm();
  }
};

// Uniform node lattice: node k sits at origin + spacing * k, 0 <= k < extents.
template <int Dim>
struct Grid {
  Vec<Dim> origin = Vec<Dim>::Zero();
  double spacing = 1.0;
  std::array<int, Dim> extents{};

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int e : extents) n *= e;
    return n;
  }
  // Row-major flattening with the last axis fastest.
  std::int64_t flat(const std::array<int, Dim>& k) const {
    std::int64_t f = 0;
    for (int a = 0; a < Dim; ++a) f = f * extents[a] + k[a];
    return f;
  }
  std::array<int, Dim> unflat(std::int64_t f) const {
    std::array<int, Dim> k{};
    for (int a = Dim - 1; a >= 0; --a) {
      k[a] = static_cast<int>(f % extents[a]);
      f /= extents[a];
    }
    return k;
  }
  bool valid(const std::array<int, Dim>& k) const {
    for (int a = 0; a < Dim; ++a)
      if (k[a] < 0 || k[a] >= extents[a]) return false;
    return true;
  }
  Vec<Dim> node(const std::array<int, Dim>& k) const {
    Vec<Dim> x;
    for (int a = 0; a < Dim; ++a) x(a) = origin(a) + spacing * k[a];
    return x;
  }
  Vec<Dim> node(std::int64_t f) const { return node(unflat(f)); }
  Box<Dim> bounds() const {
    Vec<Dim> hi;
    for (int a = 0; a < Dim; ++a) hi(a) = origin(a) + spacing * (extents[a] - 1);
    return Box<Dim>(origin, hi);
  }
  // Cell volume h^Dim.
  double cell_volume() const { return std::pow(spacing, Dim); }
};

// Lattice covering the box with `resolution` nodes along its longest side.
template <int Dim>
Grid<Dim> grid_over(const Box<Dim>& box, int resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
  const Vec<Dim> ext = box.extent();
  if ((ext.array() <= 0).any()) throw ConfigError("domain box must have positive extent");
  Grid<Dim> g;
  g.origin = box.lo;
  g.spacing = ext.maxCoeff() / (resolution - 1);
  for (int a = 0; a < Dim; ++a)
    g.extents[a] = static_cast<int>(std::floor(ext(a) / g.spacing + 1e-9)) + 1;
  return g;
}

}  // namespace soltrunc

#endif
