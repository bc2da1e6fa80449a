#include "soltrunc/whitney.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>

#include "soltrunc/quadrature.hpp"

namespace soltrunc {

template <int Dim>
Vec<Dim> BallBadSet<Dim>::nearest_good_point(const Box<Dim>& q) const {
  // Corner of q farthest from the centre, pushed out radially to the sphere.
  Vec<Dim> far;
  for (int a = 0; a < Dim; ++a)
    far(a) = std::abs(q.lo(a) - c_(a)) >= std::abs(q.hi(a) - c_(a)) ? q.lo(a) : q.hi(a);
  Vec<Dim> dir = far - c_;
  if (dir.norm() == 0) dir = Vec<Dim>::UnitX();
  return c_ + r_ * (1 + 1e-12) * dir.normalized();
}

template <int Dim>
Box<Dim> HalfSpaceBadSet<Dim>::root() const {
  return Box<Dim>(window_.lo, window_.lo.array() + window_.extent().maxCoeff());
}

template <int Dim>
double HalfSpaceBadSet<Dim>::distance(const Box<Dim>& q) const {
  double m = q.lo(0) - offset_;
  for (int a = 0; a < Dim; ++a) m = std::min({m, q.lo(a) - window_.lo(a), window_.hi(a) - q.hi(a)});
  return std::max(0.0, m);
}

template <int Dim>
bool HalfSpaceBadSet<Dim>::meets(const Box<Dim>& q) const {
  if (!q.overlaps(window_)) return false;
  return q.hi(0) > offset_ && window_.hi(0) > offset_;
}

template <int Dim>
Vec<Dim> HalfSpaceBadSet<Dim>::nearest_good_point(const Box<Dim>& q) const {
  const Vec<Dim> c = q.center();
  Vec<Dim> best = c;
  best(0) = offset_;
  double gap = q.lo(0) - offset_;
  for (int a = 0; a < Dim; ++a) {
    if (q.lo(a) - window_.lo(a) < gap) {
      gap = q.lo(a) - window_.lo(a);
      best = c;
      best(a) = window_.lo(a);
    }
    if (window_.hi(a) - q.hi(a) < gap) {
      gap = window_.hi(a) - q.hi(a);
      best = c;
      best(a) = window_.hi(a);
    }
  }
  return best;
}

template <int Dim>
VoxelBadSet<Dim>::VoxelBadSet(std::shared_ptr<const GoodSet<Dim>> good, double min_side)
    : good_(std::move(good)), min_side_(min_side > 0 ? min_side : good_->grid.spacing / 2) {
  const auto& g = good_->grid;
  const auto total = g.size();
  for (std::int64_t n = 0; n < total; ++n) {
    if (good_->is_bad_node(n)) continue;
    const auto k = g.unflat(n);
    bool frontier = false;
    int combos = 1;
    for (int a = 0; a < Dim; ++a) combos *= 3;
    for (int c = 0; c < combos && !frontier; ++c) {
      auto m = k;
      int rest = c;
      for (int a = 0; a < Dim; ++a) {
        m[a] += rest % 3 - 1;
        rest /= 3;
      }
      if (g.valid(m) && good_->is_bad_node(g.flat(m))) frontier = true;
    }
    if (frontier) {
      frontier_.push_back(good_->voxel(n));
      frontier_nodes_.push_back(n);
    }
  }
  constexpr int bucket = 4;
  std::unordered_map<std::int64_t, int> slot;
  for (std::size_t f = 0; f < frontier_nodes_.size(); ++f) {
    const auto k = g.unflat(frontier_nodes_[f]);
    std::int64_t key = 0;
    for (int a = 0; a < Dim; ++a) key = key * (g.extents[a] / bucket + 1) + k[a] / bucket;
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, static_cast<int>(bucket_box_.size())).first;
      bucket_box_.push_back(frontier_[f]);
      bucket_members_.emplace_back();
    }
    auto& b = bucket_box_[static_cast<std::size_t>(it->second)];
    b.lo = b.lo.cwiseMin(frontier_[f].lo);
    b.hi = b.hi.cwiseMax(frontier_[f].hi);
    bucket_members_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(f));
  }
  // Summed-volume table with a zero border.
  std::array<int, Dim> ext{};
  std::int64_t size = 1;
  for (int a = 0; a < Dim; ++a) {
    ext[a] = g.extents[a] + 1;
    size *= ext[a];
  }
  prefix_.assign(static_cast<std::size_t>(size), 0);
  auto flat = [&](const std::array<int, Dim>& k) {
    std::int64_t f = 0;
    for (int a = 0; a < Dim; ++a) f = f * ext[a] + k[a];
    return static_cast<std::size_t>(f);
  };
  for (std::int64_t n = 0; n < total; ++n) {
    auto k = g.unflat(n);
    for (auto& v : k) ++v;
    prefix_[flat(k)] = good_->is_bad_node(n) ? 1 : 0;
  }
  for (int axis = 0; axis < Dim; ++axis)
    for (std::int64_t f = 0; f < size; ++f) {
      std::array<int, Dim> k{};
      std::int64_t rest = f;
      for (int a = Dim - 1; a >= 0; --a) {
        k[a] = static_cast<int>(rest % ext[a]);
        rest /= ext[a];
      }
      if (k[axis] == 0) continue;
      auto prev = k;
      --prev[axis];
      prefix_[static_cast<std::size_t>(f)] += prefix_[flat(prev)];
    }
}

template <int Dim>
std::int64_t VoxelBadSet<Dim>::bad_in(const std::array<int, Dim>& lo, const std::array<int, Dim>& hi) const {
  const auto& g = good_->grid;
  std::int64_t sum = 0;
  for (int c = 0; c < (1 << Dim); ++c) {
    std::int64_t f = 0;
    int sign = 1;
    for (int a = 0; a < Dim; ++a) {
      const bool upper = (c >> a) & 1;
      const int idx = upper ? hi[a] + 1 : lo[a];
      if (!upper) sign = -sign;
      f = f * (g.extents[a] + 1) + idx;
    }
    sum += sign * prefix_[static_cast<std::size_t>(f)];
  }
  return sum;
}

template <int Dim>
Box<Dim> VoxelBadSet<Dim>::root() const {
  const Box<Dim> b = good_->block();
  int n = 0;
  for (int e : good_->grid.extents) n = std::max(n, e);
  double side = good_->grid.spacing;
  while (side < n * good_->grid.spacing) side *= 2;
  return Box<Dim>(b.lo, b.lo.array() + side);
}

template <int Dim>
bool VoxelBadSet<Dim>::meets(const Box<Dim>& q) const {
  const auto& g = good_->grid;
  const Box<Dim> b = good_->block();
  std::array<int, Dim> lo{}, hi{};
  for (int a = 0; a < Dim; ++a) {
    if (!(q.lo(a) < q.hi(a))) return false;
    const double s0 = (q.lo(a) - b.lo(a)) / g.spacing;
    const double s1 = (q.hi(a) - b.lo(a)) / g.spacing;
    lo[a] = std::max(0, static_cast<int>(std::floor(s0)));
    hi[a] = std::min(g.extents[a] - 1, static_cast<int>(std::ceil(s1)) - 1);
    if (lo[a] > hi[a]) return false;
  }
  return bad_in(lo, hi) > 0;
}

template <int Dim>
double VoxelBadSet<Dim>::distance(const Box<Dim>& q) const {
  const bool point = (q.lo.array() == q.hi.array()).all();
  if (point ? good_->indicator(q.lo) : !meets(q)) return 0.0;
  const Box<Dim> b = good_->block();
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < Dim; ++a) best = std::min({best, q.lo(a) - b.lo(a), b.hi(a) - q.hi(a)});
  best = std::max(best, 0.0);
  double best2 = best * best;
  auto gap2 = [&](const Box<Dim>& v) {
    double d2 = 0;
    for (int a = 0; a < Dim; ++a) {
      const double gap = std::max({0.0, v.lo(a) - q.hi(a), q.lo(a) - v.hi(a)});
      d2 += gap * gap;
    }
    return d2;
  };
  std::vector<std::pair<double, int>> order;
  order.reserve(bucket_box_.size());
  for (std::size_t b = 0; b < bucket_box_.size(); ++b) {
    const double lb = gap2(bucket_box_[b]);
    if (lb < best2) order.emplace_back(lb, static_cast<int>(b));
  }
  std::sort(order.begin(), order.end());
  for (const auto& [lb, b] : order) {
    if (lb >= best2) break;
    for (int f : bucket_members_[static_cast<std::size_t>(b)]) best2 = std::min(best2, gap2(frontier_[static_cast<std::size_t>(f)]));
  }
  return std::sqrt(best2);
}

template <int Dim>
Vec<Dim> VoxelBadSet<Dim>::nearest_good_point(const Box<Dim>& q) const {
  if (frontier_nodes_.empty()) {
    // No good node next to a bad one: fall back to any good node.
    const auto total = good_->grid.size();
    double best = std::numeric_limits<double>::infinity();
    std::int64_t arg = -1;
    for (std::int64_t n = 0; n < total; ++n)
      if (!good_->is_bad_node(n)) {
        const double d = q.distance(good_->grid.node(n));
        if (d < best) {
          best = d;
          arg = n;
        }
      }
    if (arg < 0) throw ConstructionError("good set has no good grid node");
    return good_->grid.node(arg);
  }
  std::vector<std::pair<double, int>> order;
  for (std::size_t b = 0; b < bucket_box_.size(); ++b) order.emplace_back(q.distance(bucket_box_[b]), static_cast<int>(b));
  std::sort(order.begin(), order.end());
  double best = std::numeric_limits<double>::infinity();
  std::int64_t arg = -1;
  for (const auto& [lb, b] : order) {
    if (lb > best) break;
    for (int f : bucket_members_[static_cast<std::size_t>(b)]) {
      const auto n = frontier_nodes_[static_cast<std::size_t>(f)];
      const double d = q.distance(good_->grid.node(n));
      if (d < best || (d == best && n < arg)) {
        best = d;
        arg = n;
      }
    }
  }
  return good_->grid.node(arg);
}

template <int Dim>
Box<Dim> OracleBadSet<Dim>::root() const {
  return Box<Dim>(bounds_.lo, bounds_.lo.array() + bounds_.extent().maxCoeff());
}

template <int Dim>
double OracleBadSet<Dim>::distance(const Box<Dim>& q) const {
  if (!bounds_.contains_open(q.lo) || !bounds_.contains_open(q.hi)) return 0.0;
  return std::max(0.0, d_(q.center()) - q.diameter() / 2);
}

template <int Dim>
bool OracleBadSet<Dim>::meets(const Box<Dim>& q) const {
  if (!q.overlaps(bounds_)) return false;
  const Box<Dim> c = q.intersection(bounds_);
  if (d_(c.center()) > 0) return true;
  for (int k = 0; k < (1 << Dim); ++k) {
    Vec<Dim> p;
    for (int a = 0; a < Dim; ++a) p(a) = c.lo(a) + ((k >> a) & 1 ? 0.99 : 0.01) * (c.hi(a) - c.lo(a));
    if (d_(p) > 0) return true;
  }
  return false;
}

template <int Dim>
Vec<Dim> OracleBadSet<Dim>::nearest_good_point(const Box<Dim>& q) const {
  const Vec<Dim> c = q.center();
  const double r = distance(c);
  if (r == 0) return c;
  Vec<Dim> best = c;
  double best_len = std::numeric_limits<double>::infinity();
  for (int a = 0; a < Dim; ++a)
    for (int s = -1; s <= 1; s += 2)
      for (double t = r; t <= 4 * r + q.diameter(); t += r / 4) {
        Vec<Dim> p = c;
        p(a) += s * t;
        if (distance(p) == 0) {
          if (t < best_len) {
            best_len = t;
            best = p;
          }
          break;
        }
      }
  return best;
}

template <int Dim>
void check_distance_oracle(const BadSetGeometry<Dim>& g, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Box<Dim> r = g.root();
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto draw = [&] {
    Vec<Dim> p;
    for (int a = 0; a < Dim; ++a) p(a) = r.lo(a) + U(rng) * (r.hi(a) - r.lo(a));
    return p;
  };
  for (int k = 0; k < pairs; ++k) {
    const Vec<Dim> p = draw(), q = draw();
    const double dp = g.distance(p), dq = g.distance(q);
    if (!(dp >= 0) || !(dq >= 0)) throw ConstructionError("distance oracle returned a negative or NaN value");
    if (std::abs(dp - dq) > (p - q).norm() * (1 + 1e-9) + 1e-12)
      throw ConstructionError("distance oracle is not 1-Lipschitz");
  }
}

template <int Dim>
WhitneyDecomposition<Dim> whitney_decompose(const BadSetGeometry<Dim>& bad, const WhitneyOptions& options) {
  WhitneyDecomposition<Dim> out;
  out.root = bad.root();
  out.min_side = options.min_side > 0 ? options.min_side : bad.default_min_side();
  const double root_side = out.root.extent().maxCoeff();
  if (!(out.min_side > 0)) throw ConfigError("minimum cube side must be positive");
  std::vector<DyadicCube<Dim>> stack;
  DyadicCube<Dim> root;
  root.corner = out.root.lo;
  root.side = root_side;
  stack.push_back(root);
  while (!stack.empty()) {
    const DyadicCube<Dim> q = stack.back();
    stack.pop_back();
    const Box<Dim> b = q.box();
    if (!bad.meets(b)) continue;
    if (bad.distance(b) >= q.side) {
      out.cubes.push_back(q);
      if (static_cast<int>(out.cubes.size()) > options.max_cubes)
        throw ConstructionError("Whitney decomposition exceeds the cube budget");
      continue;
    }
    const double child_side = q.side / 2;
    if (child_side < out.min_side * (1 - 1e-12)) {
      ++out.dropped;
      continue;
    }
    for (int c = (1 << Dim) - 1; c >= 0; --c) {
      DyadicCube<Dim> child;
      child.level = q.level + 1;
      child.side = child_side;
      for (int a = 0; a < Dim; ++a) {
        const int bit = (c >> a) & 1;
        child.index[a] = 2 * q.index[a] + bit;
        child.corner(a) = out.root.lo(a) + static_cast<double>(child.index[a]) * child_side;
      }
      stack.push_back(child);
    }
  }
  std::sort(out.cubes.begin(), out.cubes.end());
  return out;
}

template <int Dim>
CubeIndex<Dim>::CubeIndex(const std::vector<DyadicCube<Dim>>& cubes, const Box<Dim>& root) : root_(root) {
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    Key k{cubes[i].level, cubes[i].index};
    if (!leaves_.emplace(k, static_cast<int>(i)).second) ++nested_;
  }
  for (const auto& c : cubes) {
    Key k{c.level, c.index};
    while (k.level > 0) {
      --k.level;
      for (auto& v : k.index) v >>= 1;
      if (leaves_.count(k)) ++nested_;
      internal_.insert(k);
    }
  }
}

template <int Dim>
Box<Dim> CubeIndex<Dim>::box_of(const Key& k) {
  const double side = std::ldexp(1.0, -k.level);
  Vec<Dim> lo;
  for (int a = 0; a < Dim; ++a) lo(a) = static_cast<double>(k.index[a]) * side;
  return Box<Dim>(lo, lo.array() + side);
}

template <int Dim>
template <typename Pred>
void CubeIndex<Dim>::visit(double grow, const Pred& pred, const std::function<void(int)>& emit) const {
  if (leaves_.empty()) return;
  std::vector<Key> stack{Key{0, {}}};
  while (!stack.empty()) {
    const Key k = stack.back();
    stack.pop_back();
    Box<Dim> b = box_of(k);
    const double g = grow * b.extent()(0);
    b.lo.array() -= g;
    b.hi.array() += g;
    if (!pred(b)) continue;
    auto leaf = leaves_.find(k);
    if (leaf != leaves_.end()) emit(leaf->second);
    if (!internal_.count(k)) continue;
    for (int c = (1 << Dim) - 1; c >= 0; --c) {
      Key child{k.level + 1, {}};
      for (int a = 0; a < Dim; ++a) child.index[a] = 2 * k.index[a] + ((c >> a) & 1);
      stack.push_back(child);
    }
  }
}

template <int Dim>
std::vector<int> CubeIndex<Dim>::touching(const Box<Dim>& b, double grow) const {
  std::vector<int> out;
  visit(grow, [&](const Box<Dim>& x) { return x.touches(b); }, [&](int i) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

template <int Dim>
std::vector<int> CubeIndex<Dim>::containing_open(const Vec<Dim>& y, double grow) const {
  std::vector<int> out;
  visit(grow, [&](const Box<Dim>& x) { return x.contains_open(y); }, [&](int i) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

template <int Dim>
std::vector<std::pair<int, int>> WhitneyCover<Dim>::overlapping_pairs() const {
  std::vector<std::vector<int>> partner(cubes.size());
  parallel_for(static_cast<std::int64_t>(cubes.size()), [&](std::int64_t i) {
    const Box<Dim> e = unit_enlarged(static_cast<std::size_t>(i));
    index.visit(epsilon / 2, [&](const Box<Dim>& x) { return x.overlaps(e); },
                [&](int j) {
                  if (j > i) partner[static_cast<std::size_t>(i)].push_back(j);
                });
    std::sort(partner[static_cast<std::size_t>(i)].begin(), partner[static_cast<std::size_t>(i)].end());
  });
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < cubes.size(); ++i)
    for (int j : partner[i]) out.emplace_back(static_cast<int>(i), j);
  return out;
}

template <int Dim>
std::vector<std::array<int, 3>> WhitneyCover<Dim>::overlapping_triples() const {
  const auto pairs = overlapping_pairs();
  std::vector<std::vector<int>> up(cubes.size());
  for (const auto& p : pairs) up[static_cast<std::size_t>(p.first)].push_back(p.second);
  std::vector<std::array<int, 3>> out;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const auto& ui = up[i];
    for (std::size_t a = 0; a < ui.size(); ++a) {
      const int j = ui[a];
      const Box<Dim> ij = unit_enlarged(i).intersection(unit_enlarged(static_cast<std::size_t>(j)));
      const auto& uj = up[static_cast<std::size_t>(j)];
      for (std::size_t b = a + 1; b < ui.size(); ++b) {
        const int k = ui[b];
        if (!std::binary_search(uj.begin(), uj.end(), k)) continue;
        if (ij.overlaps(unit_enlarged(static_cast<std::size_t>(k)))) out.push_back({static_cast<int>(i), j, k});
      }
    }
  }
  return out;
}

template <int Dim>
WhitneyCover<Dim> build_cover(std::shared_ptr<const BadSetGeometry<Dim>> bad, double epsilon,
                              const WhitneyOptions& options) {
  if (!(epsilon > 0 && epsilon < max_epsilon)) throw ConfigError("epsilon out of range (0, 1/32)");
  auto dec = whitney_decompose(*bad, options);
  WhitneyCover<Dim> cover;
  cover.cubes = std::move(dec.cubes);
  cover.epsilon = epsilon;
  cover.root = dec.root;
  cover.min_side = dec.min_side;
  cover.dropped = dec.dropped;
  cover.geometry = bad;
  cover.index = CubeIndex<Dim>(cover.cubes, cover.root);
  const auto n = static_cast<std::int64_t>(cover.cubes.size());
  cover.distances.resize(cover.cubes.size());
  cover.projections.resize(cover.cubes.size());
  cover.neighbours.resize(cover.cubes.size());
  parallel_for(n, [&](std::int64_t i) {
    const auto s = static_cast<std::size_t>(i);
    const Box<Dim> b = cover.core(s);
    cover.distances[s] = bad->distance(b);
    cover.projections[s] = bad->nearest_good_point(b);
    for (int j : cover.index.touching(cover.unit_core(s)))
      if (j != i) cover.neighbours[s].push_back(j);
  });
  return cover;
}

template <int Dim>
std::vector<Vec<Dim>> select_projection_points(const std::vector<DyadicCube<Dim>>& cubes, const GoodSet<Dim>& good) {
  std::vector<std::int64_t> candidates;
  const auto& g = good.grid;
  for (std::int64_t n = 0; n < g.size(); ++n)
    if (!good.is_bad_node(n)) candidates.push_back(n);
  if (candidates.empty()) throw ConstructionError("good set has no good grid node");
  std::vector<Vec<Dim>> out(cubes.size());
  parallel_for(static_cast<std::int64_t>(cubes.size()), [&](std::int64_t i) {
    const Box<Dim> b = cubes[static_cast<std::size_t>(i)].box();
    double best = std::numeric_limits<double>::infinity();
    std::int64_t arg = candidates.front();
    for (auto n : candidates) {
      const double d = b.distance(g.node(n));
      if (d < best) {
        best = d;
        arg = n;
      }
    }
    out[static_cast<std::size_t>(i)] = g.node(arg);
  });
  return out;
}

template <int Dim>
CoverInvariantReport check_cover_invariants(const WhitneyCover<Dim>& cover, const std::vector<Vec<Dim>>& samples,
                                            double projection_slack, int overlap_bound) {
  CoverInvariantReport r;
  r.cubes = static_cast<std::int64_t>(cover.size());
  r.samples = static_cast<std::int64_t>(samples.size());
  r.disjointness = cover.index.nested_pairs();
  r.min_distance_ratio = std::numeric_limits<double>::infinity();
  const auto& geo = *cover.geometry;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const double l = cover.cubes[i].side, d = cover.distances[i];
    r.min_distance_ratio = std::min(r.min_distance_ratio, d / l);
    r.max_distance_ratio = std::max(r.max_distance_ratio, d / l);
    if (!(l <= 4 * d && d <= 4 * l)) ++r.distance_comparability;
    for (int j : cover.neighbours[i]) {
      const double lj = cover.cubes[static_cast<std::size_t>(j)].side;
      if (!(lj <= 4 * l && l <= 4 * lj)) ++r.neighbour_comparability;
      if (cover.unit_core(i).overlaps(cover.unit_core(static_cast<std::size_t>(j)))) ++r.disjointness;
    }
    const int nb = static_cast<int>(cover.neighbours[i].size());
    r.max_neighbours = std::max(r.max_neighbours, nb);
    if (nb > overlap_bound) ++r.bounded_overlap;
    const Vec<Dim>& z = cover.projections[i];
    if (geo.is_bad(z) || cover.core(i).distance(z) > 4 * d + projection_slack) ++r.projection;
    const Box<Dim> e = cover.enlarged(i);
    const double le = (1 + cover.epsilon) * l, de = geo.distance(e);
    if (!(le <= 5 * de && de <= 5 * le)) ++r.enlarged;
    for (int j : cover.index.touching(cover.unit_enlarged(i), cover.epsilon / 2)) {
      if (j == static_cast<int>(i)) continue;
      const double lj = cover.cubes[static_cast<std::size_t>(j)].side;
      if (!(lj <= 4 * l && l <= 4 * lj)) ++r.enlarged;
    }
  }
  if (cover.size() == 0) r.min_distance_ratio = 0;
  for (const auto& y : samples) {
    const Vec<Dim> uy = cover.index.to_unit(y);
    const auto in_core = cover.index.touching(Box<Dim>(uy, uy));
    const auto in_enlarged = cover.containing(y);
    if (in_core.empty() || in_enlarged.empty()) ++r.covering;
    r.max_multiplicity = std::max(r.max_multiplicity, static_cast<int>(in_enlarged.size()));
  }
  return r;
}

void write_cover_csv(const WhitneyCover<3>& cover, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "index,level,center_x,center_y,center_z,sidelength,dist_to_X,proj_x,proj_y,proj_z,neighbor_count\n");
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const Vec3 c = cover.cubes[i].center();
    const Vec3& z = cover.projections[i];
    std::fprintf(f, "%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", i, cover.cubes[i].level, c(0),
                 c(1), c(2), cover.cubes[i].side, cover.distances[i], z(0), z(1), z(2), cover.neighbours[i].size());
  }
  std::fclose(f);
}

template <int Dim>
PartitionSample<Dim> PartitionOfUnity<Dim>::evaluate(const Vec<Dim>& y) const {
  PartitionSample<Dim> s;
  const auto ids = cover_->containing(y);
  if (ids.empty()) {
    if (cover_->geometry && cover_->geometry->is_bad(y))
      throw CoverDefectError("no enlarged Whitney cube contains a bad-set point");
    return s;
  }
  const std::size_t m = ids.size();
  s.index = ids;
  s.value.resize(m);
  s.gradient.resize(m);
  s.hessian.resize(m);
  double Phi = 0;
  Vec<Dim> dPhi = Vec<Dim>::Zero();
  Mat<Dim> hPhi = Mat<Dim>::Zero();
  for (std::size_t k = 0; k < m; ++k) {
    const auto& c = cover_->cubes[static_cast<std::size_t>(ids[k])];
    cube_bump<Dim>(psi_, c.corner, c.side, y, s.value[k], s.gradient[k], s.hessian[k]);
    Phi += s.value[k];
    dPhi += s.gradient[k];
    hPhi += s.hessian[k];
  }
  if (!(Phi > 0)) throw CoverDefectError("partition denominator vanishes");
  for (std::size_t k = 0; k < m; ++k) {
    const double phi = s.value[k] / Phi;
    const Vec<Dim> g = (s.gradient[k] - phi * dPhi) / Phi;
    const Mat<Dim> H = (s.hessian[k] - g * dPhi.transpose() - dPhi * g.transpose() - phi * hPhi) / Phi;
    s.value[k] = phi;
    s.gradient[k] = g;
    s.hessian[k] = H;
  }
  return s;
}

template <int Dim>
DiscreteMeasure<Dim> mu_quadrature(const WhitneyCover<Dim>& cover, std::size_t i, int q) {
  if (q < 1) throw QuadratureError("measure rule order must be positive");
  if (i >= cover.size()) throw DomainError("cube index out of range");
  const auto g = gauss_legendre<double>(q);
  const auto& c = cover.cubes[i];
  const double half = c.side / 2;
  const Vec<Dim> lo = c.center().array() - half / 2;
  DiscreteMeasure<Dim> mu;
  std::int64_t total = 1;
  for (int a = 0; a < Dim; ++a) total *= q;
  for (std::int64_t f = 0; f < total; ++f) {
    Vec<Dim> x;
    double w = 1;
    std::int64_t rest = f;
    for (int a = Dim - 1; a >= 0; --a) {
      const int k = static_cast<int>(rest % q);
      rest /= q;
      x(a) = lo(a) + half * g.nodes[k];
      w *= g.weights[k];
    }
    mu.nodes.push_back(x);
    mu.weights.push_back(w);
  }
  return mu;
}

#define SOLTRUNC_INSTANTIATE(D)                                                                                  \
  template class BallBadSet<D>;                                                                                  \
  template class HalfSpaceBadSet<D>;                                                                             \
  template class VoxelBadSet<D>;                                                                                 \
  template class OracleBadSet<D>;                                                                                \
  template class CubeIndex<D>;                                                                                   \
  template struct WhitneyCover<D>;                                                                               \
  template class PartitionOfUnity<D>;                                                                            \
  template void check_distance_oracle(const BadSetGeometry<D>&, int, std::uint64_t);                             \
  template WhitneyDecomposition<D> whitney_decompose(const BadSetGeometry<D>&, const WhitneyOptions&);           \
  template WhitneyCover<D> build_cover(std::shared_ptr<const BadSetGeometry<D>>, double, const WhitneyOptions&); \
  template std::vector<Vec<D>> select_projection_points(const std::vector<DyadicCube<D>>&, const GoodSet<D>&);   \
  template CoverInvariantReport check_cover_invariants(const WhitneyCover<D>&, const std::vector<Vec<D>>&,      \
                                                       double, int);                                             \
  template DiscreteMeasure<D> mu_quadrature(const WhitneyCover<D>&, std::size_t, int);

SOLTRUNC_INSTANTIATE(2)
SOLTRUNC_INSTANTIATE(3)

}  // namespace soltrunc
