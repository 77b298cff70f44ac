#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <conjlab/errors.hpp>
#include <conjlab/numeric.hpp>

namespace conjlab {

struct GridAxis {
  double lo;
  double hi;
  std::size_t count;

  double step() const { return (hi - lo) / static_cast<double>(count - 1); }

  double node(std::size_t i) const {
    return std::lerp(lo, hi, static_cast<double>(i) / static_cast<double>(count - 1));
  }
};

// Extended-real function sampled on a rectangular grid, row-major with the
// last axis fastest. Values are finite or the +inf sentinel; arithmetic
// never touches the sentinel.
class GriddedFunction {
 public:
  GriddedFunction(std::vector<GridAxis> axes, std::vector<double> values)
      : axes_(std::move(axes)), values_(std::move(values)) {
    if (axes_.empty()) throw InvalidGrid("no axes");
    std::size_t total = 1;
    for (const GridAxis& ax : axes_) {
      if (ax.count < 2) throw InvalidGrid("axis needs at least 2 nodes");
      if (!(ax.lo < ax.hi) || !is_finite(ax.lo) || !is_finite(ax.hi))
        throw InvalidGrid("axis bounds must be finite with lo < hi");
      total *= ax.count;
    }
    if (values_.size() != total)
      throw InvalidGrid("value count " + std::to_string(values_.size()) +
                        " does not match grid size " + std::to_string(total));
    for (double v : values_)
      if (std::isnan(v) || v == kNegInf)
        throw InvalidGrid("values must be finite or +inf");
  }

  static GriddedFunction sample(std::vector<GridAxis> axes,
                                const std::function<double(std::span<const double>)>& fn) {
    std::size_t total = 1;
    for (const GridAxis& ax : axes) total *= ax.count;
    std::vector<double> values(total);
    std::vector<double> point(axes.size());
    for (std::size_t flat = 0; flat < total; ++flat) {
      decode(axes, flat, point);
      values[flat] = fn(point);
    }
    return GriddedFunction(std::move(axes), std::move(values));
  }

  std::size_t dim() const { return axes_.size(); }
  const std::vector<GridAxis>& axes() const { return axes_; }
  const GridAxis& axis(std::size_t k) const { return axes_[k]; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t flat) const { return values_[flat]; }

  bool has_finite_value() const {
    return std::any_of(values_.begin(), values_.end(), [](double v) { return is_finite(v); });
  }

  void node_coords(std::size_t flat, std::span<double> out) const { decode(axes_, flat, out); }

  void multi_index(std::size_t flat, std::span<std::size_t> out) const {
    for (std::size_t k = axes_.size(); k-- > 0;) {
      out[k] = flat % axes_[k].count;
      flat /= axes_[k].count;
    }
  }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < axes_.size(); ++k) flat = flat * axes_[k].count + idx[k];
    return flat;
  }

  // Multilinear interpolation; any +inf corner makes the result +inf.
  double interpolate(std::span<const double> point) const {
    if (point.size() != axes_.size()) throw DimensionMismatch(point.size(), axes_.size());
    std::vector<std::size_t> base(axes_.size());
    std::vector<double> frac(axes_.size());
    for (std::size_t k = 0; k < axes_.size(); ++k) {
      const GridAxis& ax = axes_[k];
      double slack = 1e-12 * (ax.hi - ax.lo);
      if (point[k] < ax.lo - slack || point[k] > ax.hi + slack) throw OutOfBox(k, point[k]);
      double u = (point[k] - ax.lo) / ax.step();
      double cell = std::floor(u);
      cell = std::clamp(cell, 0.0, static_cast<double>(ax.count - 2));
      base[k] = static_cast<std::size_t>(cell);
      frac[k] = std::clamp(u - cell, 0.0, 1.0);
    }
    std::size_t corners = std::size_t{1} << axes_.size();
    KahanSum acc;
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t mask = 0; mask < corners; ++mask) {
      double weight = 1.0;
      for (std::size_t k = 0; k < axes_.size(); ++k) {
        bool high = (mask >> k) & 1u;
        idx[k] = base[k] + (high ? 1 : 0);
        weight *= high ? frac[k] : 1.0 - frac[k];
      }
      double v = values_[flat_index(idx)];
      if (!is_finite(v)) {
        if (weight > 0.0) return kPosInf;
        continue;
      }
      acc.add(weight * v);
    }
    return acc.value();
  }

 private:
  static void decode(const std::vector<GridAxis>& axes, std::size_t flat, std::span<double> out) {
    for (std::size_t k = axes.size(); k-- > 0;) {
      out[k] = axes[k].node(flat % axes[k].count);
      flat /= axes[k].count;
    }
  }

  std::vector<GridAxis> axes_;
  std::vector<double> values_;
};

// max over finite grid nodes x of <s,x> - f(x). The maximum over a finite
// node set is exact; +inf nodes never attain it.
inline double conjugate_at(const GriddedFunction& f, std::span<const double> s) {
  if (s.size() != f.dim()) throw DimensionMismatch(s.size(), f.dim());
  double best = kNegInf;
  std::vector<double> x(f.dim());
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    double v = f.value(flat);
    if (!is_finite(v)) continue;
    f.node_coords(flat, x);
    double cand = compensated_dot(s, x) - v;
    best = std::max(best, cand);
  }
  if (best == kNegInf) throw EmptyEffectiveDomain();
  return best;
}

// Reference transform: brute-force sweep over every dual node.
inline GriddedFunction conjugate_grid(const GriddedFunction& f, std::vector<GridAxis> dual_axes,
                                      int threads = 1) {
  if (dual_axes.size() != f.dim()) throw DimensionMismatch(dual_axes.size(), f.dim());
  if (!f.has_finite_value()) throw EmptyEffectiveDomain();
  std::size_t total = 1;
  for (const GridAxis& ax : dual_axes) total *= ax.count;

  // Decode primal coordinates once; the dual sweep is read-only over them.
  std::vector<double> coords(f.size() * f.dim());
  {
    std::vector<double> x(f.dim());
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
      f.node_coords(flat, x);
      std::copy(x.begin(), x.end(), coords.begin() + static_cast<std::ptrdiff_t>(flat * f.dim()));
    }
  }

  GriddedFunction dual_shape(dual_axes, std::vector<double>(total, 0.0));
  std::vector<double> result(total);
  parallel_for(total, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(f.dim());
    for (std::size_t flat = begin; flat < end; ++flat) {
      dual_shape.node_coords(flat, s);
      double best = kNegInf;
      for (std::size_t p = 0; p < f.size(); ++p) {
        double v = f.value(p);
        if (!is_finite(v)) continue;
        const double* x = coords.data() + p * f.dim();
        KahanSum dot;
        for (std::size_t k = 0; k < f.dim(); ++k) dot.add(s[k] * x[k]);
        best = std::max(best, dot.value() - v);
      }
      result[flat] = best;
    }
  });
  return GriddedFunction(std::move(dual_axes), std::move(result));
}

inline GriddedFunction biconjugate_grid(const GriddedFunction& f, std::vector<GridAxis> dual_axes,
                                        std::vector<GridAxis> primal_axes, int threads = 1) {
  GriddedFunction fstar = conjugate_grid(f, std::move(dual_axes), threads);
  return conjugate_grid(fstar, std::move(primal_axes), threads);
}

// Linear-time 1-D transform: lower convex hull, then a monotone argmax sweep
// over increasing dual nodes. Validated against conjugate_grid.
inline GriddedFunction conjugate_fast_1d(const GriddedFunction& f, GridAxis dual_axis) {
  if (f.dim() != 1) throw DimensionMismatch(f.dim(), 1);
  if (!f.has_finite_value()) throw EmptyEffectiveDomain();

  std::vector<std::pair<double, double>> hull;  // (x, f(x)) on the lower hull
  auto slope = [&](std::size_t i, std::size_t j) {
    return (hull[j].second - hull[i].second) / (hull[j].first - hull[i].first);
  };
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = f.value(i);
    if (!is_finite(v)) continue;
    hull.emplace_back(f.axis(0).node(i), v);
    while (hull.size() >= 3 &&
           slope(hull.size() - 3, hull.size() - 2) >= slope(hull.size() - 2, hull.size() - 1))
      hull.erase(hull.end() - 2);
  }

  std::vector<double> result(dual_axis.count);
  std::size_t j = 0;
  auto value_at = [&](std::size_t h, double s) { return s * hull[h].first - hull[h].second; };
  for (std::size_t i = 0; i < dual_axis.count; ++i) {
    double s = dual_axis.node(i);
    while (j + 1 < hull.size() && value_at(j + 1, s) >= value_at(j, s)) ++j;
    result[i] = value_at(j, s);
  }
  return GriddedFunction({dual_axis}, std::move(result));
}

// f(x) + f*(s) - <s,x> with multilinear interpolation off nodes.
inline double fenchel_young_gap(const GriddedFunction& f, const GriddedFunction& fstar,
                                std::span<const double> x, std::span<const double> s) {
  double fx = f.interpolate(x);
  double fs = fstar.interpolate(s);
  if (!is_finite(fx) || !is_finite(fs)) return kPosInf;
  return fx + fs - compensated_dot(s, x);
}

// Midpoint-convexity check along node-aligned segments: endpoint indices are
// parity-matched per axis so the midpoint is itself a grid node and no
// interpolation enters. Returns the worst excess of the midpoint value over
// the endpoint average, or -inf if no segment with three finite values came
// up.
inline double convexity_probe(const GriddedFunction& f, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = kNegInf;
  std::size_t d = f.dim();
  std::vector<std::size_t> a(d), b(d), m(d);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (std::size_t k = 0; k < d; ++k) {
      std::size_t count = f.axis(k).count;
      a[k] = rng.index(count);
      b[k] = rng.index(count);
      if ((a[k] + b[k]) % 2 != 0) {
        if (b[k] + 1 < count) {
          ++b[k];
        } else {
          --b[k];
        }
      }
      m[k] = (a[k] + b[k]) / 2;
    }
    double fa = f.value(f.flat_index(a));
    double fb = f.value(f.flat_index(b));
    double fm = f.value(f.flat_index(m));
    if (!is_finite(fa) || !is_finite(fb) || !is_finite(fm)) continue;
    worst = std::max(worst, fm - 0.5 * (fa + fb));
  }
  return worst;
}

// Range of finite-difference slopes along one axis; a conjugate's effective
// domain is the closure of this range, so it guides dual box choice.
inline std::pair<double, double> slope_range(const GriddedFunction& f, std::size_t axis) {
  if (axis >= f.dim()) throw DimensionMismatch(axis, f.dim());
  double lo = kPosInf, hi = kNegInf;
  std::size_t d = f.dim();
  std::vector<std::size_t> idx(d);
  double h = f.axis(axis).step();
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    f.multi_index(flat, idx);
    if (idx[axis] + 1 >= f.axis(axis).count) continue;
    double v0 = f.value(flat);
    ++idx[axis];
    double v1 = f.value(f.flat_index(idx));
    --idx[axis];
    if (!is_finite(v0) || !is_finite(v1)) continue;
    double s = (v1 - v0) / h;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (lo == kPosInf) return {0.0, 0.0};
  return {lo, hi};
}

}  // namespace conjlab
