#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"

namespace ffd::eval {

inline constexpr double kFallbackBandwidth = 1e-3;
inline constexpr std::size_t kKdeGridPoints = 512;

struct Bandwidth {
  double h = 0;
  bool fallback = false;
};

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// h = 0.9 * min(sd, IQR / 1.34) * n^(-1/5). A zero spread measure falls back to
// the other one; if both vanish h = 1e-3 and `fallback` is set.
inline Bandwidth silverman_bandwidth(std::span<const double> scores) {
  if (scores.size() < 2) throw InvalidArgument("bandwidth needs at least two scores");
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double mean = 0;
  for (double v : s) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const double iqr = (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.34;
  double spread = std::min(sd, iqr);
  if (!(spread > 0)) spread = std::max(sd, iqr);
  if (!(spread > 0)) return {kFallbackBandwidth, true};
  return {0.9 * spread * std::pow(n, -0.2), false};
}

inline double gaussian_kde_at(std::span<const double> scores, double h, double x) {
  const double norm = 1.0 / (static_cast<double>(scores.size()) * h * std::sqrt(2 * std::numbers::pi));
  double sum = 0;
  for (double v : scores) {
    const double u = (x - v) / h;
    sum += std::exp(-0.5 * u * u);
  }
  return sum * norm;
}

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0;
  bool fallback = false;
};

inline KdeCurve gaussian_kde(std::span<const double> scores, double lo = 0.0, double hi = 1.0,
                             std::size_t points = kKdeGridPoints) {
  if (points < 2 || !(hi > lo)) throw InvalidArgument("KDE grid needs >= 2 points and hi > lo");
  const auto bw = silverman_bandwidth(scores);
  KdeCurve k;
  k.bandwidth = bw.h;
  k.fallback = bw.fallback;
  k.grid.resize(points);
  k.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    k.grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    k.density[i] = gaussian_kde_at(scores, bw.h, k.grid[i]);
  }
  return k;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double area = 0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

}  // namespace ffd::eval
