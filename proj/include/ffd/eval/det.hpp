#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"

namespace ffd::eval {

// A score is called positive when score >= threshold.
struct DetPoint {
  double threshold = 0;
  double fpr = 0;
  double fnr = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

// Points sorted by increasing threshold; FPR falls and FNR rises along it.
struct DetCurve {
  std::vector<DetPoint> points;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Thresholds are the sorted unique scores plus one sentinel just below the
// minimum (everything accepted) and one just above the maximum (nothing
// accepted).
inline DetCurve det_curve(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty())
    throw InvalidArgument("DET curve needs at least one positive and one negative score");
  std::vector<double> pos(positive.begin(), positive.end());
  std::vector<double> neg(negative.begin(), negative.end());
  for (double v : pos)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite positive score");
  for (double v : neg)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite negative score");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> thresholds;
  thresholds.reserve(pos.size() + neg.size() + 2);
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double lo = std::nextafter(thresholds.front(), -std::numeric_limits<double>::infinity());
  const double hi = std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity());
  thresholds.insert(thresholds.begin(), lo);
  thresholds.push_back(hi);

  DetCurve curve;
  curve.positives = pos.size();
  curve.negatives = neg.size();
  curve.points.reserve(thresholds.size());
  for (double t : thresholds) {
    DetPoint p;
    p.threshold = t;
    p.false_positives =
        static_cast<std::size_t>(neg.end() - std::lower_bound(neg.begin(), neg.end(), t));
    p.false_negatives =
        static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), t) - pos.begin());
    p.fpr = static_cast<double>(p.false_positives) / static_cast<double>(neg.size());
    p.fnr = static_cast<double>(p.false_negatives) / static_cast<double>(pos.size());
    curve.points.push_back(p);
  }
  return curve;
}

struct EerResult {
  double eer = 0;
  double threshold = 0;
};

// Finds where FPR - FNR changes sign and interpolates linearly between the two
// bracketing points. An exact crossing is returned as is.
inline EerResult eer(const DetCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2) throw InvalidArgument("EER needs a curve with at least two points");
  // Compare FP/neg against FN/pos without rounding.
  auto diff = [&](const DetPoint& p) {
    const auto a = static_cast<long double>(p.false_positives) * curve.positives;
    const auto b = static_cast<long double>(p.false_negatives) * curve.negatives;
    return a - b;
  };
  if (diff(pts.front()) <= 0) return {pts.front().fpr, pts.front().threshold};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto d1 = diff(pts[i + 1]);
    if (d1 == 0) return {pts[i + 1].fpr, pts[i + 1].threshold};
    if (d1 < 0) {
      const double d0 = pts[i].fpr - pts[i].fnr;
      const double e1 = pts[i + 1].fpr - pts[i + 1].fnr;
      const double a = d0 / (d0 - e1);
      return {pts[i].fpr + a * (pts[i + 1].fpr - pts[i].fpr),
              pts[i].threshold + a * (pts[i + 1].threshold - pts[i].threshold)};
    }
  }
  return {pts.back().fpr, pts.back().threshold};
}

// FNR10, FNR20 and FNR100 fix the FPR at 10 %, 5 % and 1 %.
struct OperatingPoint {
  std::string name;
  double target_fpr = 0;
  double threshold = 0;
  double fpr = 0;
  double fnr = 0;
  bool reachable = true;
};

inline double target_fpr_for(const std::string& point_name) {
  if (point_name == "FNR10") return 0.10;
  if (point_name == "FNR20") return 0.05;
  if (point_name == "FNR100") return 0.01;
  throw InvalidArgument("unknown operating point '" + point_name + "'");
}

inline const std::vector<std::string>& fixed_fpr_point_names() {
  static const std::vector<std::string> names = {"FNR10", "FNR20", "FNR100"};
  return names;
}

// Smallest threshold whose FPR does not exceed the target. If no point
// qualifies the strictest point is returned with reachable = false.
inline OperatingPoint fnr_at_fpr(const DetCurve& curve, double target_fpr,
                                 std::string point_name = {}) {
  if (curve.points.empty()) throw InvalidArgument("empty DET curve");
  OperatingPoint op;
  op.name = std::move(point_name);
  op.target_fpr = target_fpr;
  // Integer comparison: FP <= target * negatives.
  const double limit = target_fpr * static_cast<double>(curve.negatives) * (1 + 1e-12);
  for (const auto& p : curve.points) {
    if (static_cast<double>(p.false_positives) <= limit) {
      op.threshold = p.threshold, op.fpr = p.fpr, op.fnr = p.fnr;
      return op;
    }
  }
  const auto& last = curve.points.back();
  op.threshold = last.threshold, op.fpr = last.fpr, op.fnr = last.fnr;
  op.reachable = false;
  return op;
}

inline OperatingPoint fnr_at_fpr(const DetCurve& curve, const std::string& point_name) {
  return fnr_at_fpr(curve, target_fpr_for(point_name), point_name);
}

// Rates at an arbitrary threshold. Between two curve thresholds the rates
// equal those of the upper one.
inline DetPoint rates_at(const DetCurve& curve, double threshold) {
  if (curve.points.empty()) throw InvalidArgument("empty DET curve");
  auto it = std::lower_bound(curve.points.begin(), curve.points.end(), threshold,
                             [](const DetPoint& p, double t) { return p.threshold < t; });
  DetPoint out = it == curve.points.end() ? curve.points.back() : *it;
  out.threshold = threshold;
  return out;
}

}  // namespace ffd::eval
