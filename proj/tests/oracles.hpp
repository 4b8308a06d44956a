#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "ffd/core/tensor.hpp"

namespace ffd::test {

// Layer tables as printed in the paper, transcribed independently of the
// library. Shapes drop the batch axis.
struct PaperRow {
  const char* type;
  Shape shape;
  std::size_t parameters;
};

inline const std::vector<PaperRow>& paper_cnn_table() {
  static const std::vector<PaperRow> rows = {
      {"InputLayer", {140, 210, 3}, 0},
      {"Conv2D", {140, 210, 64}, 1792},
      {"BatchNormalization", {140, 210, 64}, 256},
      {"MaxPool2D", {70, 105, 64}, 0},
      {"Conv2D", {70, 105, 128}, 73856},
      {"BatchNormalization", {70, 105, 128}, 512},
      {"MaxPool2D", {35, 53, 128}, 0},
      {"Conv2D", {35, 53, 256}, 295168},
      {"Conv2D", {35, 53, 256}, 590080},
      {"BatchNormalization", {35, 53, 256}, 1024},
      {"MaxPool2D", {18, 27, 256}, 0},
      {"Conv2D", {18, 27, 512}, 1180160},
      {"Conv2D", {18, 27, 512}, 2359808},
      {"Conv2D", {18, 27, 512}, 2359808},
      {"BatchNormalization", {18, 27, 512}, 2048},
      {"MaxPool2D", {9, 14, 512}, 0},
      {"Flatten", {64512}, 0},
  };
  return rows;
}

inline const std::vector<PaperRow>& paper_head_table() {
  static const std::vector<PaperRow> rows = {
      {"LSTM", {32}, 8261760},     {"LSTM", {32}, 8320},      {"Dense", {1024}, 33792},
      {"BatchNormalization", {1024}, 4096}, {"Dropout", {1024}, 0}, {"Dense", {512}, 524800},
      {"Dropout", {512}, 0},       {"Dense", {64}, 32832},    {"Dropout", {64}, 0},
      {"Dense", {4}, 130},
  };
  return rows;
}

// Row 10 of the head table as printed versus (64 + 1) * 4.
inline constexpr std::size_t kPrintedClassifierParams = 130;
inline constexpr std::size_t kClassifierParams = (64 + 1) * 4;

// Rates at threshold t by direct counting (score >= t is positive).
struct SweepPoint {
  double threshold;
  double fpr;
  double fnr;
};

inline SweepPoint count_rates(const std::vector<double>& pos, const std::vector<double>& neg, double t) {
  std::size_t fp = 0, fn = 0;
  for (double v : neg) fp += v >= t;
  for (double v : pos) fn += v < t;
  return {t, static_cast<double>(fp) / static_cast<double>(neg.size()),
          static_cast<double>(fn) / static_cast<double>(pos.size())};
}

// Every distinct operating regime: below all scores, midpoints of adjacent
// unique scores, above all scores.
inline std::vector<SweepPoint> exhaustive_sweep(const std::vector<double>& pos,
                                                const std::vector<double>& neg) {
  std::vector<double> all(pos);
  all.insert(all.end(), neg.begin(), neg.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> ts = {all.front() - 1.0};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) ts.push_back(0.5 * (all[i] + all[i + 1]));
  ts.push_back(all.back() + 1.0);
  std::vector<SweepPoint> out;
  for (double t : ts) out.push_back(count_rates(pos, neg, t));
  return out;
}

// EER value of the piecewise-linear (FPR, FNR) path through the sweep.
inline double oracle_eer(const std::vector<SweepPoint>& sweep) {
  const auto& first = sweep.front();
  if (first.fpr - first.fnr <= 0) return first.fpr;
  for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
    const double d0 = sweep[i].fpr - sweep[i].fnr;
    const double d1 = sweep[i + 1].fpr - sweep[i + 1].fnr;
    if (d1 == 0) return sweep[i + 1].fpr;
    if (d1 < 0) {
      const double a = d0 / (d0 - d1);
      return sweep[i].fpr + a * (sweep[i + 1].fpr - sweep[i].fpr);
    }
  }
  return sweep.back().fpr;
}

// Lowest FNR among all thresholds whose FPR stays within the target.
inline double oracle_fnr_at_fpr(const std::vector<SweepPoint>& sweep, double target) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : sweep)
    if (p.fpr <= target + 1e-12) best = std::min(best, p.fnr);
  return best;
}

// Random score set; one in three sets is quantised to force ties.
struct ScoreSet {
  std::vector<double> pos, neg;
};

inline ScoreSet random_score_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(1, 500);
  std::uniform_int_distribution<int> kind(0, 2);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::uniform_real_distribution<double> shift(-0.2, 0.4);
  ScoreSet s;
  const std::size_t np = size(rng), nn = size(rng);
  const int k = kind(rng);
  const double d = shift(rng);
  auto draw = [&](double centre) {
    double v = std::clamp(centre + noise(rng), 0.0, 1.0);
    if (k == 0) v = std::round(v * 20) / 20;
    return v;
  };
  for (std::size_t i = 0; i < np; ++i) s.pos.push_back(draw(0.5 + d / 2));
  for (std::size_t i = 0; i < nn; ++i) s.neg.push_back(draw(0.5 - d / 2));
  return s;
}

}  // namespace ffd::test
