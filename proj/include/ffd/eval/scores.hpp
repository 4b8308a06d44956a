#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/labels.hpp"

namespace ffd::eval {

using ProbabilityVector = std::array<double, kNumClasses>;

enum class Condition { fit, unfit };

inline constexpr std::string_view name(Condition c) { return c == Condition::fit ? "fit" : "unfit"; }

// One scored sub-sequence (or one subject, after aggregation).
struct ScoreRecord {
  std::string subject_id;
  ClassLabel true_label = ClassLabel::control;
  ProbabilityVector probabilities{};
};

inline bool on_simplex(const ProbabilityVector& p, double tol = 1e-6) {
  double sum = 0;
  for (double v : p) {
    if (!(v >= -tol && v <= 1 + tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Control subjects are fit; alcohol, drug and sleep are unfit.
inline constexpr Condition binary_map(ClassLabel label) {
  return label == ClassLabel::control ? Condition::fit : Condition::unfit;
}

// Unfit score: probability mass outside the control class.
inline double binary_score(const ScoreRecord& r) {
  return 1.0 - r.probabilities[code(ClassLabel::control)];
}

// Arg-max class; ties go to the lowest class code.
inline ClassLabel predicted_class(const ProbabilityVector& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k)
    if (p[k] > p[best]) best = k;
  return static_cast<ClassLabel>(best);
}

inline Condition predicted_condition(const ScoreRecord& r) {
  return binary_map(predicted_class(r.probabilities));
}

// Averages the probabilities of every record of a subject. Output is sorted
// by subject id.
inline std::vector<ScoreRecord> aggregate_by_subject(const std::vector<ScoreRecord>& records) {
  struct Acc {
    ClassLabel label;
    ProbabilityVector sum{};
    std::size_t n = 0;
  };
  std::map<std::string, Acc> by_subject;
  for (const auto& r : records) {
    auto [it, inserted] = by_subject.try_emplace(r.subject_id, Acc{r.true_label});
    if (!inserted && it->second.label != r.true_label)
      throw DataError("subject " + r.subject_id + " carries two different labels");
    for (std::size_t k = 0; k < kNumClasses; ++k) it->second.sum[k] += r.probabilities[k];
    ++it->second.n;
  }
  std::vector<ScoreRecord> out;
  for (const auto& [id, acc] : by_subject) {
    ScoreRecord r{id, acc.label, {}};
    for (std::size_t k = 0; k < kNumClasses; ++k)
      r.probabilities[k] = acc.sum[k] / static_cast<double>(acc.n);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ffd::eval
