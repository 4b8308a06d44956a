#pragma once

#include <cstddef>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ffd/eval/scores.hpp"

namespace ffd::eval {

// Per-condition summary with `condition` taken as the positive class.
// Ratios whose denominator is zero stay empty.
struct ConditionMetrics {
  Condition condition = Condition::fit;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> sensitivity, specificity, precision, f1, accuracy;
};

inline ConditionMetrics condition_metrics(
    const std::vector<std::pair<Condition, Condition>>& truth_and_prediction, Condition condition) {
  ConditionMetrics m;
  m.condition = condition;
  for (const auto& [truth, pred] : truth_and_prediction) {
    const bool actual = truth == condition, called = pred == condition;
    if (actual && called) ++m.tp;
    else if (actual) ++m.fn;
    else if (called) ++m.fp;
    else ++m.tn;
  }
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
  if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0)
    m.f1 = 2 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
  return m;
}

// Predictions are arg-max over the four classes mapped to fit / unfit.
inline ConditionMetrics condition_metrics(const std::vector<ScoreRecord>& records, Condition condition) {
  std::vector<std::pair<Condition, Condition>> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) pairs.emplace_back(binary_map(r.true_label), predicted_condition(r));
  return condition_metrics(pairs, condition);
}

// Cond / Sensitivity / Specificity / F1-Score / Accuracy, in percent.
inline std::string render_condition_table(const std::vector<ConditionMetrics>& rows) {
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << 100.0 * *v;
    return os.str();
  };
  std::ostringstream os;
  os << "Cond,Sensitivity (%),Specificity (%),F1-Score (%),Accuracy (%)\n";
  for (const auto& m : rows) {
    std::string cond(name(m.condition));
    cond[0] = static_cast<char>(std::toupper(cond[0]));
    os << cond << ',' << pct(m.sensitivity) << ',' << pct(m.specificity) << ',' << pct(m.f1)
       << ',' << pct(m.accuracy) << '\n';
  }
  return os.str();
}

}  // namespace ffd::eval
