#pragma once

#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/eval/scores.hpp"

namespace ffd::eval {

enum class ClassMode { binary, four_class };

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (auto c : row) n += c;
    return n;
  }

  std::size_t row_total(std::size_t r) const {
    std::size_t n = 0;
    for (auto c : counts.at(r)) n += c;
    return n;
  }

  // Row-normalised percentages. A class with no items gets an all-zero row.
  std::vector<std::vector<double>> percent() const {
    std::vector<std::vector<double>> out(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r) {
      const auto n = row_total(r);
      out[r].resize(counts[r].size(), 0.0);
      if (n == 0) continue;
      for (std::size_t c = 0; c < counts[r].size(); ++c)
        out[r][c] = 100.0 * static_cast<double>(counts[r][c]) / static_cast<double>(n);
    }
    return out;
  }

  // Percentage grid plus the item count of every row.
  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "true\\predicted";
    for (const auto& c : classes) os << ',' << c;
    os << ",n\n";
    const auto pct = percent();
    for (std::size_t r = 0; r < classes.size(); ++r) {
      os << classes[r];
      for (double v : pct[r]) os << ',' << v;
      os << ',' << row_total(r) << '\n';
    }
    return os.str();
  }
};

namespace detail {

inline ConfusionMatrix empty_matrix(ClassMode mode) {
  ConfusionMatrix cm;
  if (mode == ClassMode::binary) {
    cm.classes = {std::string(name(Condition::fit)), std::string(name(Condition::unfit))};
  } else {
    for (auto l : kAllLabels) cm.classes.emplace_back(name(l));
  }
  cm.counts.assign(cm.classes.size(), std::vector<std::size_t>(cm.classes.size(), 0));
  return cm;
}

}  // namespace detail

// Four-class: arg-max. Binary: arg-max over the four classes, then mapped to
// fit / unfit.
inline ConfusionMatrix confusion_matrix(const std::vector<ScoreRecord>& records, ClassMode mode) {
  if (records.empty()) throw InvalidArgument("confusion matrix of an empty record stream");
  auto cm = detail::empty_matrix(mode);
  for (const auto& r : records) {
    const auto pred = predicted_class(r.probabilities);
    if (mode == ClassMode::four_class)
      ++cm.counts[code(r.true_label)][code(pred)];
    else
      ++cm.counts[static_cast<int>(binary_map(r.true_label))][static_cast<int>(binary_map(pred))];
  }
  return cm;
}

// Binary matrix from the unfit score: score >= threshold predicts unfit.
inline ConfusionMatrix confusion_matrix_at_threshold(const std::vector<ScoreRecord>& records,
                                                     double threshold) {
  if (records.empty()) throw InvalidArgument("confusion matrix of an empty record stream");
  auto cm = detail::empty_matrix(ClassMode::binary);
  for (const auto& r : records) {
    const auto pred = binary_score(r) >= threshold ? Condition::unfit : Condition::fit;
    ++cm.counts[static_cast<int>(binary_map(r.true_label))][static_cast<int>(pred)];
  }
  return cm;
}

}  // namespace ffd::eval
