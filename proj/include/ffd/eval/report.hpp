#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/eval/confusion.hpp"
#include "ffd/eval/det.hpp"
#include "ffd/eval/kde.hpp"
#include "ffd/eval/metrics.hpp"
#include "ffd/eval/scores.hpp"
#include "ffd/eval/svg.hpp"

namespace ffd::eval {

enum class KdeScale { linear, logarithmic };

struct KdeReport {
  std::vector<std::string> groups;
  std::vector<KdeCurve> curves;
  KdeScale scale = KdeScale::linear;
  std::optional<double> threshold;
  std::vector<std::string> warnings;

  std::string density_csv() const {
    std::ostringstream os;
    os << std::setprecision(10) << "score";
    for (const auto& g : groups) os << ',' << g;
    os << '\n';
    if (curves.empty()) return os.str();
    for (std::size_t i = 0; i < curves.front().grid.size(); ++i) {
      os << curves.front().grid[i];
      for (const auto& c : curves) os << ',' << c.density[i];
      os << '\n';
    }
    return os.str();
  }

  std::string svg() const {
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};
    double peak = 0;
    for (const auto& c : curves) peak = std::max(peak, *std::max_element(c.density.begin(), c.density.end()));
    SvgChart::Axis x{"score", 0.0, 1.0};
    x.ticks = {0, 0.2, 0.4, 0.6, 0.8, 1.0};
    SvgChart::Axis y{"density", 0.0, peak > 0 ? peak * 1.05 : 1.0};
    const bool log = scale == KdeScale::logarithmic;
    static constexpr double kFloor = 1e-4;
    if (log) {
      y.label = "density (log scale)";
      y.min = kFloor;
      y.max = std::max(peak * 2, 10 * kFloor);
      y.transform = [](double v) { return std::log10(std::max(v, kFloor)); };
      for (double t = kFloor; t <= y.max; t *= 10) y.ticks.push_back(t);
    } else {
      for (int i = 0; i <= 5; ++i) y.ticks.push_back(y.max * i / 5.0);
      y.tick_label = [](double v) {
        std::ostringstream os;
        os << std::setprecision(3) << v;
        return os.str();
      };
    }
    SvgChart chart(log ? "Score KDE (logarithmic)" : "Score KDE (linear)", x, y);
    for (std::size_t g = 0; g < curves.size(); ++g) {
      auto ys = curves[g].density;
      if (log)
        for (auto& v : ys) v = std::max(v, kFloor);
      chart.add_series(groups[g], curves[g].grid, ys, colours[g % 4]);
    }
    if (threshold) {
      std::ostringstream label;
      label << "th " << std::setprecision(4) << *threshold;
      chart.add_vertical_line(*threshold, label.str(), "2,3");
    }
    return chart.str();
  }
};

// Gaussian KDE per group on a 512-point grid over [0, 1].
inline KdeReport kde_report(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                            KdeScale scale, std::optional<double> threshold = std::nullopt) {
  KdeReport r;
  r.scale = scale;
  r.threshold = threshold;
  for (const auto& [group, scores] : groups) {
    if (scores.size() < 2)
      throw InvalidArgument("KDE group '" + group + "' needs at least two scores");
    r.groups.push_back(group);
    r.curves.push_back(gaussian_kde(scores));
    if (r.curves.back().fallback)
      r.warnings.push_back("group " + group + ": zero spread, bandwidth fell back to 1e-3");
  }
  return r;
}

// Which records form the DET negatives when analysing one unfit class.
enum class NegativeSet { control, all_other };

struct ReportOptions {
  ClassLabel positive_class = ClassLabel::sleep;
  NegativeSet negatives = NegativeSet::control;
};

struct EvalReport {
  ReportOptions options;
  std::size_t records = 0;
  ConfusionMatrix binary, four_class, binary_subjects, four_class_subjects;
  std::vector<double> positive_scores, negative_scores;
  DetCurve det;
  EerResult eer_point;
  DetPoint at_threshold;  // rates at the EER threshold
  std::vector<OperatingPoint> operating_points;
  std::vector<ConditionMetrics> conditions;
  KdeReport kde_linear, kde_log;
  std::vector<std::string> warnings;

  // Rows in the order of the summary table.
  std::vector<std::pair<std::string, double>> metrics_table() const {
    std::vector<std::pair<std::string, double>> rows = {
        {"EER", eer_point.eer},
        {"th EER", eer_point.threshold},
        {"Threshold", at_threshold.threshold},
        {"FPR", at_threshold.fpr},
        {"FNR", at_threshold.fnr},
    };
    for (const auto& op : operating_points) rows.emplace_back("FNR " + op.name.substr(3), op.fnr);
    for (const auto& op : operating_points) rows.emplace_back("th FNR " + op.name.substr(3), op.threshold);
    return rows;
  }

  std::string metrics_text() const {
    std::ostringstream os;
    os << std::setprecision(10);
    for (const auto& [key, value] : metrics_table()) os << key << " = " << value << '\n';
    return os.str();
  }

  std::string det_csv() const {
    std::ostringstream os;
    os << std::setprecision(12) << "threshold,fpr,fnr\n";
    for (const auto& p : det.points) os << p.threshold << ',' << p.fpr << ',' << p.fnr << '\n';
    return os.str();
  }

  std::string det_svg() const {
    static constexpr double lo = 5e-4, hi = 1 - 5e-4;
    auto probit = [](double p) {
      static const boost::math::normal_distribution<double> n;
      return boost::math::quantile(n, std::clamp(p, lo, hi));
    };
    auto pct = [](double v) {
      std::ostringstream os;
      os << v * 100;
      return os.str();
    };
    const std::vector<double> ticks = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95};
    SvgChart::Axis x{"FPR (%)", lo, hi, probit, ticks, pct};
    SvgChart::Axis y{"FNR (%)", lo, hi, probit, ticks, pct};
    std::ostringstream title;
    title << "DET " << name(options.positive_class) << " (EER " << std::setprecision(4)
          << 100 * eer_point.eer << "%)";
    SvgChart chart(title.str(), x, y);
    std::vector<double> xs, ys;
    for (const auto& p : det.points) xs.push_back(p.fpr), ys.push_back(p.fnr);
    chart.add_series(std::string(name(options.positive_class)), xs, ys, "#1f77b4");
    for (const auto& op : operating_points) chart.add_vertical_line(op.target_fpr, op.name, "6,4");
    chart.add_marker(eer_point.eer, eer_point.eer, "EER");
    return chart.str();
  }
};

inline EvalReport build_report(const std::vector<ScoreRecord>& records, const ReportOptions& options = {}) {
  if (records.empty()) throw InvalidArgument("cannot report on an empty record stream");
  EvalReport r;
  r.options = options;
  r.records = records.size();
  r.binary = confusion_matrix(records, ClassMode::binary);
  r.four_class = confusion_matrix(records, ClassMode::four_class);
  const auto subjects = aggregate_by_subject(records);
  r.binary_subjects = confusion_matrix(subjects, ClassMode::binary);
  r.four_class_subjects = confusion_matrix(subjects, ClassMode::four_class);

  const auto k = code(options.positive_class);
  for (const auto& rec : records) {
    if (rec.true_label == options.positive_class)
      r.positive_scores.push_back(rec.probabilities[k]);
    else if (options.negatives == NegativeSet::all_other || rec.true_label == ClassLabel::control)
      r.negative_scores.push_back(rec.probabilities[k]);
  }
  if (r.positive_scores.empty() || r.negative_scores.empty())
    throw DataError("DET analysis needs both " + std::string(name(options.positive_class)) +
                    " and negative records");
  r.det = det_curve(r.positive_scores, r.negative_scores);
  r.eer_point = eer(r.det);
  r.at_threshold = rates_at(r.det, r.eer_point.threshold);
  for (const auto& n : fixed_fpr_point_names()) r.operating_points.push_back(fnr_at_fpr(r.det, n));
  for (const auto& op : r.operating_points)
    if (!op.reachable) r.warnings.push_back(op.name + " target FPR unreachable");

  r.conditions = {condition_metrics(records, Condition::fit), condition_metrics(records, Condition::unfit)};

  std::vector<std::pair<std::string, std::vector<double>>> groups = {
      {std::string(name(options.positive_class)), r.positive_scores},
      {options.negatives == NegativeSet::control ? "control" : "other", r.negative_scores}};
  for (auto& [g, scores] : groups)
    if (scores.size() < 2) {
      r.warnings.push_back("KDE group " + g + " has fewer than two scores; duplicated");
      scores.push_back(scores.front());
    }
  r.kde_linear = kde_report(groups, KdeScale::linear, r.eer_point.threshold);
  r.kde_log = kde_report(groups, KdeScale::logarithmic, r.eer_point.threshold);
  for (const auto& w : r.kde_linear.warnings) r.warnings.push_back(w);
  return r;
}

// Every file written by write_report_bundle.
inline const std::vector<std::string>& report_artifacts() {
  static const std::vector<std::string> files = {
      "metrics.txt",           "cm_binary.csv",        "cm_four_class.csv",
      "cm_binary_subjects.csv", "cm_four_class_subjects.csv", "condition_metrics.csv",
      "det_curve.csv",         "det.svg",              "kde_density.csv",
      "kde_linear.svg",        "kde_log.svg",          "scores.csv"};
  return files;
}

inline std::string scores_csv(const std::vector<ScoreRecord>& records) {
  std::ostringstream os;
  os << std::setprecision(10) << "subject,label";
  for (auto l : kAllLabels) os << ",p_" << name(l);
  os << '\n';
  for (const auto& r : records) {
    os << r.subject_id << ',' << name(r.true_label);
    for (double p : r.probabilities) os << ',' << p;
    os << '\n';
  }
  return os.str();
}

inline void write_report_bundle(const EvalReport& r, const std::vector<ScoreRecord>& records,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& file, const std::string& text) {
    std::ofstream os(dir / file, std::ios::trunc);
    if (!os) throw DataError("cannot write " + (dir / file).string());
    os << text;
  };
  put("metrics.txt", r.metrics_text());
  put("cm_binary.csv", r.binary.to_csv());
  put("cm_four_class.csv", r.four_class.to_csv());
  put("cm_binary_subjects.csv", r.binary_subjects.to_csv());
  put("cm_four_class_subjects.csv", r.four_class_subjects.to_csv());
  put("condition_metrics.csv", render_condition_table(r.conditions));
  put("det_curve.csv", r.det_csv());
  put("det.svg", r.det_svg());
  put("kde_density.csv", r.kde_linear.density_csv());
  put("kde_linear.svg", r.kde_linear.svg());
  put("kde_log.svg", r.kde_log.svg());
  put("scores.csv", scores_csv(records));
}

}  // namespace ffd::eval
