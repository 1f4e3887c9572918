#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tug/error.hpp"

namespace tug::metrics {

struct RegressionMetrics {
  std::optional<double> pearson;  // nullopt when either side has zero variance
  double mae = 0.0;
  double rmse = 0.0;
};

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::length_mismatch, "predictions and labels differ in length (" + std::to_string(a.size()) +
                                                " vs " + std::to_string(b.size()) + ")");
  }
}

inline RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> labels) {
  require_same_length(preds, labels);
  if (preds.size() < 2) throw Error(ErrorCode::invalid_argument, "regression metrics need at least 2 pairs");
  const double n = static_cast<double>(preds.size());
  double abs_sum = 0.0, sq_sum = 0.0, mp = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - labels[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    mp += preds[i];
    ml += labels[i];
  }
  mp /= n;
  ml /= n;
  double cov = 0.0, vp = 0.0, vl = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    cov += (preds[i] - mp) * (labels[i] - ml);
    vp += (preds[i] - mp) * (preds[i] - mp);
    vl += (labels[i] - ml) * (labels[i] - ml);
  }
  RegressionMetrics m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  // the (n - 1) factors of the sample covariance and deviations cancel
  if (!constant(preds) && !constant(labels) && vp > 0.0 && vl > 0.0) m.pearson = std::clamp(cov / std::sqrt(vp * vl), -1.0, 1.0);
  return m;
}

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

/// Ratios with a zero denominator are nullopt rather than NaN.
struct ClassificationMetrics {
  double threshold = 0.0;
  double label_threshold = 0.0;
  Confusion confusion;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

/// A value counts as positive iff it is >= its threshold. Labels use
/// `label_threshold`, which defaults to the prediction threshold.
inline ClassificationMetrics classification_metrics(std::span<const double> preds, std::span<const double> labels,
                                                    double threshold = 0.75,
                                                    std::optional<double> label_threshold = std::nullopt) {
  require_same_length(preds, labels);
  if (preds.empty()) throw Error(ErrorCode::invalid_argument, "classification metrics need at least 1 pair");
  ClassificationMetrics m;
  m.threshold = threshold;
  m.label_threshold = label_threshold.value_or(threshold);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] >= m.threshold;
    const bool l = labels[i] >= m.label_threshold;
    if (p && l) ++m.confusion.tp;
    else if (p) ++m.confusion.fp;
    else if (l) ++m.confusion.fn;
    else ++m.confusion.tn;
  }
  const auto& c = m.confusion;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

/// One row per prediction threshold. Labels are binarized once, at
/// `label_threshold` (default: the lowest threshold), so recall can only fall
/// as the prediction threshold rises.
inline std::vector<ClassificationMetrics> threshold_sweep(std::span<const double> preds, std::span<const double> labels,
                                                          std::span<const double> thresholds,
                                                          std::optional<double> label_threshold = std::nullopt) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::invalid_argument, "thresholds must be sorted ascending");
  }
  std::vector<ClassificationMetrics> rows;
  if (thresholds.empty()) return rows;
  const double lt = label_threshold.value_or(thresholds.front());
  for (double t : thresholds) rows.push_back(classification_metrics(preds, labels, t, lt));
  return rows;
}

struct EvalReport {
  std::size_t pairs = 0;
  RegressionMetrics regression;
  std::vector<ClassificationMetrics> classification;
};

inline EvalReport evaluate(std::span<const double> preds, std::span<const double> labels,
                           std::span<const double> thresholds) {
  EvalReport r;
  r.pairs = preds.size();
  r.regression = regression_metrics(preds, labels);
  r.classification = threshold_sweep(preds, labels, thresholds);
  return r;
}

namespace detail {
inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
inline std::string percent_or_na(const std::optional<double>& v) {
  return v ? fixed(100.0 * *v, 1) + "%" : std::string("n/a");
}
}  // namespace detail

/// Plain-text report: regression rows, then one block per threshold.
inline std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "Evaluation report (" << r.pairs << " pairs)\n";
  out << "Metric                 Score\n";
  out << "Pearson Correlation    " << (r.regression.pearson ? detail::fixed(*r.regression.pearson, 4) : "n/a") << '\n';
  out << "MAE                    " << detail::fixed(r.regression.mae, 4) << '\n';
  out << "RMSE                   " << detail::fixed(r.regression.rmse, 4) << '\n';
  for (const auto& c : r.classification) {
    out << "\nClassification threshold " << detail::fixed(c.threshold, 2) << " (labels at "
        << detail::fixed(c.label_threshold, 2) << ")\n";
    out << "Accuracy (binary)      " << detail::fixed(100.0 * c.accuracy, 1) << "%\n";
    out << "Precision              " << detail::percent_or_na(c.precision) << '\n';
    out << "Recall                 " << detail::percent_or_na(c.recall) << '\n';
    out << "F1-score               " << detail::percent_or_na(c.f1) << '\n';
    out << "Confusion              tp=" << c.confusion.tp << " fp=" << c.confusion.fp << " tn=" << c.confusion.tn
        << " fn=" << c.confusion.fn << '\n';
  }
  return out.str();
}

}  // namespace tug::metrics
