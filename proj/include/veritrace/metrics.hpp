#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <json.hpp>

namespace veritrace {

/// Positive class is fake (label 1).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws std::invalid_argument on length mismatch, empty input, or values
/// outside {0,1}.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassMetrics {
  double tp_rate = 0.0;  // == recall
  double fp_rate = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool precision_undefined = false;  // tp + fp == 0, precision reported as 0
};

struct MetricReport {
  ConfusionMatrix counts;
  ClassMetrics fake;      // positive class = 1
  ClassMetrics real;      // positive class = 0
  ClassMetrics weighted;  // support-weighted average of the two
  double accuracy = 0.0;
  std::string model;
  std::string engine;
  std::string mode;
  std::string level;  // "post" or "instance"
};

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Throws std::invalid_argument when the matrix is empty.
MetricReport compute(const ConfusionMatrix& cm);

nlohmann::ordered_json to_json(const MetricReport& report);
/// Table in the TP Rate / FP Rate / Precision / Recall / F-Measure / Accuracy layout.
std::string format_table(const MetricReport& report);

}  // namespace veritrace
