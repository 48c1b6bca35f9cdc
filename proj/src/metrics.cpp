#include "veritrace/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace veritrace {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
  if (y_true.empty()) throw std::invalid_argument("confusion: no items");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw std::invalid_argument("confusion: labels must be 0 or 1");
    }
    if (t == 1 && p == 1) ++cm.tp;
    else if (t == 0 && p == 1) ++cm.fp;
    else if (t == 1 && p == 0) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  ClassMetrics m;
  m.precision_undefined = tp + fp == 0;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.tp_rate = m.recall;
  m.fp_rate = ratio(fp, fp + tn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.support = tp + fn;
  return m;
}

MetricReport compute(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("compute: empty confusion matrix");
  MetricReport r;
  r.counts = cm;
  r.fake = class_metrics(cm.tp, cm.fp, cm.fn, cm.tn);
  r.real = class_metrics(cm.tn, cm.fn, cm.fp, cm.tp);
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());

  const double wf = ratio(r.fake.support, cm.total());
  const double wr = ratio(r.real.support, cm.total());
  auto avg = [&](double a, double b) { return wf * a + wr * b; };
  r.weighted.tp_rate = avg(r.fake.tp_rate, r.real.tp_rate);
  r.weighted.fp_rate = avg(r.fake.fp_rate, r.real.fp_rate);
  r.weighted.precision = avg(r.fake.precision, r.real.precision);
  r.weighted.recall = avg(r.fake.recall, r.real.recall);
  r.weighted.f1 = avg(r.fake.f1, r.real.f1);
  r.weighted.support = cm.total();
  r.weighted.precision_undefined = r.fake.precision_undefined || r.real.precision_undefined;
  return r;
}

namespace {

nlohmann::ordered_json class_json(const ClassMetrics& m) {
  nlohmann::ordered_json j;
  j["tp_rate"] = m.tp_rate;
  j["fp_rate"] = m.fp_rate;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["support"] = m.support;
  j["precision_undefined"] = m.precision_undefined;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["engine"] = r.engine;
  j["mode"] = r.mode;
  j["level"] = r.level;
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
  j["accuracy"] = r.accuracy;
  j["fake"] = class_json(r.fake);
  j["real"] = class_json(r.real);
  j["weighted"] = class_json(r.weighted);
  return j;
}

std::string format_table(const MetricReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %8s %9s %8s %9s %9s\n", "Class", "TP Rate",
                "FP Rate", "Precision", "Recall", "F-Measure", "Accuracy");
  os << buf;
  auto row = [&](const char* name, const ClassMetrics& m, bool with_acc) {
    std::snprintf(buf, sizeof(buf), "%-10s %8.3f %8.3f %9.3f%s %8.3f %9.3f", name, m.tp_rate,
                  m.fp_rate, m.precision, m.precision_undefined ? "*" : " ", m.recall, m.f1);
    os << buf;
    if (with_acc) {
      std::snprintf(buf, sizeof(buf), " %9.2f", 100.0 * r.accuracy);
      os << buf;
    }
    os << '\n';
  };
  row("fake", r.fake, false);
  row("real", r.real, false);
  row("weighted", r.weighted, true);
  if (r.weighted.precision_undefined) os << "* precision undefined (no predicted positives), shown as 0\n";
  return os.str();
}

}  // namespace veritrace
