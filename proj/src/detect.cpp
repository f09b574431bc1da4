#include "enfpd/detect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "enfpd/error.hpp"

namespace enfpd {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower_value = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower_value + upper);
}

EnfVector combine_rows(const EnfMatrix& matrix, RepresentativeMode mode, std::size_t skip) {
  const std::size_t t = matrix.length();
  EnfVector out{std::vector<double>(t), -1};
  std::vector<double> column;
  column.reserve(matrix.row_count());
  for (std::size_t i = 0; i < t; ++i) {
    column.clear();
    for (std::size_t k = 0; k < matrix.row_count(); ++k) {
      if (k != skip) column.push_back(matrix.rows[k].values[i]);
    }
    if (mode == RepresentativeMode::kMean) {
      out.values[i] = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    } else {
      out.values[i] = median_of(column);
    }
  }
  return out;
}

DecisionMetrics summarize(const EnfMatrix& matrix, std::vector<std::optional<double>> rho) {
  std::vector<std::size_t> defined;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (rho[k]) defined.push_back(k);
  }
  if (defined.empty()) throw Error(ErrorCode::kAllDegenerate, "every correlation is undefined");

  DecisionMetrics m;
  std::vector<double> values;
  for (auto k : defined) values.push_back(*rho[k]);
  m.f1 = *std::max_element(values.begin(), values.end());
  m.f2 = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  m.f3 = median_of(values);

  // Highest rho first; equal rho keeps the lower row index first.
  std::stable_sort(defined.begin(), defined.end(),
                   [&](std::size_t a, std::size_t b) { return *rho[a] > *rho[b]; });
  if (defined.size() >= 2) {
    m.top_rows[0] = defined[0];
    m.top_rows[1] = defined[1];
    m.f4 = pearson(matrix.rows[defined[0]].values, matrix.rows[defined[1]].values);
  } else {
    m.top_rows[0] = m.top_rows[1] = defined[0];
  }
  m.rho = std::move(rho);
  return m;
}

}  // namespace

void EnfMatrix::validate() const {
  for (const auto& r : rows) {
    if (r.values.size() != length()) throw Error(ErrorCode::kLengthMismatch, "ENF rows differ in length");
  }
}

std::string_view to_string(RepresentativeMode mode) {
  return mode == RepresentativeMode::kMean ? "mean" : "median";
}

std::string_view to_string(MetricId metric) {
  switch (metric) {
    case MetricId::kF1: return "f1";
    case MetricId::kF2: return "f2";
    case MetricId::kF3: return "f3";
    case MetricId::kF4: return "f4";
  }
  return "f1";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kEnfPresent: return "EnfPresent";
    case Verdict::kEnfAbsent: return "EnfAbsent";
    case Verdict::kAbstain: return "Abstain";
  }
  return "Abstain";
}

std::string_view to_string(ClipLabel label) {
  return label == ClipLabel::kEnfPresent ? "EnfPresent" : "EnfAbsent";
}

RepresentativeMode parse_representative_mode(std::string_view text) {
  const auto t = lower(text);
  if (t == "mean") return RepresentativeMode::kMean;
  if (t == "median") return RepresentativeMode::kMedian;
  throw Error(ErrorCode::kInvalidConfig, "representative mode must be mean or median");
}

MetricId parse_metric(std::string_view text) {
  const auto t = lower(text);
  if (t == "f1") return MetricId::kF1;
  if (t == "f2") return MetricId::kF2;
  if (t == "f3") return MetricId::kF3;
  if (t == "f4") return MetricId::kF4;
  throw Error(ErrorCode::kInvalidConfig, "metric must be one of f1, f2, f3, f4");
}

ClipLabel parse_clip_label(std::string_view text) {
  const auto t = lower(text);
  if (t == "enfpresent" || t == "present" || t == "h1" || t == "1") return ClipLabel::kEnfPresent;
  if (t == "enfabsent" || t == "absent" || t == "h0" || t == "0") return ClipLabel::kEnfAbsent;
  throw Error(ErrorCode::kInvalidConfig, "unknown label '" + std::string(text) + "'");
}

std::optional<double> DecisionMetrics::get(MetricId metric) const {
  switch (metric) {
    case MetricId::kF1: return f1;
    case MetricId::kF2: return f2;
    case MetricId::kF3: return f3;
    case MetricId::kF4: return f4;
  }
  return std::nullopt;
}

EnfVector representative_enf(const EnfMatrix& matrix, RepresentativeMode mode) {
  if (matrix.row_count() == 0) throw Error(ErrorCode::kEmptyMatrix, "no ENF rows");
  matrix.validate();
  return combine_rows(matrix, mode, matrix.row_count());
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch, "pearson needs equal lengths >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    dot += da * db;
    na += da * da;
    nb += db * db;
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

DecisionMetrics decision_metrics(const EnfMatrix& matrix, const EnfVector& representative) {
  if (matrix.row_count() < 2) throw Error(ErrorCode::kTooFewRows, "need at least two ENF rows");
  matrix.validate();
  std::vector<std::optional<double>> rho;
  rho.reserve(matrix.row_count());
  for (const auto& row : matrix.rows) rho.push_back(pearson(row.values, representative.values));
  return summarize(matrix, std::move(rho));
}

DecisionMetrics decision_metrics_leave_one_out(const EnfMatrix& matrix, RepresentativeMode mode) {
  if (matrix.row_count() < 2) throw Error(ErrorCode::kTooFewRows, "need at least two ENF rows");
  matrix.validate();
  std::vector<std::optional<double>> rho;
  for (std::size_t k = 0; k < matrix.row_count(); ++k) {
    const EnfVector others = combine_rows(matrix, mode, k);
    rho.push_back(pearson(matrix.rows[k].values, others.values));
  }
  return summarize(matrix, std::move(rho));
}

std::optional<DecisionMetrics> score_matrix(const EnfMatrix& matrix, RepresentativeMode mode,
                                            bool leave_one_out) {
  if (matrix.row_count() < 2) return std::nullopt;
  try {
    if (leave_one_out) return decision_metrics_leave_one_out(matrix, mode);
    return decision_metrics(matrix, representative_enf(matrix, mode));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kAllDegenerate) return std::nullopt;
    throw;
  }
}

DetectionReport decide(const std::optional<DecisionMetrics>& metrics, MetricId chosen,
                       double threshold, std::size_t region_count) {
  DetectionReport report;
  report.metrics = metrics;
  report.chosen_metric = chosen;
  report.threshold = threshold;
  report.region_count = region_count;
  report.verdict = Verdict::kAbstain;
  if (region_count >= 2 && metrics) {
    if (const auto value = metrics->get(chosen)) {
      report.verdict = *value > threshold ? Verdict::kEnfPresent : Verdict::kEnfAbsent;
    }
  }
  return report;
}

std::string to_json(const DetectionReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  j["verdict"] = to_string(report.verdict);
  j["chosen_metric"] = to_string(report.chosen_metric);
  j["threshold"] = report.threshold;
  const auto& m = report.metrics;
  j["f1"] = m ? ordered_json(m->f1) : ordered_json(nullptr);
  j["f2"] = m ? ordered_json(m->f2) : ordered_json(nullptr);
  j["f3"] = m ? ordered_json(m->f3) : ordered_json(nullptr);
  j["f4"] = m ? opt(m->f4) : ordered_json(nullptr);
  j["L"] = report.region_count;
  j["t"] = report.vector_length;
  j["representative_mode"] = to_string(report.representative_mode);
  ordered_json regions = ordered_json::array();
  for (std::size_t k = 0; k < report.region_labels.size(); ++k) {
    ordered_json r;
    r["label"] = report.region_labels[k];
    r["rho"] = (m && k < m->rho.size()) ? opt(m->rho[k]) : ordered_json(nullptr);
    regions.push_back(std::move(r));
  }
  j["per_region"] = std::move(regions);
  return j.dump(2);
}

}  // namespace enfpd
