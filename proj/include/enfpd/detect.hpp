#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enfpd/enf.hpp"

namespace enfpd {

// L estimated ENF vectors of equal length t; row k is M(k, .).
struct EnfMatrix {
  std::vector<EnfVector> rows;

  std::size_t row_count() const noexcept { return rows.size(); }
  std::size_t length() const noexcept { return rows.empty() ? 0 : rows.front().values.size(); }
  // Throws kLengthMismatch when rows differ in length.
  void validate() const;
};

enum class RepresentativeMode { kMean, kMedian };
enum class MetricId { kF1, kF2, kF3, kF4 };
enum class Verdict { kEnfPresent, kEnfAbsent, kAbstain };
enum class ClipLabel { kEnfAbsent, kEnfPresent };  // H0, H1

std::string_view to_string(RepresentativeMode mode);
std::string_view to_string(MetricId metric);
std::string_view to_string(Verdict verdict);
std::string_view to_string(ClipLabel label);
RepresentativeMode parse_representative_mode(std::string_view text);
MetricId parse_metric(std::string_view text);
// Accepts EnfPresent/present/H1/1 and EnfAbsent/absent/H0/0.
ClipLabel parse_clip_label(std::string_view text);

struct DecisionMetrics {
  // nullopt where a row (or the representative) has zero variance.
  std::vector<std::optional<double>> rho;
  double f1 = 0;  // max
  double f2 = 0;  // mean
  double f3 = 0;  // median
  // Correlation of the two rows closest to the representative; needs two
  // defined rho values.
  std::optional<double> f4;
  std::size_t top_rows[2] = {0, 0};

  std::optional<double> get(MetricId metric) const;
};

// Element-wise mean or median over rows (median of an even count averages the
// two middle values). Throws kEmptyMatrix.
EnfVector representative_enf(const EnfMatrix& matrix, RepresentativeMode mode);

// <a-mean(a), b-mean(b)> / (|a-mean(a)| |b-mean(b)|); nullopt when either
// centered norm is zero. Throws kLengthMismatch on unequal or < 2 lengths.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

// rho(k) = pearson(row k, representative). Throws kTooFewRows (L < 2) and
// kAllDegenerate (no defined rho).
DecisionMetrics decision_metrics(const EnfMatrix& matrix, const EnfVector& representative);

// Each row is compared with a representative built from the other rows.
DecisionMetrics decision_metrics_leave_one_out(const EnfMatrix& matrix, RepresentativeMode mode);

// Abstain-aware scoring: nullopt for L < 2 or all-degenerate correlations.
std::optional<DecisionMetrics> score_matrix(const EnfMatrix& matrix, RepresentativeMode mode,
                                            bool leave_one_out = false);

struct DetectionReport {
  std::optional<DecisionMetrics> metrics;
  RepresentativeMode representative_mode = RepresentativeMode::kMedian;
  MetricId chosen_metric = MetricId::kF1;
  double threshold = 0.8;
  Verdict verdict = Verdict::kAbstain;
  std::size_t region_count = 0;   // L
  std::size_t vector_length = 0;  // t
  std::vector<std::int32_t> region_labels;
};

// EnfPresent iff chosen metric > threshold (strict) with L >= 2; Abstain when
// L < 2, metrics are missing, or the chosen metric is undefined.
DetectionReport decide(const std::optional<DecisionMetrics>& metrics, MetricId chosen,
                       double threshold, std::size_t region_count);

// {verdict, chosen_metric, threshold, f1..f4, L, t, representative_mode,
//  per_region: [{label, rho}]}
std::string to_json(const DetectionReport& report);

}  // namespace enfpd
