#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enfpd/detect.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/pipeline.hpp"

namespace enfpd {

struct LabeledItem {
  std::string path;
  ClipLabel label = ClipLabel::kEnfPresent;
  std::string sensor_tag;
};

// JSON lines {path, label, sensor_tag}; relative paths resolve against the
// manifest's directory. Throws kFileNotFound / kMalformedHeader.
std::vector<LabeledItem> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<LabeledItem>& items, const std::filesystem::path& path);

inline constexpr std::array<MetricId, 4> kAllMetrics = {MetricId::kF1, MetricId::kF2, MetricId::kF3,
                                                        MetricId::kF4};
inline constexpr std::array<RepresentativeMode, 2> kAllModes = {RepresentativeMode::kMean,
                                                                RepresentativeMode::kMedian};

// Index into ScoreRow::scores.
constexpr std::size_t score_slot(RepresentativeMode mode, MetricId metric) {
  return static_cast<std::size_t>(mode) * 4 + static_cast<std::size_t>(metric);
}

struct ScoreRow {
  LabeledItem item;
  // 4 metrics x {Mean, Median}; nullopt = abstained / undefined.
  std::array<std::optional<double>, 8> scores;
  std::size_t region_count = 0;
  std::size_t vector_length = 0;
  std::string error;  // non-empty when the item could not be processed

  std::optional<double> get(RepresentativeMode mode, MetricId metric) const {
    return scores[score_slot(mode, metric)];
  }
};

// All eight scores from one estimation pass.
ScoreRow score_clip(const FrameSource& source, const PipelineConfig& config, int jobs = 1);
void fill_scores(ScoreRow& row, const EnfAnalysis& analysis, bool leave_one_out);

using ClipOpener = std::function<std::unique_ptr<FrameSource>(const LabeledItem&)>;

// Opens the path with the format guessed from its name.
std::unique_ptr<FrameSource> open_labeled_item(const LabeledItem& item);

// Items run in parallel (one worker each); rows keep corpus order. Item
// failures are recorded in ScoreRow::error.
std::vector<ScoreRow> batch_scores(const std::vector<LabeledItem>& corpus, const PipelineConfig& config,
                                   int jobs = 1, const ClipOpener& opener = open_labeled_item);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0;  // +inf for the (0,0) endpoint
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Sweep over distinct score values, highest first. Throws kSingleClass when a
// class is empty and kLengthMismatch on unequal inputs.
RocCurve roc_auc(std::span<const double> scores, std::span<const ClipLabel> labels);

struct AucCell {
  std::optional<double> auc;  // nullopt when a class is missing
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t abstained = 0;
};

// group -> metric/mode cell; groups are the sensor tags plus "Any".
struct EvaluationSummary {
  std::map<std::string, std::array<AucCell, 8>> groups;
  std::size_t items = 0;
  std::size_t failed = 0;
};

// Items with errors are skipped; abstentions are excluded per cell.
EvaluationSummary summarize(const std::vector<ScoreRow>& rows);
// Scores and labels of usable rows for one configuration and group ("Any"
// matches every tag).
RocCurve roc_for(const std::vector<ScoreRow>& rows, RepresentativeMode mode, MetricId metric,
                 const std::string& group = "Any");

void write_scores_csv(const std::vector<ScoreRow>& rows, const std::filesystem::path& path);
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);
std::string summary_json(const EvaluationSummary& summary);

// Scores CSV, ROC CSV per configuration (roc_<mode>_<metric>.csv) and
// summary.json into `dir`.
void write_evaluation(const std::vector<ScoreRow>& rows, const std::filesystem::path& dir);

}  // namespace enfpd
