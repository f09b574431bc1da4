#include "enfpd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "enfpd/error.hpp"
#include "enfpd/keyvalue.hpp"
#include "enfpd/parallel.hpp"

namespace fs = std::filesystem;

namespace enfpd {
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::vector<LabeledItem> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  const fs::path base = path.parent_path();
  std::vector<LabeledItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledItem item;
      fs::path p = j.at("path").get<std::string>();
      if (p.is_relative() && !base.empty()) p = base / p;
      item.path = p.string();
      const auto& label = j.at("label");
      item.label = parse_clip_label(label.is_number() ? std::to_string(label.get<int>())
                                                      : label.get<std::string>());
      item.sensor_tag = j.value("sensor_tag", std::string());
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

void write_manifest(const std::vector<LabeledItem>& items, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& item : items) {
    nlohmann::ordered_json j;
    j["path"] = item.path;
    j["label"] = to_string(item.label);
    j["sensor_tag"] = item.sensor_tag;
    out << j.dump() << '\n';
  }
}

void fill_scores(ScoreRow& row, const EnfAnalysis& analysis, bool leave_one_out) {
  row.region_count = analysis.matrix.row_count();
  row.vector_length = analysis.vector_length;
  for (auto mode : kAllModes) {
    const auto metrics = score_matrix(analysis.matrix, mode, leave_one_out);
    for (auto metric : kAllMetrics) {
      row.scores[score_slot(mode, metric)] = metrics ? metrics->get(metric) : std::nullopt;
    }
  }
}

ScoreRow score_clip(const FrameSource& source, const PipelineConfig& config, int jobs) {
  ScoreRow row;
  fill_scores(row, analyze(source, config, jobs), config.leave_one_out);
  return row;
}

std::unique_ptr<FrameSource> open_labeled_item(const LabeledItem& item) {
  return open_frame_source(item.path, guess_ingest_format(item.path));
}

std::vector<ScoreRow> batch_scores(const std::vector<LabeledItem>& corpus, const PipelineConfig& config,
                                   int jobs, const ClipOpener& opener) {
  if (corpus.empty()) throw Error(ErrorCode::kInvalidConfig, "empty corpus");
  config.validate();
  std::vector<ScoreRow> rows(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    rows[i].item = corpus[i];
    try {
      const auto source = opener(corpus[i]);
      fill_scores(rows[i], analyze(*source, config, 1), config.leave_one_out);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const ClipLabel> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  RocCurve curve;
  for (auto l : labels) (l == ClipLabel::kEnfPresent ? curve.positives : curve.negatives)++;
  if (curve.positives == 0 || curve.negatives == 0) {
    throw Error(ErrorCode::kSingleClass, "ROC needs both classes");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  const double inf = std::numeric_limits<double>::infinity();
  curve.points.push_back({0.0, 0.0, inf});
  const auto P = static_cast<double>(curve.positives);
  const auto N = static_cast<double>(curve.negatives);
  // Twice the area in units of one positive-negative pair: a group of tied
  // scores adds fp * (2 tp_before + tp), i.e. half credit for ties.
  std::uint64_t tp = 0, fp = 0, doubled_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::uint64_t gtp = 0, gfp = 0;
    const double value = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == value; ++i) {
      (labels[order[i]] == ClipLabel::kEnfPresent ? gtp : gfp)++;
    }
    doubled_area += gfp * (2 * tp + gtp);
    tp += gtp;
    fp += gfp;
    curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, value});
  }
  curve.auc = static_cast<double>(doubled_area) / (2.0 * P * N);
  return curve;
}

RocCurve roc_for(const std::vector<ScoreRow>& rows, RepresentativeMode mode, MetricId metric,
                 const std::string& group) {
  std::vector<double> scores;
  std::vector<ClipLabel> labels;
  for (const auto& r : rows) {
    if (!r.error.empty() || (group != "Any" && r.item.sensor_tag != group)) continue;
    if (const auto s = r.get(mode, metric)) {
      scores.push_back(*s);
      labels.push_back(r.item.label);
    }
  }
  return roc_auc(scores, labels);
}

EvaluationSummary summarize(const std::vector<ScoreRow>& rows) {
  EvaluationSummary summary;
  summary.items = rows.size();
  std::vector<std::string> groups{"Any"};
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++summary.failed;
      continue;
    }
    if (!r.item.sensor_tag.empty() &&
        std::find(groups.begin(), groups.end(), r.item.sensor_tag) == groups.end()) {
      groups.push_back(r.item.sensor_tag);
    }
  }
  for (const auto& g : groups) {
    auto& cells = summary.groups[g];
    for (auto mode : kAllModes) {
      for (auto metric : kAllMetrics) {
        auto& cell = cells[score_slot(mode, metric)];
        for (const auto& r : rows) {
          if (!r.error.empty() || (g != "Any" && r.item.sensor_tag != g)) continue;
          if (!r.get(mode, metric)) ++cell.abstained;
          else (r.item.label == ClipLabel::kEnfPresent ? cell.positives : cell.negatives)++;
        }
        if (cell.positives > 0 && cell.negatives > 0) cell.auc = roc_for(rows, mode, metric, g).auc;
      }
    }
  }
  return summary;
}

void write_scores_csv(const std::vector<ScoreRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << "path,label,sensor_tag,L,t";
  for (auto mode : kAllModes) {
    for (auto metric : kAllMetrics) out << ',' << to_string(metric) << '_' << to_string(mode);
  }
  out << ",error\n";
  for (const auto& r : rows) {
    out << csv_field(r.item.path) << ',' << to_string(r.item.label) << ',' << csv_field(r.item.sensor_tag)
        << ',' << r.region_count << ',' << r.vector_length;
    for (const auto& s : r.scores) {
      out << ',';
      if (s) out << format_double(*s);
    }
    out << ',' << csv_field(r.error) << '\n';
  }
}

void write_roc_csv(const RocCurve& curve, const fs::path& path) {
  auto out = open_out(path);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << '\n';
  }
}

std::string summary_json(const EvaluationSummary& summary) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["items"] = summary.items;
  j["failed"] = summary.failed;
  for (auto mode : kAllModes) {
    ordered_json table;
    // "Any" first, then tags in order.
    std::vector<std::string> names{"Any"};
    for (const auto& [g, _] : summary.groups) {
      if (g != "Any") names.push_back(g);
    }
    for (const auto& g : names) {
      const auto& cells = summary.groups.at(g);
      ordered_json row;
      for (auto metric : kAllMetrics) {
        const auto& c = cells[score_slot(mode, metric)];
        row[std::string(to_string(metric))] = c.auc ? ordered_json(*c.auc) : ordered_json(nullptr);
      }
      const auto& c1 = cells[score_slot(mode, MetricId::kF1)];
      row["positives"] = c1.positives;
      row["negatives"] = c1.negatives;
      row["abstained"] = c1.abstained;
      table[g] = std::move(row);
    }
    j["auc"][std::string(to_string(mode))] = std::move(table);
  }
  return j.dump(2);
}

void write_evaluation(const std::vector<ScoreRow>& rows, const fs::path& dir) {
  fs::create_directories(dir);
  write_scores_csv(rows, dir / "scores.csv");
  const auto summary = summarize(rows);
  for (auto mode : kAllModes) {
    for (auto metric : kAllMetrics) {
      if (!summary.groups.at("Any")[score_slot(mode, metric)].auc) continue;
      write_roc_csv(roc_for(rows, mode, metric),
                    dir / ("roc_" + std::string(to_string(mode)) + "_" + std::string(to_string(metric)) + ".csv"));
    }
  }
  auto out = open_out(dir / "summary.json");
  out << summary_json(summary) << '\n';
}

}  // namespace enfpd
