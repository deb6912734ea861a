// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"

namespace crossview {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

/// Percentages; absent when the denominator is zero (printed as "-").
struct BinaryScores {
  std::optional<double> iou;
  std::optional<double> recall;
  std::optional<double> precision;
};

inline BinaryScores scores_from(const ConfusionCounts& c) {
  BinaryScores s;
  if (c.tp + c.fp + c.fn > 0) {
    s.iou = 100.0 * static_cast<double>(c.tp) /
            static_cast<double>(c.tp + c.fp + c.fn);
  }
  if (c.tp + c.fn > 0) {
    s.recall =
        100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (c.tp + c.fp > 0) {
    s.precision =
        100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  return s;
}

struct IouResult {
  ConfusionCounts counts;
  BinaryScores scores;
};

/// Binary confusion statistics of `pred` against `gt` for one positive class.
template <typename Label>
inline IouResult iou_eval(const std::vector<Label>& pred,
                          const std::vector<Label>& gt, Label positive_class) {
  if (pred.size() != gt.size()) {
    throw ShapeError("prediction/ground-truth length mismatch (" +
                     std::to_string(pred.size()) + " vs " +
                     std::to_string(gt.size()) + ")");
  }
  IouResult r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive_class;
    const bool g = gt[i] == positive_class;
    if (p && g) {
      ++r.counts.tp;
    } else if (p && !g) {
      ++r.counts.fp;
    } else if (!p && g) {
      ++r.counts.fn;
    } else {
      ++r.counts.tn;
    }
  }
  r.scores = scores_from(r.counts);
  return r;
}

/// Default evaluation distance bins: close < 20 m, medium in [20, 50),
/// far >= 50 m, measured as the point's range from the sensor origin.
inline std::vector<double> default_distance_edges() { return {0.0, 20.0, 50.0}; }

struct EvalBin {
  std::string name;
  double lo = 0.0;
  std::optional<double> hi;  ///< open-ended when absent
  ConfusionCounts counts;
  BinaryScores scores;
};

struct EvalReport {
  ConfusionCounts overall;
  BinaryScores overall_scores;
  std::vector<EvalBin> bins;

  std::string to_csv() const;
  std::string to_table() const;
};

/// Evaluate a binary labelling overall and per distance bin. `edges` are
/// ascending bin lower bounds; the last bin is open-ended.
template <typename Label>
inline EvalReport distance_binned_eval(
    const std::vector<Label>& pred, const std::vector<Label>& gt,
    const PointCloud& cloud, Label positive_class,
    const std::vector<double>& edges = default_distance_edges()) {
  if (pred.size() != gt.size() || pred.size() != cloud.size()) {
    throw ShapeError("labels and cloud must have equal lengths");
  }
  if (edges.empty()) throw ConfigError("at least one distance bin required");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ConfigError("distance bin edges must be strictly ascending");
    }
  }

  EvalReport report;
  report.bins.resize(edges.size());
  char buf[64];
  for (std::size_t b = 0; b < edges.size(); ++b) {
    report.bins[b].lo = edges[b];
    if (b + 1 < edges.size()) {
      report.bins[b].hi = edges[b + 1];
      std::snprintf(buf, sizeof(buf), "[%g,%g)", edges[b], edges[b + 1]);
    } else {
      std::snprintf(buf, sizeof(buf), "[%g,inf)", edges[b]);
    }
    report.bins[b].name = buf;
  }

  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = cloud.points[i].range();
    std::size_t b = 0;
    bool binned = r >= edges[0];
    while (binned && b + 1 < edges.size() && r >= edges[b + 1]) ++b;

    const bool p = pred[i] == positive_class;
    const bool g = gt[i] == positive_class;
    ConfusionCounts delta;
    if (p && g) {
      delta.tp = 1;
    } else if (p && !g) {
      delta.fp = 1;
    } else if (!p && g) {
      delta.fn = 1;
    } else {
      delta.tn = 1;
    }
    report.overall += delta;
    if (binned) report.bins[b].counts += delta;
  }

  report.overall_scores = scores_from(report.overall);
  for (EvalBin& bin : report.bins) bin.scores = scores_from(bin.counts);
  return report;
}

namespace detail {

inline std::string score_cell(const std::optional<double>& v,
                              bool csv = false) {
  if (!v) return csv ? "" : "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace detail

inline std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "bin,tp,fp,fn,tn,iou,recall,precision\n";
  auto row = [&](const std::string& name, const ConfusionCounts& c,
                 const BinaryScores& s) {
    out << name << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << c.tn
        << ',' << detail::score_cell(s.iou, true) << ','
        << detail::score_cell(s.recall, true) << ','
        << detail::score_cell(s.precision, true) << '\n';
  };
  row("overall", overall, overall_scores);
  for (const EvalBin& bin : bins) row(bin.name, bin.counts, bin.scores);
  return out.str();
}

inline std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %8s\n", "bin", "IoU", "R",
                "P");
  out << buf;
  auto row = [&](const std::string& name, const BinaryScores& s) {
    std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %8s\n", name.c_str(),
                  detail::score_cell(s.iou).c_str(),
                  detail::score_cell(s.recall).c_str(),
                  detail::score_cell(s.precision).c_str());
    out << buf;
  };
  row("overall", overall_scores);
  for (const EvalBin& bin : bins) row(bin.name, bin.scores);
  return out.str();
}

}  // namespace crossview
