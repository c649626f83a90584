#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/audit.hpp"
#include "cfglyph/cfengine.hpp"
#include "cfglyph/classifier.hpp"
#include "cfglyph/codec.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/io.hpp"

namespace cfglyph {

// ─── Report emitters ─────────────────────────────────────────────────────────
//
// Every emitter returns the full document as a string; callers decide where
// it lands. Key order, row order, and element order are fixed so identical
// runs produce identical bytes.

inline std::string bias_report_json(const BiasReport& report) {
  nlohmann::ordered_json j;
  j["label"] = report.label;
  j["n_pairs"] = report.n_pairs;
  j["p_flip"] = report.p_flip;
  j["p_01"] = report.p_01;
  j["p_10"] = report.p_10;
  j["bias"] = report.bias;
  j["significant"] = report.significant;
  return j.dump(2) + "\n";
}

inline std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  std::string out = "prob_r,prob_c,y_r,y_c\n";
  for (const ScatterPoint& p : points) {
    out += fmt_double(p.prob_r) + "," + fmt_double(p.prob_c) + "," +
           std::to_string(p.y_r) + "," + std::to_string(p.y_c) + "\n";
  }
  return out;
}

inline std::string importance_report_json(const ImportanceReport& report) {
  nlohmann::ordered_json j;
  j["attributes"] = report.attributes;
  j["soft"] = report.soft;
  j["global_score"] = report.global_score;
  j["ranking"] = report.ranking;
  j["local"] = report.local;
  return j.dump(2) + "\n";
}

inline std::string sweep_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["attribute"] = result.attribute;
  j["n_points"] = result.points.size();
  j["median_abs_error"] = result.median_abs_error;
  if (result.has_reference) j["reference_median_abs_error"] = result.reference_median_abs_error;
  j["blank_images"] = result.blank_images;
  return j.dump(2) + "\n";
}

inline std::string sweep_csv(const SweepResult& result) {
  std::string out = "row,target,measured\n";
  for (const SweepPoint& p : result.points) {
    out += std::to_string(p.row) + "," + fmt_double(p.target) + "," +
           fmt_double(p.measured) + "\n";
  }
  return out;
}

inline std::string codec_loss_csv(const std::vector<EpochLoss>& log) {
  std::string out = "epoch,phase,loss_x,loss_z,total\n";
  for (const EpochLoss& e : log) {
    out += std::to_string(e.epoch) + "," + std::to_string(e.phase) + "," +
           fmt_double(e.loss_x) + "," + fmt_double(e.loss_z) + "," + fmt_double(e.total) + "\n";
  }
  return out;
}

inline std::string classifier_loss_csv(const std::vector<EpochRecord>& log) {
  std::string out = "epoch,loss\n";
  for (const EpochRecord& e : log)
    out += std::to_string(e.epoch) + "," + fmt_double(e.loss) + "\n";
  return out;
}

// ─── SVG plots ───────────────────────────────────────────────────────────────

namespace detail {

inline std::string svg_num(double v) {
  // Two decimals are plenty at canvas resolution and keep the files stable.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

/// Probability-versus-probability scatter on a fixed 600x600 canvas with the
/// y=x diagonal and the 0.5 decision guides. Points outside [0,1]² are
/// rejected, flips are drawn in a second color.
inline std::string scatter_svg(const std::vector<ScatterPoint>& points,
                               const std::string& title = "") {
  constexpr double kCanvas = 600.0, kLo = 50.0, kHi = 570.0;
  const double span = kHi - kLo;
  const auto px = [&](double v) { return kLo + v * span; };
  const auto py = [&](double v) { return kCanvas - kLo - v * span; };

  for (const ScatterPoint& p : points) {
    if (!std::isfinite(p.prob_r) || !std::isfinite(p.prob_c) || p.prob_r < 0.0 ||
        p.prob_r > 1.0 || p.prob_c < 0.0 || p.prob_c > 1.0)
      throw OutOfRangeError("scatter probabilities must lie in [0,1]");
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + detail::svg_num(kLo) + "\" y=\"" + detail::svg_num(kCanvas - kLo - span) +
         "\" width=\"" + detail::svg_num(span) + "\" height=\"" + detail::svg_num(span) +
         "\" fill=\"none\" stroke=\"#444444\"/>\n";
  // Decision guides, then the identity line on top of them.
  svg += "<line x1=\"" + detail::svg_num(px(0.5)) + "\" y1=\"" + detail::svg_num(py(0.0)) +
         "\" x2=\"" + detail::svg_num(px(0.5)) + "\" y2=\"" + detail::svg_num(py(1.0)) +
         "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(px(0.0)) + "\" y1=\"" + detail::svg_num(py(0.5)) +
         "\" x2=\"" + detail::svg_num(px(1.0)) + "\" y2=\"" + detail::svg_num(py(0.5)) +
         "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(px(0.0)) + "\" y1=\"" + detail::svg_num(py(0.0)) +
         "\" x2=\"" + detail::svg_num(px(1.0)) + "\" y2=\"" + detail::svg_num(py(1.0)) +
         "\" stroke=\"#888888\"/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    svg += "<text x=\"" + detail::svg_num(px(tick)) + "\" y=\"" + detail::svg_num(kCanvas - kLo + 20.0) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#222222\">" + detail::svg_num(tick) +
           "</text>\n";
    svg += "<text x=\"" + detail::svg_num(kLo - 10.0) + "\" y=\"" + detail::svg_num(py(tick) + 4.0) +
           "\" font-size=\"12\" text-anchor=\"end\" fill=\"#222222\">" + detail::svg_num(tick) +
           "</text>\n";
  }
  svg += "<text x=\"" + detail::svg_num(px(0.5)) + "\" y=\"" + detail::svg_num(kCanvas - 8.0) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#222222\">p(base image)</text>\n";
  svg += "<text x=\"14\" y=\"" + detail::svg_num(py(0.5)) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#222222\" transform=\"rotate(-90 14 " +
         detail::svg_num(py(0.5)) + ")\">p(counterfactual)</text>\n";
  if (!title.empty())
    svg += "<text x=\"" + detail::svg_num(px(0.5)) + "\" y=\"24\" font-size=\"15\" "
           "text-anchor=\"middle\" fill=\"#111111\">" + title + "</text>\n";
  for (const ScatterPoint& p : points) {
    const char* color = p.y_r == p.y_c ? "#2c5f8a" : "#c0392b";
    svg += "<circle cx=\"" + detail::svg_num(px(p.prob_r)) + "\" cy=\"" +
           detail::svg_num(py(p.prob_c)) + "\" r=\"2.5\" fill=\"" + color +
           "\" fill-opacity=\"0.6\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// Horizontal bar chart of global importance scores in ranked order.
/// Positive bars grow right from the zero axis, negative ones left.
inline std::string importance_svg(const ImportanceReport& report) {
  if (report.attributes.empty()) throw EmptyInputError("importance report has no attributes");
  constexpr double kWidth = 600.0, kRow = 34.0, kTop = 40.0, kMargin = 60.0;
  const double height = kTop + kRow * static_cast<double>(report.ranking.size()) + 20.0;
  const double mid = kWidth / 2.0;
  const double half_span = mid - kMargin;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"" +
         detail::svg_num(height) + "\" viewBox=\"0 0 600 " + detail::svg_num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"600\" height=\"" + detail::svg_num(height) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::svg_num(mid) + "\" y=\"24\" font-size=\"15\" "
         "text-anchor=\"middle\" fill=\"#111111\">counterfactual importance</text>\n";
  svg += "<line x1=\"" + detail::svg_num(mid) + "\" y1=\"" + detail::svg_num(kTop - 6.0) +
         "\" x2=\"" + detail::svg_num(mid) + "\" y2=\"" + detail::svg_num(height - 14.0) +
         "\" stroke=\"#444444\"/>\n";

  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    std::size_t k = 0;
    while (report.attributes[k] != report.ranking[i]) ++k;
    const double score = report.global_score[k];
    const double y = kTop + kRow * static_cast<double>(i);
    const double w = std::abs(score) * half_span;
    const double x = score >= 0.0 ? mid : mid - w;
    const char* color = score >= 0.0 ? "#2c5f8a" : "#c0392b";
    svg += "<rect x=\"" + detail::svg_num(x) + "\" y=\"" + detail::svg_num(y) + "\" width=\"" +
           detail::svg_num(w) + "\" height=\"" + detail::svg_num(kRow - 12.0) + "\" fill=\"" +
           color + "\"/>\n";
    svg += "<text x=\"" + detail::svg_num(score >= 0.0 ? mid - 8.0 : mid + 8.0) + "\" y=\"" +
           detail::svg_num(y + kRow / 2.0) + "\" font-size=\"13\" text-anchor=\"" +
           (score >= 0.0 ? "end" : "start") + "\" fill=\"#222222\">" + report.ranking[i] + " (" +
           fmt_double(score) + ")</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace cfglyph
