// SPDX-License-Identifier: Apache-2.0
#include "driftbench/bench/plots.hpp"

#include <algorithm>
#include <cstdio>

#include "driftbench/common/errors.hpp"
#include "driftbench/common/json_writer.hpp"

namespace driftbench::bench {
namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 140.0;
constexpr double kGap = 20.0;
constexpr double kTop = 60.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string polyline(const std::vector<double>& ys, std::size_t x0, std::size_t total, double lo, double hi,
                     double ox, double oy, const char* style) {
  std::string pts;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double x = ox + (static_cast<double>(x0 + k) / static_cast<double>(total - 1)) * kPanelW;
    const double y = oy + kPanelH - (ys[k] - lo) / (hi - lo) * kPanelH;
    if (!pts.empty()) pts += ' ';
    pts += fmt(x) + "," + fmt(y);
  }
  return "    <polyline " + std::string(style) + " points=\"" + pts + "\"/>\n";
}

std::string panel(const synth::WindowPair& pair, const std::vector<double>& pred, double ox, double oy,
                  const std::string& label) {
  double lo = 0.0, hi = 0.0;
  for (const auto* v : {&pair.input, &pair.output, &pred}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const std::size_t total = pair.input.size() + pair.output.size();
  const std::size_t split = pair.input.size();
  const double xs = ox + static_cast<double>(split) / static_cast<double>(total - 1) * kPanelW;
  std::string out = "  <g class=\"panel\">\n";
  out += "    <rect x=\"" + fmt(ox) + "\" y=\"" + fmt(oy) + "\" width=\"" + fmt(kPanelW) + "\" height=\"" +
         fmt(kPanelH) + "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
  out += "    <line x1=\"" + fmt(xs) + "\" y1=\"" + fmt(oy) + "\" x2=\"" + fmt(xs) + "\" y2=\"" + fmt(oy + kPanelH) +
         "\" stroke=\"#dddddd\" stroke-dasharray=\"2,2\"/>\n";
  out += "    <text x=\"" + fmt(ox + 4) + "\" y=\"" + fmt(oy + 12) + "\" font-size=\"10\">" + escape(label) + "</text>\n";
  out += polyline(pair.input, 0, total, lo, hi, ox, oy, "class=\"input\" fill=\"none\" stroke=\"#888888\"");
  out += polyline(pair.output, split, total, lo, hi, ox, oy, "class=\"truth\" fill=\"none\" stroke=\"#1f77b4\"");
  out += polyline(pred, split, total, lo, hi, ox, oy,
                  "class=\"prediction\" fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"4,2\"");
  out += "  </g>\n";
  return out;
}

}  // namespace

std::string render_episode_svg(const synth::Episode& ep, const adapt::EpisodePredictions& pred,
                               const std::string& title) {
  if (pred.support.empty() && pred.query.empty()) throw ContractError("no predictions to plot");
  if (pred.support.size() != ep.support.size() || pred.query.size() != ep.query.size()) {
    throw DimensionError("prediction count does not match the episode's support/query pairs");
  }
  auto check = [](const std::vector<synth::WindowPair>& pairs, const std::vector<std::vector<double>>& p) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (p[k].size() != pairs[k].output.size()) throw DimensionError("prediction length does not match the output window");
    }
  };
  check(ep.support, pred.support);
  check(ep.query, pred.query);

  const std::size_t rows = std::max(ep.support.size(), ep.query.size());
  const double width = 2 * kPanelW + 3 * kGap;
  const double height = kTop + static_cast<double>(rows) * (kPanelH + kGap) + kGap;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "  <text x=\"" + fmt(kGap) + "\" y=\"22\" font-size=\"14\">" + escape(title) + "</text>\n";
  out += "  <text x=\"" + fmt(kGap) + "\" y=\"48\" font-size=\"12\">support: adaptation phase</text>\n";
  out += "  <text x=\"" + fmt(2 * kGap + kPanelW) + "\" y=\"48\" font-size=\"12\">query: test phase</text>\n";
  for (std::size_t k = 0; k < ep.support.size(); ++k) {
    out += panel(ep.support[k], pred.support[k], kGap, kTop + static_cast<double>(k) * (kPanelH + kGap),
                 "support " + std::to_string(k));
  }
  for (std::size_t k = 0; k < ep.query.size(); ++k) {
    out += panel(ep.query[k], pred.query[k], 2 * kGap + kPanelW, kTop + static_cast<double>(k) * (kPanelH + kGap),
                 "query " + std::to_string(k));
  }
  out += "</svg>\n";
  return out;
}

void emit_plots(const synth::Episode& ep, const adapt::EpisodePredictions& pred, const std::string& path,
                const std::string& title) {
  write_text_file(path, render_episode_svg(ep, pred, title));
}

}  // namespace driftbench::bench
