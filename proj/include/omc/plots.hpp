// Copyright 2026 The omc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Self-contained SVG charts of sweep results.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "omc/format.hpp"
#include "omc/harness.hpp"

namespace omc {

namespace svg {

inline constexpr int kWidth = 640;
inline constexpr int kHeight = 420;
inline constexpr int kLeft = 80, kRight = 30, kTop = 40, kBottom = 60;

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  return os.str();
}

inline std::string close() { return "</svg>\n"; }

inline std::string notice(const std::string& title, const std::string& text) {
  return open(title) + "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"" + std::to_string(kHeight / 2) +
         "\" text-anchor=\"middle\" fill=\"#666\">" + escape(text) + "</text>\n" + close();
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double map(double v, double px_lo, double px_hi) const {
    double a = lo, b = hi, x = v;
    if (log) {
      a = std::log10(a);
      b = std::log10(b);
      x = std::log10(std::max(v, 1e-300));
    }
    const double t = b > a ? (x - a) / (b - a) : 0.5;
    return px_lo + t * (px_hi - px_lo);
  }
};

inline Axis fit(const std::vector<double>& v, bool log) {
  Axis a;
  a.log = log;
  if (v.empty()) return a;
  a.lo = *std::min_element(v.begin(), v.end());
  a.hi = *std::max_element(v.begin(), v.end());
  if (log) {
    a.lo = std::max(a.lo, 1e-12) / 1.5;
    a.hi = std::max(a.hi, a.lo) * 1.5;
  } else {
    const double pad = a.hi > a.lo ? 0.08 * (a.hi - a.lo) : std::max(0.5, 0.1 * std::abs(a.lo));
    a.lo -= pad;
    a.hi += pad;
  }
  return a;
}

inline std::vector<double> ticks(const Axis& a) {
  std::vector<double> t;
  if (a.log) {
    for (double e = std::floor(std::log10(a.lo)); e <= std::ceil(std::log10(a.hi)); e += 1.0) {
      const double v = std::pow(10.0, e);
      if (v >= a.lo && v <= a.hi) t.push_back(v);
    }
    if (t.empty()) t = {a.lo, a.hi};
    return t;
  }
  for (int k = 0; k <= 5; ++k) t.push_back(a.lo + (a.hi - a.lo) * k / 5.0);
  return t;
}

inline std::string frame(const Axis& x, const Axis& y, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  const int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (double t : ticks(x)) {
    const double px = x.map(t, x0, x1);
    os << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 5
       << "\" stroke=\"black\"/><text x=\"" << px << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
       << fmt_general(t, 3) << "</text>\n";
  }
  for (double t : ticks(y)) {
    const double py = y.map(t, y0, y1);
    os << "<line x1=\"" << x0 - 5 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
       << "\" stroke=\"black\"/><text x=\"" << x0 - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
       << fmt_general(t, 3) << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n"
     << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (y0 + y1) / 2 << ")\">" << escape(ylabel) << "</text>\n";
  return os.str();
}

inline const char* color(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return palette[k % 8];
}

inline std::string legend(const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const int y = kTop + 4 + static_cast<int>(k) * 16;
    os << "<rect x=\"" << kWidth - kRight - 140 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
       << color(k) << "\"/><text x=\"" << kWidth - kRight - 125 << "\" y=\"" << y + 9 << "\">"
       << escape(names[k]) << "</text>\n";
  }
  return os.str();
}

}  // namespace svg

// Lowest successful budget per D, one line per problem; points carry the
// mean runtime at that budget as a tooltip.
inline std::string frontier_svg(const std::vector<SweepRow>& rows, double threshold = kSuccessThreshold) {
  const std::string title = "Success frontier (mean C2ST <= " + fmt_general(threshold, 3) + ")";
  const auto front = extract_frontier(rows, threshold);
  if (front.empty()) return svg::notice(title, rows.empty() ? "no data" : "no cell reached the threshold");
  std::vector<double> xs, ys;
  std::vector<std::string> problems;
  for (const auto& c : front) {
    xs.push_back(static_cast<double>(c.dim));
    ys.push_back(static_cast<double>(c.seeds));
    if (std::find(problems.begin(), problems.end(), c.problem) == problems.end()) problems.push_back(c.problem);
  }
  const svg::Axis ax = svg::fit(xs, false), ay = svg::fit(ys, true);
  const int x0 = svg::kLeft, x1 = svg::kWidth - svg::kRight, y0 = svg::kHeight - svg::kBottom, y1 = svg::kTop;
  std::ostringstream os;
  os << svg::open(title) << svg::frame(ax, ay, "parameter dimension D", "minimum budget S (log)");
  for (std::size_t p = 0; p < problems.size(); ++p) {
    std::ostringstream path;
    bool first = true;
    for (const auto& c : front) {
      if (c.problem != problems[p]) continue;
      const double px = ax.map(static_cast<double>(c.dim), x0, x1);
      const double py = ay.map(static_cast<double>(c.seeds), y0, y1);
      path << (first ? "M" : " L") << px << ' ' << py;
      first = false;
      os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"4\" fill=\"" << svg::color(p) << "\"><title>"
         << svg::escape(c.problem) << " D=" << c.dim << " S=" << c.seeds << " c2st=" << fmt_double(c.mean_c2st)
         << " runtime_s=" << fmt_double(c.mean_runtime) << "</title></circle>\n";
    }
    os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << svg::color(p) << "\"/>\n";
  }
  os << svg::legend(problems) << svg::close();
  return os.str();
}

// Mean C2ST per (D, S) cell of one problem; cells skipped by early stopping
// are drawn hatched grey.
inline std::string heatmap_svg(const std::vector<SweepRow>& rows, const std::string& problem = "") {
  std::string which = problem;
  if (which.empty() && !rows.empty()) which = rows.front().problem;
  const std::string title = "Mean C2ST: " + (which.empty() ? std::string("(none)") : which);
  std::vector<SweepRow> sel;
  for (const auto& r : rows)
    if (r.problem == which) sel.push_back(r);
  if (sel.empty()) return svg::notice(title, "no data");
  std::vector<std::size_t> dims, budgets;
  for (const auto& r : sel) {
    if (std::find(dims.begin(), dims.end(), r.dim) == dims.end()) dims.push_back(r.dim);
    if (std::find(budgets.begin(), budgets.end(), r.seeds) == budgets.end()) budgets.push_back(r.seeds);
  }
  std::sort(dims.begin(), dims.end());
  std::sort(budgets.begin(), budgets.end());
  const auto cells = summarize(sel);
  const double cw = static_cast<double>(svg::kWidth - svg::kLeft - svg::kRight) / static_cast<double>(budgets.size());
  const double ch = static_cast<double>(svg::kHeight - svg::kTop - svg::kBottom) / static_cast<double>(dims.size());
  std::ostringstream os;
  os << svg::open(title);
  for (std::size_t di = 0; di < dims.size(); ++di) {
    for (std::size_t si = 0; si < budgets.size(); ++si) {
      const double x = svg::kLeft + static_cast<double>(si) * cw;
      const double y = svg::kTop + static_cast<double>(dims.size() - 1 - di) * ch;
      auto it = std::find_if(cells.begin(), cells.end(),
                             [&](const CellSummary& c) { return c.dim == dims[di] && c.seeds == budgets[si]; });
      os << "<g class=\"cell\" data-d=\"" << dims[di] << "\" data-s=\"" << budgets[si] << "\">";
      if (it == cells.end()) {
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
           << "\" fill=\"#dddddd\" stroke=\"white\"/><text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4
           << "\" text-anchor=\"middle\" fill=\"#888\">n/a</text>";
      } else {
        // 0.5 (indistinguishable) is green, 1.0 is red.
        const double t = std::clamp((it->mean_c2st - 0.5) / 0.5, 0.0, 1.0);
        const int red = static_cast<int>(std::lround(40 + 200 * t));
        const int green = static_cast<int>(std::lround(200 - 160 * t));
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"rgb("
           << red << ',' << green << ",80)\" stroke=\"white\"/><text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4
           << "\" text-anchor=\"middle\" fill=\"white\">" << fmt_general(it->mean_c2st, 3) << "</text>";
      }
      os << "</g>\n";
    }
  }
  for (std::size_t si = 0; si < budgets.size(); ++si)
    os << "<text x=\"" << svg::kLeft + (static_cast<double>(si) + 0.5) * cw << "\" y=\"" << svg::kHeight - svg::kBottom + 18
       << "\" text-anchor=\"middle\">" << budgets[si] << "</text>\n";
  for (std::size_t di = 0; di < dims.size(); ++di)
    os << "<text x=\"" << svg::kLeft - 8 << "\" y=\"" << svg::kTop + (static_cast<double>(dims.size() - 1 - di) + 0.5) * ch + 4
       << "\" text-anchor=\"end\">" << dims[di] << "</text>\n";
  os << "<text x=\"" << (svg::kWidth + svg::kLeft - svg::kRight) / 2 << "\" y=\"" << svg::kHeight - 18
     << "\" text-anchor=\"middle\">budget S</text>\n"
     << "<text x=\"18\" y=\"" << svg::kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << svg::kHeight / 2 << ")\">parameter dimension D</text>\n"
     << svg::close();
  return os.str();
}

// One point per run: runtime against C2ST.
inline std::string scatter_svg(const std::vector<SweepRow>& rows) {
  const std::string title = "C2ST vs runtime";
  if (rows.empty()) return svg::notice(title, "no data");
  std::vector<double> xs, ys;
  std::vector<std::string> problems;
  for (const auto& r : rows) {
    xs.push_back(std::max(r.runtime_seconds, 1e-3));
    ys.push_back(r.c2st);
    if (std::find(problems.begin(), problems.end(), r.problem) == problems.end()) problems.push_back(r.problem);
  }
  svg::Axis ay = svg::fit(ys, false);
  ay.lo = std::min(ay.lo, 0.45);
  ay.hi = std::max(ay.hi, 1.0);
  const svg::Axis ax = svg::fit(xs, true);
  const int x0 = svg::kLeft, x1 = svg::kWidth - svg::kRight, y0 = svg::kHeight - svg::kBottom, y1 = svg::kTop;
  std::ostringstream os;
  os << svg::open(title) << svg::frame(ax, ay, "runtime [s] (log)", "C2ST");
  const double ty = ay.map(kSuccessThreshold, y0, y1);
  os << "<line x1=\"" << x0 << "\" y1=\"" << ty << "\" x2=\"" << x1 << "\" y2=\"" << ty
     << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const std::size_t p = static_cast<std::size_t>(std::find(problems.begin(), problems.end(), r.problem) - problems.begin());
    os << "<circle cx=\"" << ax.map(xs[k], x0, x1) << "\" cy=\"" << ay.map(r.c2st, y0, y1) << "\" r=\"3.5\" fill=\""
       << svg::color(p) << "\"><title>" << svg::escape(r.problem) << " D=" << r.dim << " S=" << r.seeds
       << " rep=" << r.rep << " c2st=" << fmt_double(r.c2st) << "</title></circle>\n";
  }
  os << svg::legend(problems) << svg::close();
  return os.str();
}

}  // namespace omc
