#include "keyforge/bench.hpp"
#include "keyforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace kf {

namespace {

constexpr const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

using Series = std::map<std::string, std::map<unsigned, double>>;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string &s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += ch;
    }
  }
  return out;
}

/// Log-scaled value axis: values are clamped to a small positive floor.
struct Axis {
  double lo, hi;
  double y(double v) const {
    double t = (std::log10(std::max(v, lo)) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return kTop + (1.0 - t) * (kHeight - kTop - kBottom);
  }
};

Axis make_axis(const Series &series) {
  double lo = 1e300, hi = 0;
  for (const auto &[name, points] : series)
    for (const auto &[x, v] : points)
      if (v > 0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (hi <= 0) {
    lo = 1e-3;
    hi = 1;
  }
  lo = std::pow(10.0, std::floor(std::log10(lo)));
  hi = std::pow(10.0, std::ceil(std::log10(hi)));
  if (hi <= lo)
    hi = lo * 10;
  return {lo, hi};
}

void frame(std::ostringstream &out, const std::string &title, const std::string &ylabel, const Axis &axis,
           const std::vector<unsigned> &xs, const std::function<double(std::size_t)> &xpos) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom;
  out << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  for (double d = axis.lo; d <= axis.hi * 1.0001; d *= 10) {
    double y = axis.y(d);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << x1 << "\" y2=\"" << num(y)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label(d) << "</text>\n";
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<text x=\"" << num(xpos(i)) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << xs[i]
        << "%</text>\n";
  out << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">overhead</text>\n";
  out << "<text transform=\"translate(16," << num((kTop + y0) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";
}

void legend(std::ostringstream &out, const Series &series) {
  std::size_t i = 0;
  for (const auto &[name, points] : series) {
    double y = kTop + 10 + 18 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << num(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[i % std::size(kPalette)] << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 32 << "\" y=\"" << num(y + 1) << "\">" << escape(name) << "</text>\n";
    ++i;
  }
}

std::vector<unsigned> overheads_of(const Series &series) {
  std::set<unsigned> xs;
  for (const auto &[name, points] : series)
    for (const auto &[x, v] : points)
      xs.insert(x);
  return {xs.begin(), xs.end()};
}

std::string line_chart(const Series &series, const std::string &title, const std::string &ylabel) {
  auto xs = overheads_of(series);
  Axis axis = make_axis(series);
  const double span = kWidth - kLeft - kRight;
  auto xpos = [&](std::size_t i) {
    return kLeft + span * (static_cast<double>(i) + 0.5) / static_cast<double>(std::max<std::size_t>(1, xs.size()));
  };
  std::ostringstream out;
  frame(out, title, ylabel, axis, xs, xpos);
  std::size_t color = 0;
  for (const auto &[name, points] : series) {
    const char *c = kPalette[color++ % std::size(kPalette)];
    std::string path;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto it = points.find(xs[i]);
      if (it == points.end())
        continue;
      path += (path.empty() ? "M" : " L") + num(xpos(i)) + "," + num(axis.y(it->second));
      out << "<circle cx=\"" << num(xpos(i)) << "\" cy=\"" << num(axis.y(it->second)) << "\" r=\"3\" fill=\"" << c
          << "\"/>\n";
    }
    out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
  }
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart(const Series &series, const std::string &title, const std::string &ylabel) {
  auto xs = overheads_of(series);
  Axis axis = make_axis(series);
  const double span = kWidth - kLeft - kRight;
  const double slot = span / static_cast<double>(std::max<std::size_t>(1, xs.size()));
  auto xpos = [&](std::size_t i) { return kLeft + slot * (static_cast<double>(i) + 0.5); };
  std::ostringstream out;
  frame(out, title, ylabel, axis, xs, xpos);
  const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(1, series.size()));
  const double base = axis.y(axis.lo);
  std::size_t s = 0;
  for (const auto &[name, points] : series) {
    const char *c = kPalette[s % std::size(kPalette)];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto it = points.find(xs[i]);
      if (it == points.end())
        continue;
      double x = kLeft + slot * static_cast<double>(i) + slot * 0.1 + bar * static_cast<double>(s);
      double y = axis.y(it->second);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar) << "\" height=\""
          << num(base - y) << "\" fill=\"" << c << "\"/>\n";
    }
    ++s;
  }
  legend(out, series);
  out << "</svg>\n";
  return out.str();
}

} // namespace

std::string emit_plot(const SummaryTable &table, PlotKind kind) {
  if (table.groups.empty())
    throw Error(ErrorKind::EmptyInput, "summary table is empty");
  Series series;
  const std::string dimension = kind == PlotKind::TimeVsOverhead ? "scheme" : "backend";
  bool censored = false;
  for (const auto &g : table.groups) {
    if (g.dimension != dimension || g.solved_only)
      continue;
    censored = censored || g.timeouts > 0;
    double v = kind == PlotKind::MemoryVsOverhead ? g.memory.median / (1024.0 * 1024.0) : g.time.sum;
    series[g.key][g.overhead] = v;
  }
  const std::string note = censored ? " (timeouts counted at the limit)" : "";
  switch (kind) {
  case PlotKind::TimeVsOverhead: return line_chart(series, "Total attack time per scheme" + note, "time [s]");
  case PlotKind::BackendBars: return bar_chart(series, "Total attack time per backend" + note, "time [s]");
  case PlotKind::MemoryVsOverhead: return line_chart(series, "Median peak memory per backend", "memory [MiB]");
  }
  return {};
}

} // namespace kf
