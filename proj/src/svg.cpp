#include "thermobound/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace thermo::io {

namespace {

struct Series {
  std::string key;    // params json (color group)
  std::string kind;   // bound kind (dash group)
  std::string label;
  std::vector<std::pair<double, double>> points;
};

const char* kPalette[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string num_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Grouping key: the model params without the swept variable, so a sweep
// over n or N forms one curve per kind instead of one point per row.
std::string series_key(const std::string& params_json, const std::string& sweep_var) {
  json p = json::parse(params_json, nullptr, false);
  if (p.is_discarded() || !p.is_object()) return params_json;
  p.erase(sweep_var);
  return p.dump();
}

std::string series_label(const std::string& kind, const std::string& key) {
  std::string label = kind;
  const json p = json::parse(key, nullptr, false);
  if (!p.is_discarded() && p.is_object()) {
    if (p.contains("n")) label += " n=" + num_label(p["n"].get<double>());
    if (p.contains("N")) label += " N=" + num_label(p["N"].get<double>());
    if (p.contains("c")) label += " c=" + num_label(p["c"].get<double>());
  }
  return label;
}

bool dashed_kind(const std::string& kind) { return kind == "CCRLB" || kind == "QCRLB"; }

struct AxisScale {
  bool log = false;
  double lo = 0, hi = 1;  // data range (log10 applied when log)
  double pix0 = 0, pix1 = 1;

  double to_pix(double v) const {
    const double t = log ? std::log10(v) : v;
    return pix0 + (t - lo) / (hi - lo) * (pix1 - pix0);
  }
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double s : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * s >= raw) {
      step = mag * s;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

std::vector<double> decade_ticks(double lo10, double hi10) {
  std::vector<double> ticks;
  for (double k = std::ceil(lo10 - 1e-9); k <= hi10 + 1e-9; k += 1.0) {
    ticks.push_back(std::pow(10.0, k));
  }
  return ticks;
}

}  // namespace

std::string emit_plot(const Table& table, const PlotStyle& style) {
  if (table.rows.empty()) throw std::domain_error("cannot plot an empty table");
  std::string sweep_var;
  for (const TableRow& r : table.rows) {
    if (!r.sweep_value) throw std::domain_error("cannot plot rows without a sweep value");
    if (sweep_var.empty()) sweep_var = r.sweep_var;
    if (r.sweep_var != sweep_var) {
      throw std::domain_error("mixed sweep variables in table: '" + sweep_var + "' vs '" +
                              r.sweep_var + "'");
    }
  }
  if (sweep_var.empty()) throw std::domain_error("table rows carry no sweep variable");

  // group into series, preserving first-appearance order
  std::vector<Series> series;
  std::vector<std::string> color_keys;
  for (const TableRow& r : table.rows) {
    const std::string key = series_key(r.model_params_json, sweep_var);
    auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) {
      return s.kind == r.kind && s.key == key;
    });
    if (it == series.end()) {
      Series s;
      s.key = key;
      s.kind = r.kind;
      s.label = series_label(r.kind, key);
      series.push_back(std::move(s));
      it = series.end() - 1;
    }
    it->points.emplace_back(*r.sweep_value, r.value);
    if (std::find(color_keys.begin(), color_keys.end(), key) == color_keys.end()) {
      color_keys.push_back(key);
    }
  }
  for (Series& s : series) {
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  const bool log_x = style.log_x.value_or(sweep_var == "n");
  const bool log_y = style.log_y.value_or(true);

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (log_x && !(x > 0)) throw std::domain_error("log x-axis needs positive sweep values");
      if (log_y && !(y > 0)) throw std::domain_error("log y-axis needs positive bound values");
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  // degenerate ranges: pad so a single point sits mid-plot
  if (xmin == xmax) {
    if (log_x) { xmin /= 2; xmax *= 2; }
    else { const double d = std::max(1.0, std::abs(xmin) * 0.1); xmin -= d; xmax += d; }
  }
  if (ymin == ymax) {
    if (log_y) { ymin /= 2; ymax *= 2; }
    else { const double d = std::max(1.0, std::abs(ymin) * 0.1); ymin -= d; ymax += d; }
  }

  const double ml = 80, mr = 180, mt = 45, mb = 55;
  const double W = style.width, H = style.height;
  AxisScale xs, ys;
  xs.log = log_x;
  ys.log = log_y;
  const double xpad = 0.04, ypad = 0.06;
  const double xl = log_x ? std::log10(xmin) : xmin, xh = log_x ? std::log10(xmax) : xmax;
  const double yl = log_y ? std::log10(ymin) : ymin, yh = log_y ? std::log10(ymax) : ymax;
  xs.lo = xl - (xh - xl) * xpad;
  xs.hi = xh + (xh - xl) * xpad;
  ys.lo = yl - (yh - yl) * ypad;
  ys.hi = yh + (yh - yl) * ypad;
  xs.pix0 = ml;
  xs.pix1 = W - mr;
  ys.pix0 = H - mb;  // y grows downward in SVG
  ys.pix1 = mt;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << style.width
      << "\" height=\"" << style.height << "\" viewBox=\"0 0 " << style.width << " "
      << style.height << "\">\n";
  svg << "  <metadata id=\"run-config\">" << xml_escape(table.config.dump()) << "</metadata>\n";
  svg << "  <rect width=\"" << style.width << "\" height=\"" << style.height
      << "\" fill=\"white\"/>\n";

  // axes box
  svg << "  <rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\"" << px(W - ml - mr)
      << "\" height=\"" << px(H - mt - mb)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // ticks
  const std::vector<double> xticks = log_x ? decade_ticks(xs.lo, xs.hi) : linear_ticks(xs.lo, xs.hi);
  for (double t : xticks) {
    const double p = xs.to_pix(t);
    if (p < ml - 0.5 || p > W - mr + 0.5) continue;
    svg << "  <line x1=\"" << px(p) << "\" y1=\"" << px(H - mb) << "\" x2=\"" << px(p)
        << "\" y2=\"" << px(H - mb + 6) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "  <text x=\"" << px(p) << "\" y=\"" << px(H - mb + 20)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << num_label(t) << "</text>\n";
  }
  const std::vector<double> yticks = log_y ? decade_ticks(ys.lo, ys.hi) : linear_ticks(ys.lo, ys.hi);
  for (double t : yticks) {
    const double p = ys.to_pix(t);
    if (p < mt - 0.5 || p > H - mb + 0.5) continue;
    svg << "  <line x1=\"" << px(ml - 6) << "\" y1=\"" << px(p) << "\" x2=\"" << px(ml)
        << "\" y2=\"" << px(p) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "  <text x=\"" << px(ml - 9) << "\" y=\"" << px(p + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << num_label(t)
        << "</text>\n";
  }

  // series
  for (const Series& s : series) {
    const size_t color_idx =
        std::find(color_keys.begin(), color_keys.end(), s.key) - color_keys.begin();
    const char* color = kPalette[color_idx % (sizeof kPalette / sizeof *kPalette)];
    const bool dashed = dashed_kind(s.kind);
    if (s.points.size() == 1) {
      const auto& [x, y] = s.points.front();
      svg << "  <circle cx=\"" << px(xs.to_pix(x)) << "\" cy=\"" << px(ys.to_pix(y))
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
      if (dashed) svg << " stroke-dasharray=\"7,4\"";
      svg << " points=\"";
      for (size_t i = 0; i < s.points.size(); ++i) {
        if (i) svg << ' ';
        svg << px(xs.to_pix(s.points[i].first)) << ',' << px(ys.to_pix(s.points[i].second));
      }
      svg << "\"/>\n";
    }
  }

  // legend
  const double lx = W - mr + 14;
  double ly = mt + 10;
  for (const Series& s : series) {
    const size_t color_idx =
        std::find(color_keys.begin(), color_keys.end(), s.key) - color_keys.begin();
    const char* color = kPalette[color_idx % (sizeof kPalette / sizeof *kPalette)];
    svg << "  <line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(lx + 28)
        << "\" y2=\"" << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (dashed_kind(s.kind)) svg << " stroke-dasharray=\"7,4\"";
    svg << "/>\n";
    svg << "  <text x=\"" << px(lx + 34) << "\" y=\"" << px(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.label)
        << "</text>\n";
    ly += 20;
  }

  // labels and title
  const std::string xlabel = style.x_label.empty() ? sweep_var : style.x_label;
  const std::string title = style.title.empty() ? sweep_var + " sweep" : style.title;
  svg << "  <text x=\"" << px(ml + (W - ml - mr) / 2) << "\" y=\"" << px(H - 12)
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
      << xml_escape(xlabel) << "</text>\n";
  svg << "  <text x=\"18\" y=\"" << px(mt + (H - mt - mb) / 2)
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px(mt + (H - mt - mb) / 2) << ")\">" << xml_escape(style.y_label) << "</text>\n";
  svg << "  <text x=\"" << px(W / 2) << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\" "
         "text-anchor=\"middle\">"
      << xml_escape(title) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace thermo::io
