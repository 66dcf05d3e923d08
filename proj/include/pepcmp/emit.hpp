#pragma once

// CSV and SVG output of rate curves.
//
// CSV: header "method,engine,tau,sigma,rate", one row per sample, numbers
// printed with %.12g, rows ordered by (method, engine, tau), LF line endings.
// Empty sigma means a primal method; empty rate means the sample was skipped
// or the solver failed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pepcmp/sweep.hpp"

namespace pepcmp {

inline std::string format_g12(double v) { return config_detail::format_number(v); }

inline void write_csv(const std::vector<RateCurve>& curves, std::ostream& os) {
  struct Row {
    const RateCurve* curve;
    const Sample* sample;
  };
  std::vector<Row> rows;
  for (const auto& c : curves)
    for (const auto& s : c.samples) rows.push_back({&c, &s});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.curve->method != b.curve->method) return a.curve->method < b.curve->method;
    if (a.curve->engine != b.curve->engine) return a.curve->engine < b.curve->engine;
    return a.sample->tau < b.sample->tau;
  });
  os << "method,engine,tau,sigma,rate\n";
  for (const auto& r : rows) {
    os << r.curve->method << ',' << r.curve->engine << ',' << format_g12(r.sample->tau) << ',';
    if (r.sample->sigma) os << format_g12(*r.sample->sigma);
    os << ',';
    if (r.sample->rate) os << format_g12(*r.sample->rate);
    os << '\n';
  }
}

inline std::string to_csv(const std::vector<RateCurve>& curves) {
  std::ostringstream os;
  write_csv(curves, os);
  return os.str();
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

inline std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Static line plot: one series per curve, tau on a log or linear axis.
inline void write_svg(const std::vector<RateCurve>& curves, std::ostream& os, bool log_axis,
                      const std::string& title = {}) {
  const double W = 860, H = 520, left = 70, right = 230, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, rmax = 1.0;
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      tmin = std::min(tmin, s.tau);
      tmax = std::max(tmax, s.tau);
      if (s.rate) rmax = std::max(rmax, *s.rate);
    }
  }
  if (!std::isfinite(tmin)) tmin = 0.1, tmax = 10.0;
  if (tmax <= tmin) tmax = tmin * 10.0;
  const double ytop = std::ceil(rmax * 5.0) / 5.0;
  auto fx = [&](double t) {
    const double u = log_axis ? std::log10(t / tmin) / std::log10(tmax / tmin) : (t - tmin) / (tmax - tmin);
    return left + u * pw;
  };
  auto fy = [&](double r) { return top + ph * (1.0 - r / ytop); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#e377c2", "#8c564b",
                                  "#ff7f0e", "#17becf", "#7f7f7f", "#bcbd22"};

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << " " << H << "\">\n";
  if (!curves.empty()) {
    os << "<!-- problem fingerprint " << std::hex << curves.front().fingerprint << std::dec << " -->\n";
  }
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"15\">" << detail::xml_escape(title) << "</text>\n";
  }
  os << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  // y ticks every 0.2
  for (double r = 0.0; r <= ytop + 1e-9; r += 0.2) {
    const double y = fy(r);
    os << "<line x1=\"" << left << "\" y1=\"" << detail::fixed(y) << "\" x2=\"" << left + pw << "\" y2=\""
       << detail::fixed(y) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << detail::fixed(y + 4) << "\" text-anchor=\"end\">"
       << detail::fixed(r, 1) << "</text>\n";
  }
  // x ticks: decades on a log axis, five intervals otherwise
  std::vector<double> xt;
  if (log_axis) {
    for (double d = std::pow(10.0, std::floor(std::log10(tmin))); d <= tmax * (1 + 1e-12); d *= 10.0) {
      if (d >= tmin * (1 - 1e-12)) xt.push_back(d);
    }
    if (xt.empty()) xt = {tmin, tmax};
  } else {
    for (int i = 0; i <= 5; ++i) xt.push_back(tmin + (tmax - tmin) * i / 5.0);
  }
  for (double t : xt) {
    const double x = fx(t);
    os << "<line x1=\"" << detail::fixed(x) << "\" y1=\"" << top << "\" x2=\"" << detail::fixed(x) << "\" y2=\""
       << top + ph << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << detail::fixed(x) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
       << format_g12(t) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">step size tau"
     << (log_axis ? " (log scale)" : "") << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << "contraction factor</text>\n";

  for (size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = palette[i % (sizeof palette / sizeof *palette)];
    const bool markers = c.engine == "pep";
    std::string path;
    for (const auto& s : c.samples) {
      if (!s.rate) {
        path += "|";
        continue;
      }
      const double x = fx(s.tau), y = fy(*s.rate);
      if (markers) {
        os << "<circle cx=\"" << detail::fixed(x) << "\" cy=\"" << detail::fixed(y) << "\" r=\"2.5\" fill=\""
           << color << "\"/>\n";
      }
      path += (path.empty() || path.back() == '|' ? "M" : "L") + detail::fixed(x) + " " + detail::fixed(y) + " ";
    }
    path.erase(std::remove(path.begin(), path.end(), '|'), path.end());
    if (!path.empty()) {
      os << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\""
         << (markers ? " stroke-opacity=\"0.35\"" : "")
         << (c.engine.rfind("closed_form_", 0) == 0 ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    const double ly = top + 14 + 16 * static_cast<double>(i);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 36 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly << "\">" << detail::xml_escape(c.method + " " + c.engine)
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
}

}  // namespace pepcmp
