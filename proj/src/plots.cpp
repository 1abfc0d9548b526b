#include "cinempc/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace cinempc {

namespace {

struct Series {
  std::string name;
  std::string color;
  bool dashed = false;
  std::vector<std::optional<double>> y;  // gaps break the line
};

struct Panel {
  std::string ylabel;
  bool log = false;
  std::vector<Series> series;
};

constexpr double kWidth = 900;
constexpr double kPanelHeight = 260;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 45;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
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

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= 6) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

// Axis range over finite (positive, for log panels) values.
std::pair<double, double> y_range(const Panel& p) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : p.series) {
    for (const auto& v : s.y) {
      if (!v || !std::isfinite(*v) || (p.log && *v <= 0)) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  if (!std::isfinite(lo)) return p.log ? std::pair{1e-3, 1.0} : std::pair{0.0, 1.0};
  if (p.log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10;
    return {lo, hi};
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = std::max(0.5, 0.1 * std::abs(hi));
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void write_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& t,
               const std::vector<Panel>& panels, const std::vector<double>& markers) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  const double height = kPanelHeight * static_cast<double>(panels.size());

  double t0 = t.front(), t1 = t.back();
  if (t1 - t0 <= 0) {
    t0 -= 0.5;
    t1 += 0.5;
  }
  auto sx = [&](double v) { return kLeft + (v - t0) / (t1 - t0) * plot_w; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<title>" << escape(title) << "</title>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t k = 0; k < panels.size(); ++k) {
    const Panel& p = panels[k];
    const double top = kTop + kPanelHeight * static_cast<double>(k);
    const auto [lo, hi] = y_range(p);
    auto sy = [&, lo = lo, hi = hi](double v) {
      if (p.log) return top + plot_h - (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) * plot_h;
      return top + plot_h - (v - lo) / (hi - lo) * plot_h;
    };

    svg << "<g>\n";
    if (k == 0) svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

    std::vector<double> yticks;
    if (p.log) {
      for (double d = std::log10(lo); d <= std::log10(hi) + 1e-9; d += 1) yticks.push_back(std::pow(10.0, d));
      if (yticks.size() > 8) {
        std::vector<double> thinned;
        const std::size_t every = (yticks.size() + 7) / 8;
        for (std::size_t i = 0; i < yticks.size(); i += every) thinned.push_back(yticks[i]);
        yticks = thinned;
      }
    } else {
      yticks = linear_ticks(lo, hi);
    }
    for (double v : yticks) {
      const double y = sy(v);
      svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + plot_w) << "\" y2=\""
          << num(y) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label(v) << "</text>\n";
    }
    for (double v : linear_ticks(t0, t1)) {
      const double x = sx(v);
      svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(top + plot_h + 4) << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << num(x) << "\" y=\"" << num(top + plot_h + 16) << "\" text-anchor=\"middle\">" << label(v) << "</text>\n";
    }
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(top + plot_h + 32) << "\" text-anchor=\"middle\">time [s]</text>\n";
    svg << "<text transform=\"translate(" << num(18) << ',' << num(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(p.ylabel) << "</text>\n";

    for (double m : markers) {
      if (m < t0 || m > t1) continue;
      svg << "<line class=\"switch\" x1=\"" << num(sx(m)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(m))
          << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    }

    double legend_y = top + 12;
    for (const auto& s : p.series) {
      std::string pts;
      auto flush = [&] {
        if (pts.empty()) return;
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << pts << "\"/>\n";
        pts.clear();
      };
      for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& v = s.y[i];
        if (!v || !std::isfinite(*v) || (p.log && *v <= 0)) {
          flush();
          continue;
        }
        const double y = std::clamp(sy(*v), top, top + plot_h);
        pts += num(sx(t[i])) + ',' + num(y) + ' ';
      }
      flush();
      svg << "<line x1=\"" << num(kLeft + plot_w + 10) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(kLeft + plot_w + 30)
          << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      svg << "<text x=\"" << num(kLeft + plot_w + 35) << "\" y=\"" << num(legend_y + 4) << "\">" << escape(s.name) << "</text>\n";
      legend_y += 16;
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << svg.str();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

template <typename F>
std::vector<std::optional<double>> column(const Trace& trace, F f) {
  std::vector<std::optional<double>> v;
  v.reserve(trace.records.size());
  for (const auto& r : trace.records) v.push_back(f(r));
  return v;
}

bool any(const std::vector<std::optional<double>>& v) {
  return std::any_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
}

}  // namespace

std::vector<std::filesystem::path> render_plots(const Trace& trace, const std::vector<double>& sequence_starts,
                                                const std::filesystem::path& out_dir) {
  if (trace.records.empty()) throw std::invalid_argument("render_plots: empty trace");
  std::filesystem::create_directories(out_dir);
  const std::vector<double> t = [&] {
    std::vector<double> v;
    for (const auto& r : trace.records) v.push_back(r.time);
    return v;
  }();
  // The first sequence starts with the run; only switches get markers.
  std::vector<double> markers;
  for (double s : sequence_starts) {
    if (s > t.front()) markers.push_back(s);
  }

  std::vector<std::filesystem::path> paths;

  Panel cost{"cost", true, {}};
  cost.series.push_back({"total", "black", false, column(trace, [](const TraceRecord& r) { return r.cost.total; })});
  cost.series.push_back({"J_dof", "#1f77b4", false, column(trace, [](const TraceRecord& r) { return r.cost.j_dof; })});
  cost.series.push_back({"J_im", "#2ca02c", false, column(trace, [](const TraceRecord& r) { return r.cost.j_im; })});
  cost.series.push_back({"J_p", "#d62728", false, column(trace, [](const TraceRecord& r) { return r.cost.j_p; })});
  paths.push_back(out_dir / "cost.svg");
  write_svg(paths.back(), "Cost per step", t, {cost}, markers);

  Panel dof{"distance [m]", false, {}};
  dof.series.push_back({"near D_n", "#1f77b4", false, column(trace, [](const TraceRecord& r) { return r.dof.near; })});
  dof.series.push_back({"far D_f", "#d62728", false, column(trace, [](const TraceRecord& r) { return r.dof.far; })});
  auto dn = column(trace, [](const TraceRecord& r) { return r.desired_near; });
  auto df = column(trace, [](const TraceRecord& r) { return r.desired_far; });
  if (any(dn)) dof.series.push_back({"desired near", "#1f77b4", true, std::move(dn)});
  if (any(df)) dof.series.push_back({"desired far", "#d62728", true, std::move(df)});
  paths.push_back(out_dir / "dof.svg");
  write_svg(paths.back(), "Depth of field", t, {dof}, markers);

  Panel f{"focal length [mm]", false,
          {{"f", "#1f77b4", false, column(trace, [](const TraceRecord& r) { return r.intrinsics.focal_length * 1000.0; })}}};
  Panel F{"focus distance [m]", false,
          {{"F", "#2ca02c", false, column(trace, [](const TraceRecord& r) { return r.intrinsics.focus_distance; })}}};
  Panel A{"aperture [f-stop]", false,
          {{"A", "#d62728", false, column(trace, [](const TraceRecord& r) { return r.intrinsics.aperture; })}}};
  paths.push_back(out_dir / "intrinsics.svg");
  write_svg(paths.back(), "Camera intrinsics", t, {f, F, A}, markers);
  return paths;
}

}  // namespace cinempc
