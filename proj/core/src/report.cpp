#include "vsf/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vsf/errors.hpp"

namespace vsf {

namespace {

struct BoxStats {
  double lo, q1, med, q3, hi;
};

BoxStats box_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  auto med_of = [&](std::size_t a, std::size_t b) {  // [a, b)
    const std::size_t m = b - a;
    return m % 2 ? v[a + m / 2] : 0.5 * (v[a + m / 2 - 1] + v[a + m / 2]);
  };
  BoxStats s;
  s.lo = v.front();
  s.hi = v.back();
  s.med = med_of(0, n);
  s.q1 = n > 1 ? med_of(0, n / 2) : v[0];
  s.q3 = n > 1 ? med_of((n + 1) / 2, n) : v[0];
  return s;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

std::string render_report_svg(const ExperimentResult& result,
                              const std::string& variant_a,
                              const std::string& variant_b) {
  const PairedStats st = compare_variants(result, variant_a, variant_b);
  const auto names = output_names(int(st.median_a.size()));
  const int n_out = int(st.median_a.size());

  // score range across both variants, padded
  double lo = 1e300, hi = -1e300;
  for (int o = 0; o < n_out; ++o)
    for (std::size_t i = 0; i < st.keys.size(); ++i) {
      lo = std::min({lo, st.scores_a[o][i], st.scores_b[o][i]});
      hi = std::max({hi, st.scores_a[o][i], st.scores_b[o][i]});
    }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const int box_panel_w = 90 * n_out + 70;
  const int panel_h = 320, margin_top = 40, margin_bottom = 50;
  const int plot_h = panel_h - margin_top - margin_bottom;
  const int scatter_x0 = box_panel_w + 60, scatter_w = 260;
  const int width = scatter_x0 + scatter_w + 40;
  auto sy = [&](double v) {
    return margin_top + plot_h * (hi - v) / (hi - lo);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << panel_h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << panel_h
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"10\" y=\"20\">R2 per output: " << variant_a
      << " (gray) vs " << variant_b << " (blue)</text>\n";

  // axis ticks for the box panel
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<line x1=\"48\" y1=\"" << fmt(sy(v)) << "\" x2=\""
        << box_panel_w - 10 << "\" y2=\"" << fmt(sy(v))
        << "\" stroke=\"#eee\"/>\n";
    svg << "<text x=\"8\" y=\"" << fmt(sy(v) + 4) << "\">" << fmt(v)
        << "</text>\n";
  }

  auto draw_box = [&](double cx, const BoxStats& b, const char* color) {
    const double w = 24;
    svg << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(sy(b.lo))
        << "\" x2=\"" << fmt(cx) << "\" y2=\"" << fmt(sy(b.hi))
        << "\" stroke=\"" << color << "\"/>\n";
    svg << "<rect x=\"" << fmt(cx - w / 2) << "\" y=\"" << fmt(sy(b.q3))
        << "\" width=\"" << fmt(w) << "\" height=\""
        << fmt(std::max(1.0, sy(b.q1) - sy(b.q3))) << "\" fill=\"" << color
        << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n";
    svg << "<line x1=\"" << fmt(cx - w / 2) << "\" y1=\"" << fmt(sy(b.med))
        << "\" x2=\"" << fmt(cx + w / 2) << "\" y2=\"" << fmt(sy(b.med))
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  };

  for (int o = 0; o < n_out; ++o) {
    const double gx = 70 + 90.0 * o;
    draw_box(gx + 12, box_stats(st.scores_a[o]), "#888888");
    draw_box(gx + 44, box_stats(st.scores_b[o]), "#3366cc");
    svg << "<text x=\"" << fmt(gx + 18) << "\" y=\"" << panel_h - 28 << "\">"
        << names[o] << "</text>\n";
  }

  // scatter: variant_b score against variant_a score, identity diagonal
  const int sx0 = scatter_x0, sy0 = margin_top;
  auto px = [&](double v) { return sx0 + scatter_w * (v - lo) / (hi - lo); };
  auto py = [&](double v) {
    return sy0 + plot_h * (hi - v) / (hi - lo);
  };
  svg << "<rect x=\"" << sx0 << "\" y=\"" << sy0 << "\" width=\"" << scatter_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  svg << "<line x1=\"" << fmt(px(lo)) << "\" y1=\"" << fmt(py(lo))
      << "\" x2=\"" << fmt(px(hi)) << "\" y2=\"" << fmt(py(hi))
      << "\" stroke=\"#cc3333\" stroke-dasharray=\"4 3\"/>\n";
  for (int o = 0; o < n_out; ++o)
    for (std::size_t i = 0; i < st.keys.size(); ++i)
      svg << "<circle cx=\"" << fmt(px(st.scores_a[o][i])) << "\" cy=\""
          << fmt(py(st.scores_b[o][i]))
          << "\" r=\"3\" fill=\"#3366cc\" fill-opacity=\"0.7\"/>\n";
  svg << "<text x=\"" << sx0 << "\" y=\"" << panel_h - 28 << "\">"
      << variant_a << " R2</text>\n";
  svg << "<text x=\"" << sx0 << "\" y=\"" << sy0 - 8 << "\">" << variant_b
      << " R2 (above diagonal: stateful wins)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_report_svg(const std::string& path, const ExperimentResult& result,
                      const std::string& variant_a,
                      const std::string& variant_b) {
  const std::string svg = render_report_svg(result, variant_a, variant_b);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  f << svg;
  if (!f) throw FormatError(FormatError::Kind::Io, "write failed: " + path);
}

}  // namespace vsf
