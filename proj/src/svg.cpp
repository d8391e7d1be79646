#include "timeagg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "timeagg/format.hpp"

namespace timeagg {

namespace {

std::string rgb(double r, double g, double b) {
  auto channel = [](double v) {
    return std::to_string(static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))));
  };
  return "rgb(" + channel(r) + "," + channel(g) + "," + channel(b) + ")";
}

/// Blue (negative) -> white (zero) -> red (positive).
std::string diverging_color(double value, double limit) {
  const double t = limit > 0.0 ? std::clamp(value / limit, -1.0, 1.0) : 0.0;
  if (t < 0.0) {
    return rgb(255 + t * (255 - 33), 255 + t * (255 - 102), 255 + t * (255 - 172));
  }
  return rgb(255 - t * (255 - 178), 255 - t * (255 - 24), 255 - t * (255 - 43));
}

const char* outcome_color(int outcome) {
  return outcome == 1 ? "#d6604d" : "#4393c3";  // uncontrolled / controlled
}

}  // namespace

std::string render_heatmap_svg(const ImportanceHeatmap& map) {
  const int F = static_cast<int>(map.variables.size());
  const int W = map.windows;
  const int cell = 46;
  const int left = 130, top = 50, right = 30, bottom = 46;
  const int width = left + W * cell + right;
  const int height = top + F * cell + bottom;
  const double limit = std::max(1e-12, map.relative_difference.cwiseAbs().maxCoeff());

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  svg << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">"
      << "Permutation importance (relative auROC difference), baseline auROC="
      << format_fixed(map.baseline_auroc, 3) << "</text>\n";

  for (int f = 0; f < F; ++f) {
    for (int w = 0; w < W; ++w) {
      const double value = map.relative_difference(f, w);
      const int x = left + w * cell;
      const int y = top + f * cell;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << diverging_color(value, limit)
          << "\" stroke=\"#888\"/>\n";
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" font-size=\"9\" text-anchor=\"middle\">" << format_fixed(value, 3)
          << "</text>\n";
    }
    svg << "<text x=\"" << left - 8 << "\" y=\"" << top + f * cell + cell / 2 + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << map.variables[f] << "</text>\n";
  }
  for (int w = 0; w < W; ++w) {
    svg << "<text x=\"" << left + w * cell + cell / 2 << "\" y=\"" << top + F * cell + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">w" << w << "</text>\n";
  }
  svg << "<text x=\"" << left + (W * cell) / 2 << "\" y=\"" << top + F * cell + 36
      << "\" font-size=\"11\" text-anchor=\"middle\">time window (oldest to newest)"
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string render_embedding_svg(const std::vector<EmbeddingPlot>& plots) {
  const int panel = 360, margin = 40, legend = 30;
  const int width = static_cast<int>(plots.size()) * panel;
  const int height = panel + legend;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";

  for (std::size_t k = 0; k < plots.size(); ++k) {
    const auto& plot = plots[k];
    const int x0 = static_cast<int>(k) * panel;
    svg << "<rect x=\"" << x0 + 4 << "\" y=\"4\" width=\"" << panel - 8
        << "\" height=\"" << panel - 8 << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
    svg << "<text x=\"" << x0 + panel / 2 << "\" y=\"22\" font-size=\"13\" "
        << "text-anchor=\"middle\">" << plot.cohort_tag << "</text>\n";

    if (plot.points.rows() > 0) {
      const double min_x = plot.points.col(0).minCoeff();
      const double max_x = plot.points.col(0).maxCoeff();
      const double min_y = plot.points.col(1).minCoeff();
      const double max_y = plot.points.col(1).maxCoeff();
      const double span_x = std::max(max_x - min_x, 1e-9);
      const double span_y = std::max(max_y - min_y, 1e-9);
      for (long i = 0; i < plot.points.rows(); ++i) {
        const double px =
            x0 + margin + (plot.points(i, 0) - min_x) / span_x * (panel - 2 * margin);
        const double py =
            margin + (plot.points(i, 1) - min_y) / span_y * (panel - 2 * margin);
        svg << "<circle cx=\"" << format_fixed(px, 2) << "\" cy=\"" << format_fixed(py, 2)
            << "\" r=\"3\" fill=\"" << outcome_color(plot.outcome[i])
            << "\" fill-opacity=\"0.75\"/>\n";
      }
    }
  }

  // shared legend
  svg << "<circle cx=\"" << margin << "\" cy=\"" << panel + 12 << "\" r=\"4\" fill=\""
      << outcome_color(0) << "\"/>\n";
  svg << "<text x=\"" << margin + 10 << "\" y=\"" << panel + 16
      << "\" font-size=\"11\">controlled</text>\n";
  svg << "<circle cx=\"" << margin + 110 << "\" cy=\"" << panel + 12
      << "\" r=\"4\" fill=\"" << outcome_color(1) << "\"/>\n";
  svg << "<text x=\"" << margin + 120 << "\" y=\"" << panel + 16
      << "\" font-size=\"11\">uncontrolled</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace timeagg
