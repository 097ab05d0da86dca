#include "svg.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace logitcalib::svg {

namespace {

constexpr double kWidth = 360.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 40.0;
constexpr double kPlot = kWidth - 2.0 * kMargin;

std::string escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Maps a unit-interval coordinate to pixels.
double px_x(double u) { return kMargin + u * kPlot; }
double px_y(double u) { return kHeight - kMargin - u * kPlot; }

std::string header(std::string_view title) {
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      kWidth, kHeight, kWidth, kHeight);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n",
                     kWidth, kHeight);
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\" "
      "text-anchor=\"middle\">{}</text>\n",
      kWidth / 2.0, escape(title));
  out += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kMargin, kMargin, kPlot, kPlot);
  return out;
}

std::string axis_labels(std::string_view x_label, std::string_view y_label) {
  std::string out;
  for (int i = 0; i <= 4; ++i) {
    const double u = i / 4.0;
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"10\" "
        "text-anchor=\"middle\">{:.2f}</text>\n",
        px_x(u), kHeight - kMargin + 14.0, u);
  }
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
      "text-anchor=\"middle\">{}</text>\n",
      kWidth / 2.0, kHeight - 8.0, escape(x_label));
  out += fmt::format(
      "<text x=\"12\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
      "text-anchor=\"middle\" transform=\"rotate(-90 12 {:.1f})\">{}</text>\n",
      kHeight / 2.0, kHeight / 2.0, escape(y_label));
  return out;
}

}  // namespace

std::string reliability_plot(const ReliabilityDiagram& diagram, std::string_view title) {
  std::string out = header(title);
  for (const auto& b : diagram.bins) {
    if (b.count == 0) continue;
    out += fmt::format(
        "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
        "fill=\"steelblue\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
        px_x(b.lo), px_y(b.accuracy), px_x(b.hi) - px_x(b.lo),
        px_y(0.0) - px_y(b.accuracy));
    // Gap between mean confidence and accuracy.
    out += fmt::format(
        "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"crimson\" "
        "stroke-width=\"2\"/>\n",
        px_x(b.lo), px_y(b.mean_confidence), px_x(b.hi), px_y(b.mean_confidence));
  }
  out += fmt::format(
      "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"gray\" "
      "stroke-dasharray=\"4 3\"/>\n",
      px_x(0.0), px_y(0.0), px_x(1.0), px_y(1.0));
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\">"
      "ECE = {:.4f}</text>\n",
      px_x(0.03), px_y(0.93), diagram.ece);
  out += axis_labels("confidence", "accuracy");
  out += "</svg>\n";
  return out;
}

std::string histogram_plot(const ScoreHistogram& histogram, std::string_view title) {
  std::string out = header(title);
  const std::size_t peak =
      histogram.counts.empty()
          ? 0
          : *std::max_element(histogram.counts.begin(), histogram.counts.end());
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    if (histogram.counts[b] == 0) continue;
    const double h = static_cast<double>(histogram.counts[b]) / static_cast<double>(peak);
    out += fmt::format(
        "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
        "fill=\"darkorange\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
        px_x(histogram.edges[b]), px_y(h), px_x(histogram.edges[b + 1]) - px_x(histogram.edges[b]),
        px_y(0.0) - px_y(h));
  }
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\">"
      "peak count = {}</text>\n",
      px_x(0.03), px_y(0.93), peak);
  out += axis_labels("score", "relative frequency");
  out += "</svg>\n";
  return out;
}

}  // namespace logitcalib::svg
