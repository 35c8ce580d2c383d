#include "figures.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lrpq::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 48.0;

const char* kPalette[6] = {"#1b6ca8", "#c0392b", "#27ae60",
                           "#8e44ad", "#d68910", "#16a085"};

std::string round2(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

}  // namespace

void write_factor_figure(const EstimationResult& result, Index j,
                         const std::string& path) {
  if (j < 0 || static_cast<std::size_t>(j) >= result.theta_hat.size()) {
    throw std::invalid_argument("figure: slope index out of range");
  }
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  Index t_len = 0;
  for (const auto& combo : result.combos) {
    const Mat& v = combo.v_hat[j];
    if (v.cols() == 0) continue;
    t_len = v.rows();
    const double vmin = v.minCoeff();
    const double vmax = v.maxCoeff();
    lo = any ? std::min(lo, vmin) : vmin;
    hi = any ? std::max(hi, vmax) : vmax;
    any = true;
  }
  if (!any || t_len < 2) {
    throw std::invalid_argument("figure: slope block has no factor estimates");
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }

  const double plot_w = kWidth - 2.0 * kMargin;
  const double plot_h = kHeight - 2.0 * kMargin;
  auto x_at = [&](Index t) {
    return kMargin + plot_w * static_cast<double>(t) / static_cast<double>(t_len - 1);
  };
  auto y_at = [&](double v) {
    return kHeight - kMargin - plot_h * (v - lo) / (hi - lo);
  };

  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
       << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
       << kHeight << "\">\n";
  file << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  file << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
       << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
       << "\" stroke=\"#444\"/>\n";
  file << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
       << kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"#444\"/>\n";
  file << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 12.0
       << "\" font-family=\"sans-serif\" font-size=\"14\">factor paths, slope "
       << j << "</text>\n";
  file << "<text x=\"" << kMargin - 40.0 << "\" y=\"" << y_at(hi) + 4.0
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << round2(hi)
       << "</text>\n";
  file << "<text x=\"" << kMargin - 40.0 << "\" y=\"" << y_at(lo) + 4.0
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << round2(lo)
       << "</text>\n";

  for (std::size_t c = 0; c < result.combos.size(); ++c) {
    const Mat& v = result.combos[c].v_hat[j];
    for (Index col = 0; col < v.cols(); ++col) {
      file << "<polyline fill=\"none\" stroke=\"" << kPalette[c % 6]
           << "\" stroke-width=\"1.2\" points=\"";
      for (Index t = 0; t < t_len; ++t) {
        if (t > 0) file << ' ';
        file << round2(x_at(t)) << ',' << round2(y_at(v(t, col)));
      }
      file << "\"/>\n";
    }
    file << "<text x=\"" << kWidth - kMargin - 60.0 << "\" y=\""
         << kMargin + 16.0 * static_cast<double>(c) + 8.0
         << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
         << kPalette[c % 6] << "\">" << result.combos[c].id.label()
         << "</text>\n";
  }
  file << "</svg>\n";
}

}  // namespace lrpq::cli
