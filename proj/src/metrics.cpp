#include "metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "util.hpp"

namespace flsim {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(const std::string& path,
                       std::span<const RoundRecord> records, bool emit_timing) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "round,aggregator,eval_loss,eval_error,weight_entropy,reward,wall_seconds\n";
  for (const auto& rec : records) {
    out << rec.round << ',' << aggregator_name(rec.aggregator) << ','
        << format_double(rec.eval_loss) << ',' << format_double(rec.eval_error)
        << ',' << format_double(weight_entropy(rec.weights)) << ',';
    if (rec.reward) out << format_double(*rec.reward);
    out << ',';
    if (emit_timing) out << format_double(rec.wall_seconds);
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_compare_csv(const std::string& path,
                       std::span<const CompareRow> rows) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "aggregator,rounds_to_target,final_error,speedup_vs_first\n";
  const std::optional<int> baseline =
      rows.empty() ? std::nullopt : rows.front().rounds_to_target;
  for (const auto& row : rows) {
    out << row.aggregator << ',';
    if (row.rounds_to_target) out << *row.rounds_to_target;
    out << ',' << format_double(row.final_error) << ',';
    if (baseline && row.rounds_to_target) {
      out << format_double(static_cast<double>(*baseline) /
                           static_cast<double>(*row.rounds_to_target));
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

std::string svg_num(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.precision(2);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

void write_convergence_svg(const std::string& path,
                           std::span<const CurveSeries> series) {
  const int width = 720, height = 440;
  const int left = 60, right = 24, top = 24, bottom = 48;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  std::size_t max_rounds = 1;
  double max_err = 0.0;
  for (const auto& s : series) {
    max_rounds = std::max(max_rounds, s.values.size());
    for (double v : s.values) max_err = std::max(max_err, v);
  }
  max_err = std::max(max_err * 1.05, 1e-9);

  auto x_of = [&](double round) {
    return left + plot_w * (round - 1.0) / std::max<double>(1.0, max_rounds - 1.0);
  };
  auto y_of = [&](double err) { return top + plot_h * (1.0 - err / max_err); };

  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes and grid
  out << "<g stroke=\"#444\" stroke-width=\"1\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\"/>\n</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double err = max_err * tick / 5.0;
    const double y = y_of(err);
    out << "<line x1=\"" << left - 4 << "\" y1=\"" << svg_num(y) << "\" x2=\""
        << left + plot_w << "\" y2=\"" << svg_num(y)
        << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << svg_num(y + 4)
        << "\" text-anchor=\"end\">" << svg_num(err) << "</text>\n";
  }
  for (int tick = 0; tick <= 6; ++tick) {
    const double round = 1.0 + (max_rounds - 1.0) * tick / 6.0;
    out << "<text x=\"" << svg_num(x_of(round)) << "\" y=\""
        << top + plot_h + 18 << "\" text-anchor=\"middle\">"
        << static_cast<int>(std::lround(round)) << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">round</text>\n"
      << "<text x=\"14\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << top + plot_h / 2 << ")\">eval error</text>\n</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.values.empty()) continue;
    const char* color = kPalette[i % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t r = 0; r < s.values.size(); ++r) {
      if (r) out << ' ';
      out << svg_num(x_of(static_cast<double>(r + 1))) << ','
          << svg_num(y_of(s.values[r]));
    }
    out << "\"/>\n";
    const double ly = top + 16.0 + 16.0 * i;
    out << "<line x1=\"" << left + plot_w - 150 << "\" y1=\"" << svg_num(ly - 4)
        << "\" x2=\"" << left + plot_w - 126 << "\" y2=\"" << svg_num(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + plot_w - 120 << "\" y=\"" << svg_num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace flsim
