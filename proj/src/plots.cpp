#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "infoplane/experiment.hpp"

namespace infoplane {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Epoch colour ramp from dark blue to yellow.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(68 + t * (253 - 68)));
  const int g = static_cast<int>(std::lround(1 + t * (231 - 1)));
  const int b = static_cast<int>(std::lround(84 + t * (37 - 84)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range range_of(const std::vector<std::vector<double>>& series) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (double v : s)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

/// Axes frame with five ticks per axis, placed in a panel at vertical offset `y0`.
class Panel {
 public:
  Panel(double y0, double height, Range x, Range y) : y0_(y0), height_(height), x_(x), y_(y) {}

  double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const {
    return y0_ + height_ - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (height_ - kTop - kBottom);
  }

  void axes(std::ostream& out, const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    const double x0 = kLeft, x1 = kWidth - kRight, yb = y0_ + height_ - kBottom, yt = y0_ + kTop;
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(y0_ + 24)
        << "\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(yb)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(yt)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(yb + 16) << "\" text-anchor=\"middle\" font-size=\"11\">"
          << tick_label(xv) << "</text>\n";
      out << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << tick_label(yv) << "</text>\n";
    }
    out << "<text class=\"xlabel\" x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(yb + 38)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    out << "<text class=\"ylabel\" x=\"16\" y=\"" << num((yb + yt) / 2) << "\" text-anchor=\"middle\" font-size=\"13\""
        << " transform=\"rotate(-90 16 " << num((yb + yt) / 2) << ")\">" << ylabel << "</text>\n";
  }

  void polyline(std::ostream& out, const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& colour, const std::string& name) const {
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
      if (!points.empty()) points += ' ';
      points += num(px(xs[i])) + "," + num(py(ys[i]));
    }
    if (points.empty()) return;
    out << "<polyline data-series=\"" << name << "\" fill=\"none\" stroke=\"" << colour
        << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
  }

 private:
  double y0_, height_;
  Range x_, y_;
};

std::string header(double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(kWidth) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void legend(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries, double y0) {
  double x = kLeft + 10;
  for (const auto& [name, colour] : entries) {
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y0) << "\" width=\"12\" height=\"3\" fill=\"" << colour
        << "\"/>\n<text x=\"" << num(x + 16) << "\" y=\"" << num(y0 + 5) << "\" font-size=\"11\">" << name
        << "</text>\n";
    x += 120;
  }
}

template <typename Get>
std::vector<double> column(const std::vector<InfoPlanePoint>& t, Get get) {
  std::vector<double> v;
  v.reserve(t.size());
  for (const auto& p : t) v.push_back(get(p));
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir) {
  const auto t = read_trajectory(run_dir / "trajectory.csv");
  const auto epochs = column(t, [](const auto& p) { return static_cast<double>(p.epoch); });
  const auto xz = column(t, [](const auto& p) { return p.i_xz_min; });
  const auto zy = column(t, [](const auto& p) { return p.i_zy_lower; });
  const auto direct = column(t, [](const auto& p) { return p.i_xz_direct; });
  const auto teacher = column(t, [](const auto& p) { return p.i_xz_teacher; });
  const auto logdet = column(t, [](const auto& p) { return p.mean_logdet_cov; });
  const auto grad = column(t, [](const auto& p) { return p.grad_norm; });
  std::vector<std::filesystem::path> written;

  {
    std::ostringstream out;
    out << header(kHeight);
    const Panel panel(0, kHeight, range_of({xz}), range_of({zy}));
    panel.axes(out, "Information plane", "I(X;Z) [nats]", "I(Z;Y) [nats]");
    panel.polyline(out, xz, zy, "#888888", "trajectory");
    const double last = std::max(1.0, static_cast<double>(t.size()) - 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(xz[i]) || !std::isfinite(zy[i])) continue;
      out << "<circle class=\"marker\" data-epoch=\"" << t[i].epoch << "\" cx=\"" << num(panel.px(xz[i]))
          << "\" cy=\"" << num(panel.py(zy[i])) << "\" r=\"3.5\" fill=\"" << ramp(static_cast<double>(i) / last)
          << "\"/>\n";
    }
    out << "</svg>\n";
    written.push_back(run_dir / "info_plane.svg");
    write_file(written.back(), out.str());
  }
  {
    std::ostringstream out;
    out << header(kHeight);
    const Panel panel(0, kHeight, range_of({epochs}), range_of({direct, teacher, xz, zy}));
    panel.axes(out, "Mutual information per epoch", "epoch", "MI [nats]");
    panel.polyline(out, epochs, direct, "#1f77b4", "i_xz_direct");
    panel.polyline(out, epochs, teacher, "#ff7f0e", "i_xz_teacher");
    panel.polyline(out, epochs, xz, "#000000", "i_xz_min");
    panel.polyline(out, epochs, zy, "#2ca02c", "i_zy_lower");
    legend(out, {{"I(X;Z) direct", "#1f77b4"}, {"I(X;Z) teacher", "#ff7f0e"}, {"I(X;Z) min", "#000000"},
                 {"I(Z;Y) lower", "#2ca02c"}},
           kHeight - 12);
    out << "</svg>\n";
    written.push_back(run_dir / "mi_vs_epoch.svg");
    write_file(written.back(), out.str());
  }
  {
    std::ostringstream out;
    out << header(2 * kHeight);
    const Panel top(0, kHeight, range_of({epochs}), range_of({logdet}));
    top.axes(out, "Mean log-determinant of encoder covariance", "epoch", "log det [nats]");
    top.polyline(out, epochs, logdet, "#d62728", "mean_logdet_cov");
    const Panel bottom(kHeight, kHeight, range_of({epochs}), range_of({grad}));
    bottom.axes(out, "Encoder gradient norm", "epoch", "L2 norm");
    bottom.polyline(out, epochs, grad, "#9467bd", "grad_norm");
    out << "</svg>\n";
    written.push_back(run_dir / "diagnostics.svg");
    write_file(written.back(), out.str());
  }
  return written;
}

}  // namespace infoplane
