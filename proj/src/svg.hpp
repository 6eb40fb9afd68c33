#pragma once

// Minimal SVG writer and 2-D plot frame used by the figure exports.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ncf::svg {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

/// Distinct colors from a golden-ratio hue walk.
inline std::string color(int index) {
  const double h = std::fmod(0.13 + 0.618033988749895 * index, 1.0) * 6.0;
  const double s = 0.65, l = 0.55;
  const double c = (1.0 - std::abs(2.0 * l - 1.0)) * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = l - c / 2.0;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>((r + m) * 255), static_cast<int>((g + m) * 255),
                static_cast<int>((b + m) * 255));
  return buf;
}

class Document {
 public:
  Document(double width, double height) : w_(width), h_(height) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = "") {
    os_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" fill=\"" << fill << "\" " << extra << "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
            const std::string& extra = "") {
    os_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\" " << extra << "/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 12, const std::string& anchor = "start") {
    os_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    os_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r) << "\" fill=\"" << fill
        << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5,
                const std::string& extra = "") {
    if (pts.size() < 2) return;
    os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\" " << extra
        << " points=\"";
    for (const auto& [x, y] : pts) os_ << fmt(x) << "," << fmt(y) << " ";
    os_ << "\"/>\n";
  }
  void raw(const std::string& s) { os_ << s; }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
        << "\" viewBox=\"0 0 " << fmt(w_) << " " << fmt(h_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << os_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_, h_;
  std::ostringstream os_;
};

/// Axes with linear x and linear or log10 y.
class Plot {
 public:
  Plot(double x0, double x1, double y0, double y1, bool log_y = false)
      : x0_(x0), x1_(x1), y0_(log_y ? std::log10(y0) : y0), y1_(log_y ? std::log10(y1) : y1), log_y_(log_y) {}

  static constexpr double kWidth = 640, kHeight = 440, kLeft = 70, kRight = 170, kTop = 30, kBottom = 55;

  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    const double v = log_y_ ? std::log10(std::max(y, 1e-300)) : y;
    return kHeight - kBottom - (v - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom);
  }
  bool inside_y(double y) const {
    const double v = log_y_ ? std::log10(std::max(y, 1e-300)) : y;
    return v >= y0_ - 1e-12 && v <= y1_ + 1e-12;
  }

  void axes(Document& d, const std::string& xlabel, const std::string& ylabel) const {
    const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
    d.rect(l, t, r - l, b - t, "none", "stroke=\"black\"");
    for (int i = 0; i <= 5; ++i) {
      const double x = x0_ + (x1_ - x0_) * i / 5.0;
      d.line(px(x), b, px(x), b + 5, "black");
      d.text(px(x), b + 18, fmt(x), 11, "middle");
    }
    if (log_y_) {
      for (int e = static_cast<int>(std::ceil(y0_)); e <= static_cast<int>(std::floor(y1_)); ++e) {
        const double y = py(std::pow(10.0, e));
        d.line(l - 5, y, l, y, "black");
        d.line(l, y, r, y, "#dddddd", 0.5);
        d.text(l - 8, y + 4, "1e" + std::to_string(e), 11, "end");
      }
    } else {
      for (int i = 0; i <= 5; ++i) {
        const double v = y0_ + (y1_ - y0_) * i / 5.0;
        d.line(l - 5, py(v), l, py(v), "black");
        d.line(l, py(v), r, py(v), "#dddddd", 0.5);
        d.text(l - 8, py(v) + 4, fmt(v), 11, "end");
      }
    }
    d.text((l + r) / 2, kHeight - 15, xlabel, 13, "middle");
    d.raw("<text transform=\"translate(18," + fmt((t + b) / 2) +
          ") rotate(-90)\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\">" + escape(ylabel) +
          "</text>\n");
  }

  void legend(Document& d, int row, const std::string& label, const std::string& stroke,
              const std::string& dash = "") const {
    const double x = kWidth - kRight + 12, y = kTop + 12 + 18 * row;
    d.line(x, y, x + 24, y, stroke, 2.0, dash.empty() ? "" : "stroke-dasharray=\"" + dash + "\"");
    d.text(x + 30, y + 4, label, 11);
  }

 private:
  double x0_, x1_, y0_, y1_;
  bool log_y_;
};

}  // namespace ncf::svg
