#include "qsep/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace qsep::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(int w, int h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(w / 2.0) +
         "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) +
         "</text>\n";
}

struct Frame {
  double left = 60, top = 40, width = 520, height = 300;
  double y_min, y_max;
  double y(double v) const { return top + height * (1.0 - (v - y_min) / (y_max - y_min)); }
};

std::string axes(const Frame& f) {
  std::string out = "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) +
                    "\" height=\"" + num(f.height) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    out += text(f.left - 6, f.y(v) + 4, num(v), "end");
    out += "<line x1=\"" + num(f.left) + "\" x2=\"" + num(f.left + f.width) + "\" y1=\"" + num(f.y(v)) +
           "\" y2=\"" + num(f.y(v)) + "\" stroke=\"#ddd\"/>\n";
  }
  return out;
}

std::string legend(const std::vector<Series>& series, double x, double y) {
  std::string out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double yy = y + 16.0 * double(i);
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(yy - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           kPalette[i % 6] + "\"/>\n";
    out += text(x + 14, yy, series[i].name, "start");
  }
  return out;
}

}  // namespace

std::string label_wheel(const std::string& title, const std::vector<WheelSection>& sections) {
  const double cx = 260, cy = 280, radius = 220;
  std::string out = header(520, 540, title);
  const double n = double(std::max<std::size_t>(sections.size(), 1));
  const double width = 2 * std::numbers::pi / n;
  auto polar = [&](double r, double a) {
    return std::pair{cx + r * std::cos(a - std::numbers::pi / 2), cy + r * std::sin(a - std::numbers::pi / 2)};
  };
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const WheelSection& s = sections[k];
    const double a0 = width * double(k), a1 = a0 + width;
    if (std::isfinite(s.boundary) && s.boundary > 0.0) {
      const double r = std::min(s.boundary, 1.0) * radius;
      const auto [x0, y0] = polar(r, a0);
      const auto [x1, y1] = polar(r, a1);
      out += "<path d=\"M " + num(cx) + " " + num(cy) + " L " + num(x0) + " " + num(y0) + " A " + num(r) + " " +
             num(r) + " 0 " + (width > std::numbers::pi ? "1" : "0") + " 1 " + num(x1) + " " + num(y1) +
             " Z\" fill=\"#ddd\"/>\n";
    }
    const auto [ex, ey] = polar(radius, a0);
    out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cy) + "\" x2=\"" + num(ex) + "\" y2=\"" + num(ey) +
           "\" stroke=\"#888\"/>\n";
    const double mid = 0.5 * (a0 + a1);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      // Spread points over a few rays inside the section to limit overlap.
      const double a = a0 + width * (0.2 + 0.6 * double(i % 5) / 4.0);
      const auto [x, y] = polar(s.points[i].first * radius, a);
      out += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"2.5\" fill=\"" +
             (s.points[i].second == 1 ? "#1f5fbf" : "#d62728") + "\"/>\n";
    }
    const auto [lx, ly] = polar(radius + 18, mid);
    out += text(lx, ly + 4, s.label);
  }
  out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(radius) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "</svg>\n";
  return out;
}

std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, double y_min, double y_max) {
  Frame f{.y_min = y_min, .y_max = y_max};
  std::string out = header(720, 400, title) + axes(f);
  const double n = double(std::max<std::size_t>(x_labels.size(), 1));
  auto x = [&](std::size_t i) { return f.left + f.width * (double(i) + 0.5) / n; };
  for (std::size_t i = 0; i < x_labels.size(); ++i) out += text(x(i), f.top + f.height + 18, x_labels[i]);
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t i = 0; i < series[s].values.size(); ++i)
      pts += num(x(i)) + "," + num(f.y(std::clamp(series[s].values[i], y_min, y_max))) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + kPalette[s % 6] + "\" stroke-width=\"2\"/>\n";
  }
  out += legend(series, f.left + f.width + 12, f.top + 10);
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, double y_min, double y_max) {
  Frame f{.y_min = y_min, .y_max = y_max};
  std::string out = header(720, 400, title) + axes(f);
  const double n = double(std::max<std::size_t>(categories.size(), 1));
  const double group = f.width / n;
  const double bar = group * 0.8 / double(std::max<std::size_t>(series.size(), 1));
  for (std::size_t c = 0; c < categories.size(); ++c) {
    out += text(f.left + group * (double(c) + 0.5), f.top + f.height + 18, categories[c]);
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].values.size()) continue;
      const double v = std::clamp(series[s].values[c], y_min, y_max);
      const double x0 = f.left + group * double(c) + group * 0.1 + bar * double(s);
      out += "<rect x=\"" + num(x0) + "\" y=\"" + num(f.y(v)) + "\" width=\"" + num(bar) + "\" height=\"" +
             num(f.y(y_min) - f.y(v)) + "\" fill=\"" + kPalette[s % 6] + "\"/>\n";
    }
  }
  out += legend(series, f.left + f.width + 12, f.top + 10);
  out += "</svg>\n";
  return out;
}

}  // namespace qsep::svg
