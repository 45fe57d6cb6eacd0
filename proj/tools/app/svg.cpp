#include "app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace conicfit::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

Point2 lerp(const Point2& p, const Point2& q, double fp, double fq, double level) {
  const double t = (level - fp) / (fq - fp);
  return p + t * (q - p);
}

}  // namespace

Box Box::padded(double fraction) const {
  const double pad = fraction * std::max(width(), height());
  return {xmin - pad, ymin - pad, xmax + pad, ymax + pad};
}

Box Box::around(std::span<const Point2> points) {
  if (points.empty()) return {};
  Box b{points[0].x(), points[0].y(), points[0].x(), points[0].y()};
  for (const Point2& p : points) {
    b.xmin = std::min(b.xmin, p.x());
    b.xmax = std::max(b.xmax, p.x());
    b.ymin = std::min(b.ymin, p.y());
    b.ymax = std::max(b.ymax, p.y());
  }
  const double floor = 1e-3 * std::max({1.0, std::abs(b.xmin), std::abs(b.xmax), std::abs(b.ymin), std::abs(b.ymax)});
  if (b.width() < floor) b.xmin -= floor, b.xmax += floor;
  if (b.height() < floor) b.ymin -= floor, b.ymax += floor;
  return b;
}

Grid Grid::sample(const Box& box, int nx, int ny, const std::function<double(const Point2&)>& f) {
  if (nx < 1 || ny < 1) fail_config("grid needs at least one cell per side");
  Grid g;
  g.box = box;
  g.nx = nx;
  g.ny = ny;
  g.values.resize(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) g.values[static_cast<std::size_t>(j) * (nx + 1) + i] = f(g.node(i, j));
  return g;
}

Point2 Grid::node(int i, int j) const {
  return {box.xmin + box.width() * i / nx, box.ymin + box.height() * j / ny};
}

std::vector<Segment> contour(const Grid& grid, double level) {
  std::vector<Segment> out;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      // Corners counter-clockwise from the lower left.
      const Point2 p[4] = {grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1), grid.node(i, j + 1)};
      const double f[4] = {grid.at(i, j), grid.at(i + 1, j), grid.at(i + 1, j + 1), grid.at(i, j + 1)};
      if (!std::all_of(f, f + 4, [](double v) { return std::isfinite(v); })) continue;
      int mask = 0;
      for (int k = 0; k < 4; ++k)
        if (f[k] > level) mask |= 1 << k;
      if (mask == 0 || mask == 15) continue;
      auto edge = [&](int k) { return lerp(p[k], p[(k + 1) % 4], f[k], f[(k + 1) % 4], level); };
      // Edges k joins corner k and k+1; collect crossed edges in order.
      int crossed[4], n = 0;
      for (int k = 0; k < 4; ++k)
        if (((mask >> k) & 1) != ((mask >> ((k + 1) % 4)) & 1)) crossed[n++] = k;
      if (n == 2) {
        out.push_back({edge(crossed[0]), edge(crossed[1])});
      } else {
        // Saddle: pair edges so the centre stays on its own side.
        const bool centre_above = (f[0] + f[1] + f[2] + f[3]) / 4 > level;
        const bool corner0_above = mask & 1;
        if (centre_above == corner0_above) {
          out.push_back({edge(0), edge(1)});
          out.push_back({edge(2), edge(3)});
        } else {
          out.push_back({edge(3), edge(0)});
          out.push_back({edge(1), edge(2)});
        }
      }
    }
  }
  return out;
}

Canvas::Canvas(const Box& box, int width_px) : box_(box), width_(width_px) {
  if (!(box.width() > 0) || !(box.height() > 0)) fail_config("plot box must have positive extent");
  scale_ = width_px / box.width();
  height_ = std::max(1, static_cast<int>(std::lround(box.height() * scale_)));
}

double Canvas::px(double x) const { return (x - box_.xmin) * scale_; }
double Canvas::py(double y) const { return (box_.ymax - y) * scale_; }
std::string Canvas::xy(const Point2& p) const { return num(px(p.x())) + "," + num(py(p.y())); }

void Canvas::segments(std::span<const Segment> segs, const std::string& stroke, double width) {
  if (segs.empty()) return;
  body_ += "<path fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" d=\"";
  for (const Segment& s : segs) body_ += "M" + xy(s.a) + "L" + xy(s.b);
  body_ += "\"/>\n";
}

void Canvas::polyline(std::span<const Point2> pts, const std::string& stroke, double width) {
  if (pts.size() < 2) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) body_ += (i ? " " : "") + xy(pts[i]);
  body_ += "\"/>\n";
}

void Canvas::dots(std::span<const Point2> pts, const std::string& fill, double radius_px) {
  if (pts.empty()) return;
  body_ += "<g fill=\"" + fill + "\">\n";
  for (const Point2& p : pts)
    body_ += "<circle cx=\"" + num(px(p.x())) + "\" cy=\"" + num(py(p.y())) + "\" r=\"" + num(radius_px) + "\"/>\n";
  body_ += "</g>\n";
}

void Canvas::cross(const Point2& p, const std::string& stroke, double half_px) {
  const double x = px(p.x()), y = py(p.y());
  body_ += "<path stroke=\"" + stroke + "\" stroke-width=\"1.50\" d=\"M" + num(x - half_px) + "," + num(y) + "H" +
           num(x + half_px) + "M" + num(x) + "," + num(y - half_px) + "V" + num(y + half_px) + "\"/>\n";
}

void Canvas::fill_below(const Grid& grid, double level, const std::string& fill, double opacity) {
  const double cw = grid.box.width() / grid.nx * scale_, ch = grid.box.height() / grid.ny * scale_;
  std::string d;
  for (int j = 0; j < grid.ny; ++j) {
    int i = 0;
    while (i < grid.nx) {
      auto inside = [&](int c) {
        const double v = (grid.at(c, j) + grid.at(c + 1, j) + grid.at(c + 1, j + 1) + grid.at(c, j + 1)) / 4;
        return std::isfinite(v) && std::abs(v) <= level;
      };
      if (!inside(i)) {
        ++i;
        continue;
      }
      int end = i + 1;
      while (end < grid.nx && inside(end)) ++end;
      const Point2 corner = grid.node(i, j + 1);
      d += "M" + xy(corner) + "h" + num((end - i) * cw) + "v" + num(ch) + "h" + num(-(end - i) * cw) + "z";
      i = end;
    }
  }
  if (d.empty()) return;
  body_ += "<path fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) + "\" stroke=\"none\" d=\"" + d + "\"/>\n";
}

void Canvas::text(double x_px, double y_px, const std::string& s) {
  body_ += "<text x=\"" + num(x_px) + "\" y=\"" + num(y_px) + "\" font-family=\"sans-serif\" font-size=\"14\">" +
           xml_escape(s) + "</text>\n";
}

void Canvas::frame() {
  body_ += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width_) + "\" height=\"" + std::to_string(height_) +
           "\" fill=\"none\" stroke=\"#888888\"/>\n";
}

std::string Canvas::str() const {
  const std::string w = std::to_string(width_), h = std::to_string(height_);
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         body_ + "</svg>\n";
}

std::string xml_escape(const std::string& s) {
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

}  // namespace conicfit::svg
