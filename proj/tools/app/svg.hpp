#pragma once

#include "conicfit/conic_geometry.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace conicfit::svg {

struct Box {
  double xmin = 0, ymin = 0, xmax = 1, ymax = 1;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  /// Grown by `fraction` of the larger side on every edge.
  Box padded(double fraction) const;
  static Box around(std::span<const Point2> points);
};

struct Segment {
  Point2 a, b;
};

/// A scalar field sampled on an (nx+1) x (ny+1) lattice of nodes over a box.
struct Grid {
  Box box;
  int nx = 400, ny = 400;
  std::vector<double> values;  // row-major, y outer

  static Grid sample(const Box& box, int nx, int ny, const std::function<double(const Point2&)>& f);
  Point2 node(int i, int j) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * (nx + 1) + i]; }
};

/// Marching squares: segments where the interpolated field crosses `level`.
/// Saddle cells are split by the cell-centre average. Non-finite nodes
/// suppress their cells.
std::vector<Segment> contour(const Grid& grid, double level);

/// Equal-aspect canvas in data units, y pointing up. Output is a pure
/// function of the calls made, with coordinates printed at fixed precision.
class Canvas {
 public:
  Canvas(const Box& box, int width_px);

  void segments(std::span<const Segment> segs, const std::string& stroke, double width);
  void polyline(std::span<const Point2> pts, const std::string& stroke, double width);
  void dots(std::span<const Point2> pts, const std::string& fill, double radius_px);
  void cross(const Point2& p, const std::string& stroke, double half_px);
  /// Cells of the grid where |field| <= level, merged into row runs.
  void fill_below(const Grid& grid, double level, const std::string& fill, double opacity);
  void text(double x_px, double y_px, const std::string& s);
  void frame();

  std::string str() const;
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  std::string xy(const Point2& p) const;
  double px(double x) const;
  double py(double y) const;

  Box box_;
  int width_ = 0, height_ = 0;
  double scale_ = 1;
  std::string body_;
};

std::string xml_escape(const std::string& s);

}  // namespace conicfit::svg
