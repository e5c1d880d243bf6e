#pragma once

// Diagnostic SVG of a planar scenario: obstacles, goal, predicted path with
// its error tube, and black-box rollouts.

#include "neuralparc/polygon2d.hpp"
#include "neuralparc/reach_avoid.hpp"

#include <sstream>
#include <string>

namespace neuralparc {

struct PlotData {
  std::vector<Point2> predicted;            // model path, one point per step
  Matrix tube;                              // steps x 2 interval half-widths
  std::vector<std::vector<Point2>> rollouts;
};

class SvgCanvas {
 public:
  SvgCanvas(Point2 lo, Point2 hi, double width_px = 800.0) : lo_(lo), hi_(hi) {
    const Point2 span = (hi_ - lo_).cwiseMax(Point2(1e-9, 1e-9));
    scale_ = width_px / span.x();
    w_ = width_px;
    h_ = span.y() * scale_;
  }

  void polygon(const std::vector<Point2>& pts, const std::string& style) {
    if (pts.empty()) return;
    out_ << "<polygon points=\"" << coords(pts) << "\" style=\"" << style << "\"/>\n";
  }

  void polyline(const std::vector<Point2>& pts, const std::string& style) {
    if (pts.size() < 2) return;
    out_ << "<polyline points=\"" << coords(pts) << "\" style=\"fill:none;" << style << "\"/>\n";
  }

  void rect(const Point2& lo, const Point2& hi, const std::string& style) {
    polygon({lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}}, style);
  }

  std::string str() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << out_.str() << "</svg>\n";
    return s.str();
  }

 private:
  std::string coords(const std::vector<Point2>& pts) const {
    std::ostringstream s;
    s.precision(6);
    for (const auto& p : pts) s << (p.x() - lo_.x()) * scale_ << "," << (hi_.y() - p.y()) * scale_ << " ";
    return s.str();
  }

  Point2 lo_, hi_;
  double scale_ = 1.0, w_ = 0.0, h_ = 0.0;
  std::ostringstream out_;
};

inline std::string plot_scenario(const Scenario& s, const PlotData& data) {
  require(s.spec.n_p == 2, "plot: planar workspace expected");
  std::vector<std::vector<Point2>> obstacles;
  for (const auto& o : s.obstacles) obstacles.push_back(polygon_vertices(o));
  const auto goal = projected_outline(s.goal);

  Point2 lo(1e300, 1e300), hi(-1e300, -1e300);
  auto grow = [&](const Point2& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& poly : obstacles)
    for (const auto& p : poly) grow(p);
  for (const auto& p : goal) grow(p);
  for (const auto& p : data.predicted) grow(p);
  for (const auto& r : data.rollouts)
    for (const auto& p : r) grow(p);
  grow(s.P0.lower().head<2>());
  grow(s.P0.upper().head<2>());
  const Point2 pad = 0.05 * (hi - lo) + Point2(0.5, 0.5);
  SvgCanvas canvas(lo - pad, hi + pad);

  canvas.rect(s.P0.lower().head<2>(), s.P0.upper().head<2>(), "fill:#dde;stroke:#446;stroke-width:1");
  canvas.polygon(goal, "fill:#bfb;stroke:green;stroke-width:2");
  for (const auto& poly : obstacles) canvas.polygon(poly, "fill:#fbb;stroke:red;stroke-width:2");
  for (Eigen::Index t = 0; t < data.tube.rows() && t + 1 < static_cast<Eigen::Index>(data.predicted.size()); ++t) {
    const Point2 a = data.predicted[static_cast<std::size_t>(t)];
    const Point2 b = data.predicted[static_cast<std::size_t>(t) + 1];
    const Point2 e = data.tube.row(t).transpose();
    canvas.rect(a.cwiseMin(b) - e, a.cwiseMax(b) + e, "fill:#88f;fill-opacity:0.08;stroke:none");
  }
  canvas.polyline(data.predicted, "stroke:blue;stroke-width:2;stroke-dasharray:6,4");
  for (const auto& r : data.rollouts) canvas.polyline(r, "stroke:black;stroke-width:1;stroke-opacity:0.5");
  return canvas.str();
}

}  // namespace neuralparc
