#include "detlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace detlab {

BBox make_bbox(double x1, double y1, double x2, double y2) {
  if (x2 < x1 || y2 < y1) {
    throw std::invalid_argument("box has negative extent");
  }
  return BBox{x1, y1, x2, y2};
}

double area(const BBox& b) {
  return (b.x2 - b.x1) * (b.y2 - b.y1);
}

static double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enclosing = cw * ch;
  if (enclosing <= 0.0) return uni <= 0.0 ? 0.0 : 1.0;
  const double i = uni <= 0.0 ? 0.0 : inter / uni;
  return i - (enclosing - uni) / enclosing;
}

double l1_distance(const BBox& a, const BBox& b) {
  return std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) +
         std::abs(a.x2 - b.x2) + std::abs(a.y2 - b.y2);
}

GridPoint center(const BBox& b) {
  return GridPoint{0.5 * (b.x1 + b.x2), 0.5 * (b.y1 + b.y2)};
}

double point_center_distance(const GridPoint& p, const BBox& b) {
  const GridPoint c = center(b);
  return std::hypot(p.x - c.x, p.y - c.y);
}

}  // namespace detlab
