#pragma once

#include <stdexcept>

namespace detlab {

// Axis-aligned box in corner convention. Coordinates are normalized image
// units; kernels work on any scale, validation happens at ingestion.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

struct GroundTruth {
  BBox box;
  int category = 0;
};

// Throws std::invalid_argument on negative extent (x2 < x1 or y2 < y1).
// Parsers and generators go through here; zero-area boxes are allowed.
BBox make_bbox(double x1, double y1, double x2, double y2);

double area(const BBox& b);

// Intersection over union; 0 when the union has zero area.
double iou(const BBox& a, const BBox& b);

// Generalized IoU: iou minus the fraction of the smallest enclosing box
// not covered by the union. Range [-1, 1], equals iou for touching boxes.
double giou(const BBox& a, const BBox& b);

// Sum of absolute differences of the four corner coordinates.
double l1_distance(const BBox& a, const BBox& b);

GridPoint center(const BBox& b);

double point_center_distance(const GridPoint& p, const BBox& b);

}  // namespace detlab
