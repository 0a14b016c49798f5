#pragma once

#include <span>
#include <vector>

namespace omnibox {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHalfPi = kPi / 2.0;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

inline double Dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double Cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double Norm(Point2 p);

// Ordered vertex list. Orientation and convexity are not enforced at
// construction; functions that need them say so.
using Polygon = std::vector<Point2>;

// Center/size/angle rectangle. Corners are center + R(theta) * (+-w/2, +-h/2),
// so at theta = 0 the width runs along x and the height along y. Canonical
// boxes have h >= w and theta in [-pi/2, pi/2).
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;

  double area() const { return w * h; }
  Point2 center() const { return {cx, cy}; }
};

// Axis-aligned center/size box. Used normalized to [0, 1] by the loss and in
// pixels for COCO upright boxes.
struct AxisBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
};

// Monotone-chain hull, counter-clockwise, collinear points removed. All-equal
// input yields one point and collinear input yields the two extreme points.
// Throws InvalidInput on empty input or non-finite coordinates.
Polygon ConvexHull(std::span<const Point2> points);

// Minimum-area enclosing rectangle of a convex CCW polygon via rotating
// calipers. The result has one side collinear with a hull edge and is
// returned canonicalized. Areas within 1e-9 relative count as tied; ties go
// to the smaller perimeter, then to the first edge. Segments give a
// zero-width box along the segment, single points a zero-size box.
RotatedBox MinAreaRect(std::span<const Point2> hull);

// True for boxes produced from collinear or coincident input.
bool IsDegenerate(const RotatedBox& box);

// Corners in counter-clockwise order (for positive-area boxes).
Polygon BoxCorners(const RotatedBox& box);

// Swaps w/h (shifting theta by pi/2) so that h >= w, then wraps theta into
// [-pi/2, pi/2). Squares (w == h up to 1e-12 relative) take the representation
// with theta closest to zero, i.e. theta in [-pi/4, pi/4).
RotatedBox Canonicalize(double cx, double cy, double w, double h, double theta);
RotatedBox Canonicalize(const RotatedBox& box);

// Signed shoelace area; positive for CCW polygons.
double SignedArea(std::span<const Point2> polygon);
double PolygonArea(std::span<const Point2> polygon);

// Sutherland-Hodgman clip of `subject` against the convex CCW `clip` polygon.
Polygon ClipConvex(std::span<const Point2> subject, std::span<const Point2> clip);

// Intersection over union of two rotated rectangles, 0 when the union is empty.
double RotatedIou(const RotatedBox& a, const RotatedBox& b);

double AxisIou(const AxisBox& a, const AxisBox& b);

// Generalized IoU: IoU - (|C| - |A u B|) / |C| with C the enclosing box.
double Giou(const AxisBox& a, const AxisBox& b);

Point2 RotatePoint(Point2 p, Point2 center, double angle);

// Rotates the box as a rigid body about `center`; the result is canonical.
RotatedBox RotateBox(const RotatedBox& box, Point2 center, double angle);

// Wraps an angle into [lo, lo + period).
double WrapAngle(double angle, double lo, double period);

}  // namespace omnibox
