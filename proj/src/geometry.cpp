#include "omnibox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "omnibox/error.hpp"

namespace omnibox {
namespace {

constexpr double kSquareRelTol = 1e-12;
constexpr double kWrapSnap = 1e-12;
constexpr double kRectTieRelTol = 1e-9;

double Orient(Point2 o, Point2 a, Point2 b) { return Cross(a - o, b - o); }

void CheckFinite(std::span<const Point2> points) {
  for (const Point2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidInput("non-finite vertex coordinate");
    }
  }
}

}  // namespace

double Norm(Point2 p) { return std::hypot(p.x, p.y); }

double WrapAngle(double angle, double lo, double period) {
  double r = angle - period * std::floor((angle - lo) / period);
  if (r >= lo + period) r -= period;
  if (r < lo) r = lo;
  return r;
}

Polygon ConvexHull(std::span<const Point2> points) {
  if (points.empty()) throw InvalidInput("convex hull of an empty point set");
  CheckFinite(points);

  Polygon pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const size_t n = pts.size();
  if (n <= 2) return pts;

  Polygon hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && Orient(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && Orient(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

RotatedBox Canonicalize(double cx, double cy, double w, double h,
                        double theta) {
  if (w > h) {
    std::swap(w, h);
    theta += kHalfPi;
  }
  const double scale = std::max(w, h);
  if (h - w <= kSquareRelTol * scale) {
    // Square: every quarter turn is the same point set.
    const double side = 0.5 * (w + h);
    return {cx, cy, side, side, WrapAngle(theta, -kHalfPi / 2.0, kHalfPi)};
  }
  theta = WrapAngle(theta, -kHalfPi, kPi);
  if (theta > kHalfPi - kWrapSnap) theta = -kHalfPi;
  return {cx, cy, w, h, theta};
}

RotatedBox Canonicalize(const RotatedBox& box) {
  return Canonicalize(box.cx, box.cy, box.w, box.h, box.theta);
}

RotatedBox MinAreaRect(std::span<const Point2> hull) {
  if (hull.empty()) throw InvalidInput("minimum rectangle of an empty polygon");
  CheckFinite(hull);
  const size_t n = hull.size();
  if (n == 1) return {hull[0].x, hull[0].y, 0.0, 0.0, 0.0};
  if (n == 2) {
    const Point2 d = hull[1] - hull[0];
    const Point2 mid = 0.5 * (hull[0] + hull[1]);
    // Height axis along the segment: R(theta) * (0, 1) == d / |d|.
    const double theta = std::atan2(d.y, d.x) - kHalfPi;
    return Canonicalize(mid.x, mid.y, 0.0, Norm(d), theta);
  }

  auto edge_dir = [&](size_t i) {
    const Point2 e = hull[(i + 1) % n] - hull[i];
    return (1.0 / Norm(e)) * e;
  };
  auto along = [&](size_t i, Point2 u, size_t j) {
    return Dot(hull[j % n] - hull[i], u);
  };

  // Caliper pointers: farthest from the edge, max along it, min along it.
  Point2 u = edge_dir(0);
  Point2 v{-u.y, u.x};
  size_t far = 0, right = 0, left = 0;
  for (size_t j = 1; j < n; ++j) {
    if (along(0, v, j) > along(0, v, far)) far = j;
    if (along(0, u, j) > along(0, u, right)) right = j;
    if (along(0, u, j) < along(0, u, left)) left = j;
  }

  double best_area = std::numeric_limits<double>::infinity();
  double best_perimeter = std::numeric_limits<double>::infinity();
  RotatedBox best;
  for (size_t i = 0; i < n; ++i) {
    u = edge_dir(i);
    v = {-u.y, u.x};
    for (size_t step = 0; step < n && along(i, v, far + 1) > along(i, v, far);
         ++step) {
      far = (far + 1) % n;
    }
    for (size_t step = 0;
         step < n && along(i, u, right + 1) > along(i, u, right); ++step) {
      right = (right + 1) % n;
    }
    for (size_t step = 0; step < n && along(i, u, left + 1) < along(i, u, left);
         ++step) {
      left = (left + 1) % n;
    }
    const double u_min = along(i, u, left);
    const double u_max = along(i, u, right);
    const double v_max = along(i, v, far);
    const double area = (u_max - u_min) * v_max;
    const double perimeter = (u_max - u_min) + v_max;
    // Near-equal areas (every acute triangle has three optimal rectangles)
    // are broken by the smaller perimeter, which does not depend on the
    // polygon's orientation.
    const double tol = kRectTieRelTol * best_area;
    const bool better = i == 0 || area < best_area - tol ||
                        (area <= best_area + tol &&
                         perimeter < best_perimeter - kRectTieRelTol * best_perimeter);
    if (better) {
      best_area = area;
      best_perimeter = perimeter;
      const Point2 c = hull[i] + (0.5 * (u_min + u_max)) * u + (0.5 * v_max) * v;
      best = {c.x, c.y, u_max - u_min, v_max, std::atan2(u.y, u.x)};
    }
  }
  return Canonicalize(best);
}

bool IsDegenerate(const RotatedBox& box) { return box.w <= 0.0 || box.h <= 0.0; }

Polygon BoxCorners(const RotatedBox& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hw = 0.5 * box.w;
  const double hh = 0.5 * box.h;
  const Point2 local[4] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  Polygon corners;
  corners.reserve(4);
  for (const Point2& p : local) {
    corners.push_back({box.cx + c * p.x - s * p.y, box.cy + s * p.x + c * p.y});
  }
  return corners;
}

double SignedArea(std::span<const Point2> polygon) {
  const size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (size_t i = 0; i < n; ++i) {
    twice += Cross(polygon[i], polygon[(i + 1) % n]);
  }
  return 0.5 * twice;
}

double PolygonArea(std::span<const Point2> polygon) {
  return std::abs(SignedArea(polygon));
}

Polygon ClipConvex(std::span<const Point2> subject,
                   std::span<const Point2> clip) {
  Polygon output(subject.begin(), subject.end());
  const size_t m = clip.size();
  for (size_t i = 0; i < m && !output.empty(); ++i) {
    const Point2 a = clip[i];
    const Point2 b = clip[(i + 1) % m];
    const Point2 edge = b - a;
    const Polygon input = std::move(output);
    output.clear();
    const size_t k = input.size();
    for (size_t j = 0; j < k; ++j) {
      const Point2 s = input[(j + k - 1) % k];
      const Point2 e = input[j];
      const double ds = Cross(edge, s - a);
      const double de = Cross(edge, e - a);
      if (de >= 0.0) {
        if (ds < 0.0) output.push_back(s + (ds / (ds - de)) * (e - s));
        output.push_back(e);
      } else if (ds >= 0.0) {
        output.push_back(s + (ds / (ds - de)) * (e - s));
      }
    }
  }
  return output;
}

double RotatedIou(const RotatedBox& a, const RotatedBox& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const Polygon ca = BoxCorners(a);
  const Polygon cb = BoxCorners(b);
  const double inter = PolygonArea(ClipConvex(ca, cb));
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

struct Extent {
  double x1, y1, x2, y2;
};

Extent ToExtent(const AxisBox& b) {
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w,
          b.cy + 0.5 * b.h};
}

double Intersection(const Extent& a, const Extent& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  return iw * ih;
}

}  // namespace

double AxisIou(const AxisBox& a, const AxisBox& b) {
  const double inter = Intersection(ToExtent(a), ToExtent(b));
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double Giou(const AxisBox& a, const AxisBox& b) {
  const Extent ea = ToExtent(a);
  const Extent eb = ToExtent(b);
  const double inter = Intersection(ea, eb);
  const double uni = a.area() + b.area() - inter;
  const double iou = uni > 0.0 ? inter / uni : 0.0;
  const double enclosing = (std::max(ea.x2, eb.x2) - std::min(ea.x1, eb.x1)) *
                           (std::max(ea.y2, eb.y2) - std::min(ea.y1, eb.y1));
  if (enclosing <= 0.0) return iou;
  return iou - (enclosing - uni) / enclosing;
}

Point2 RotatePoint(Point2 p, Point2 center, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Point2 d = p - center;
  return {center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y};
}

RotatedBox RotateBox(const RotatedBox& box, Point2 center, double angle) {
  const Point2 c = RotatePoint(box.center(), center, angle);
  return Canonicalize(c.x, c.y, box.w, box.h, box.theta + angle);
}

}  // namespace omnibox
