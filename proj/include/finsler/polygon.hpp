#pragma once

#include <string>
#include <vector>

#include "finsler/geom2d.hpp"
#include "finsler/norm.hpp"

namespace finsler {

// Convex polygonal domain, vertices in strict counter-clockwise order.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  size_t size() const { return vertices_.size(); }
  double area() const { return area_; }
  Vec2 centroid() const { return centroid_; }

  bool contains(Vec2 p, double tol = 1e-12) const;

  ConvexPolygon translated(Vec2 t) const;
  ConvexPolygon scaled(double t) const;
  // Vertex-wise map x -> A x.
  ConvexPolygon transformed(const Mat2& a) const;

  std::string to_json() const;
  static ConvexPolygon from_json(const std::string& text);

 private:
  std::vector<Vec2> vertices_;
  double area_ = 0.0;
  Vec2 centroid_;
};

struct DiameterResult {
  double value = 0.0;
  Vec2 a, b;  // an attaining vertex pair
};

struct InradiusResult {
  double value = 0.0;
  Vec2 center;
};

struct MetricReport {
  double diameter = 0.0;
  double inradius = 0.0;
  Vec2 incenter;
  Vec2 diameter_a, diameter_b;
  double area = 0.0;
  double isodiametric_ratio = 0.0;  // |Omega| / ((kappa_2/4) diam^2)

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// d_F(x, y) = F°(x - y).
double point_distance(const Norm& f, Vec2 x, Vec2 y);

// d_F(x) = inf over the boundary of F°(x - y); x must lie in the closure.
double boundary_distance(const Norm& f, const ConvexPolygon& omega, Vec2 x);
// Same but with the polar gauge precomputed (hot loops).
double boundary_distance_polar(const Norm& f_polar, const ConvexPolygon& omega, Vec2 x);

// diam_F(Omega) = max F°(v_i - v_j) over vertex pairs.
DiameterResult diameter(const Norm& f, const ConvexPolygon& omega);

// Largest Wulff shape radius inscribed in Omega; d_F is concave on a convex
// domain, so a seeded Nelder-Mead finds the global maximum.
InradiusResult inradius(const Norm& f, const ConvexPolygon& omega);

MetricReport metric_report(const Norm& f, const ConvexPolygon& omega);

// Polygonal approximation of {F°(x - center) < r} with `sides` vertices.
ConvexPolygon wulff_polygon(const Norm& f, Vec2 center, double r, int sides);

// Wulff shape of the same measure as Omega, centered at the origin.
ConvexPolygon wulff_rescaled(const Norm& f, const ConvexPolygon& omega, int sides);

// Spindle Omega_k: intersection of opposite cones of slope 1/k along the
// x1-axis, built so that its F-diameter is d for k large enough.
ConvexPolygon spindle(const Norm& f, int k, double d);

}  // namespace finsler
