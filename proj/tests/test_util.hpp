#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "finsler/polygon.hpp"

namespace finsler::testutil {

// Convex hull (Andrew monotone chain), CCW, strictly convex output.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  const auto build = [&](auto begin, auto end) {
    std::vector<Vec2> h;
    for (auto it = begin; it != end; ++it) {
      while (h.size() >= 2 &&
             (h[h.size() - 1] - h[h.size() - 2]).cross(*it - h[h.size() - 1]) <= 1e-12)
        h.pop_back();
      h.push_back(*it);
    }
    return h;
  };
  std::vector<Vec2> lower = build(pts.begin(), pts.end());
  std::vector<Vec2> upper = build(pts.rbegin(), pts.rend());
  lower.pop_back();
  upper.pop_back();
  lower.insert(lower.end(), upper.begin(), upper.end());
  return lower;
}

// Random convex polygon: hull of uniform points in a box, rescaled to
// diameter O(1).
inline ConvexPolygon random_convex_polygon(std::mt19937_64& rng, int npts = 12) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Vec2> pts;
    for (int i = 0; i < npts; ++i) pts.push_back(Vec2{u(rng), 0.7 * u(rng)});
    std::vector<Vec2> hull = convex_hull(pts);
    if (hull.size() < 3) continue;
    try {
      return ConvexPolygon(hull);
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  throw std::runtime_error("random_convex_polygon: generation failed");
}

inline ConvexPolygon unit_square() {
  return ConvexPolygon({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}});
}

// Shooting oracle for the radial problem
//   -(r^{n-1} |h'|^{p-2} h')' = eta r^{n-1} |h|^{p-2} h,  h(0)=1, h'(0)=0.
// first_zero returns the first zero of h, or 2l if none occurs before 2l;
// shooting_eta bisects eta until the zero lands at l.
inline double first_zero(double eta, int n, double p, double l) {
  const int steps = 40000;
  const double dr = 2.0 * l / steps;
  double r = 1e-8;
  double h = 1.0;
  // v = r^{n-1} |h'|^{p-2} h'; the series start keeps the origin regular.
  double v = -eta * std::pow(r, (double)n) / n;
  const auto dh = [&](double rr, double vv) {
    if (vv == 0.0) return 0.0;
    const double a = std::abs(vv) / std::pow(rr, n - 1.0);
    return (vv > 0 ? 1.0 : -1.0) * std::pow(a, 1.0 / (p - 1.0));
  };
  const auto dv = [&](double rr, double hh) {
    return -eta * std::pow(rr, n - 1.0) * std::pow(std::abs(hh), p - 1.0) *
           (hh >= 0 ? 1.0 : -1.0);
  };
  for (int i = 0; i < steps; ++i) {
    const double k1h = dh(r, v), k1v = dv(r, h);
    const double k2h = dh(r + dr / 2, v + dr / 2 * k1v), k2v = dv(r + dr / 2, h + dr / 2 * k1h);
    const double k3h = dh(r + dr / 2, v + dr / 2 * k2v), k3v = dv(r + dr / 2, h + dr / 2 * k2h);
    const double k4h = dh(r + dr, v + dr * k3v), k4v = dv(r + dr, h + dr * k3h);
    const double hn = h + dr / 6 * (k1h + 2 * k2h + 2 * k3h + k4h);
    const double vn = v + dr / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (hn <= 0.0) return r + dr * h / (h - hn);
    h = hn;
    v = vn;
    r += dr;
  }
  return 2.0 * l;
}

inline double shooting_eta(int n, double p, double l) {
  double lo = 1e-3, hi = 1e3;
  while (first_zero(hi, n, p, l) > l) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (first_zero(mid, n, p, l) > l ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace finsler::testutil
