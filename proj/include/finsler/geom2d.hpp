#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace finsler {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double t) const { return {x * t, y * t}; }
  constexpr Vec2 operator/(double t) const { return {x / t, y / t}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
};

inline constexpr Vec2 operator*(double t, Vec2 v) { return v * t; }

// Symmetric-capable 2x2 matrix, row major.
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // [[a,b],[c,d]]

  constexpr Mat2() = default;
  constexpr Mat2(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}

  static constexpr Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 rotation(double theta) {
    const double co = std::cos(theta), si = std::sin(theta);
    return {co, -si, si, co};
  }
  static constexpr Mat2 outer(Vec2 u, Vec2 v) {
    return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y};
  }

  constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  constexpr Mat2 operator*(Mat2 o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  constexpr Mat2 operator+(Mat2 o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  constexpr Mat2 operator-(Mat2 o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  constexpr Mat2 operator*(double t) const { return {a * t, b * t, c * t, d * t}; }

  constexpr Mat2 transpose() const { return {a, c, b, d}; }
  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }

  Mat2 inverse() const {
    const double dt = det();
    if (dt == 0.0) throw std::domain_error("Mat2::inverse: singular matrix");
    return {d / dt, -b / dt, -c / dt, a / dt};
  }

  // Smallest eigenvalue of the symmetrized matrix.
  double min_eigenvalue_sym() const {
    const double s = 0.5 * (b + c);
    const double tr = a + d;
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + s * s);
    return 0.5 * tr - disc;
  }

  bool is_symmetric(double tol = 1e-12) const { return std::abs(b - c) <= tol; }
};

inline constexpr Mat2 operator*(double t, Mat2 m) { return m * t; }

// xoshiro-style splitmix generator wrapper is overkill here; tests and the CLI
// use std::mt19937_64 with pinned seeds.

}  // namespace finsler
