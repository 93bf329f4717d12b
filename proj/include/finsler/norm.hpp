#pragma once

#include <string>
#include <utility>
#include <vector>

#include "finsler/geom2d.hpp"

namespace finsler {

// Anisotropy F: convex, even, 1-homogeneous gauge on R^2, positive off the
// origin. Three families are supported:
//
//   lq                 F(xi) = (|xi_1|^q + |xi_2|^q)^{1/q},  1 < q < oo
//   ellipse            F(xi) = sqrt(xi^T M xi),  M symmetric positive definite
//   smoothed_polytope  F(xi) = (sum_i |d_i . xi|^s)^{1/s},  s = 1/delta
//
// The smoothed polytope replaces max_i |d_i . xi| by its power-mean with
// exponent s, which keeps 1-homogeneity and smoothness off the origin.
// All families satisfy F(t xi) = |t| F(xi), F(-xi) = F(xi) and have a
// positive definite Hessian of F^p off the origin for p > 1.
//
// The polar gauge F°(v) = sup_{xi != 0} (xi . v)/F(xi) is closed-form for
// lq (dual exponent), ellipse (inverse matrix) and any power-sum over an
// orthonormal direction pair; otherwise it is evaluated by maximizing over
// the angle with a golden-section bracket plus Newton polish.
class Norm {
 public:
  enum class Kind { PowerSum, Ellipse };

  static Norm lq(double q);
  static Norm ellipse(const Mat2& m);
  static Norm smoothed_polytope(std::vector<Vec2> dirs, double delta);
  static Norm euclidean() { return lq(2.0); }

  Kind kind() const { return kind_; }
  // True when this object denotes the polar gauge of a spec whose polar has
  // no closed form (JSON role "polar-of").
  bool is_numeric_polar() const { return numeric_polar_; }

  double value(Vec2 xi) const;
  // Requires xi != 0.
  Vec2 gradient(Vec2 xi) const;
  // Requires xi != 0. For power sums with s < 2 the Hessian is unbounded on
  // the hyperplanes d_i . xi = 0; callers sample off those sets.
  Mat2 hessian(Vec2 xi) const;

  // grad(F^p)/p = F^{p-1}(xi) gradF(xi), continuously extended by 0 at xi = 0.
  Vec2 gradient_of_power(double p, Vec2 xi) const;
  // Hessian of F^p, p > 1, xi != 0.
  Mat2 hessian_of_power(double p, Vec2 xi) const;

  Norm polar() const;
  // F_A(x) = F(Ax) for a rotation A (A^T A = I, det A = 1).
  Norm rotated(const Mat2& a) const;

  // Area of the Wulff shape {x : F°(x) < 1}, relative error <= 1e-6.
  double wulff_measure() const;

  // min/max of F over 4096 unit directions (diagnostic alpha, beta).
  std::pair<double, double> linearity_bounds() const;

  // Smoothing parameter of a smoothed polytope (0 for lq and ellipse).
  double smoothing() const { return delta_; }

  std::string to_json() const;
  static Norm from_json(const std::string& text);

  // Point on {F° = 1} in direction (cos theta, sin theta).
  Vec2 wulff_boundary_point(double theta) const;

 private:
  Norm() = default;

  double power_sum_value(Vec2 xi) const;
  Vec2 power_sum_gradient(Vec2 xi) const;
  Mat2 power_sum_hessian(Vec2 xi) const;
  bool has_closed_polar() const;

  // Support maximization for the numeric polar: returns (F°(v), maximizer on
  // {F = 1}).
  std::pair<double, Vec2> polar_support(Vec2 v) const;

  Kind kind_ = Kind::PowerSum;
  // PowerSum data.
  std::vector<Vec2> dirs_;
  double exponent_ = 2.0;
  bool axis_pair_ = true;  // dirs_ is an orthonormal pair: polar closed form
  double delta_ = 0.0;     // smoothing parameter as given (0 for lq)
  // Ellipse data.
  Mat2 m_ = Mat2::identity();
  Mat2 m_inv_ = Mat2::identity();

  bool numeric_polar_ = false;
};

}  // namespace finsler
