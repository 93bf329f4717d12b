#pragma once

#include <string>
#include <vector>

#include "finsler/mesh.hpp"
#include "finsler/norm.hpp"
#include "finsler/polygon.hpp"

namespace finsler {

// Nodal values of |u| on a triangulation of a convex domain.
struct SampledFunction {
  const ConvexPolygon* domain = nullptr;
  ScalarField field;
};

// Piecewise-linear decreasing rearrangement u*(s), s in [0, |domain|].
struct MonotoneProfile {
  std::vector<double> knots;   // strictly increasing, 0 .. |domain|
  std::vector<double> values;  // non-increasing

  double value_at(double s) const;
  // One-sided slopes at s; used to detect kinks.
  double slope_left(double s) const;
  double slope_right(double s) const;
  void write_csv(const std::string& path) const;
};

// Area of the super-level set {|u| > t}, by exact linear cuts of each triangle.
double distribution(const SampledFunction& u, double t);

MonotoneProfile decreasing_rearrangement(const SampledFunction& u, int resolution);

// u^#(x) = u*(kappa_2 F°(x)^2), defined on the Wulff ball of measure |domain|.
double convex_rearrangement(const SampledFunction& u, const Norm& f, Vec2 x,
                            int resolution = 256);

struct RadialGradient {
  Vec2 grad;         // grad of u^# at x
  double f_of_grad;  // F(grad)
  Vec2 norm_grad;    // grad F at grad, equals x / F°(x)
  bool kink = false; // one-sided profile slopes disagree; values above unusable
};

RadialGradient radial_gradient_identities(const MonotoneProfile& profile, const Norm& f,
                                          Vec2 x);

}  // namespace finsler
