#include "finsler/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace finsler {

namespace {

// Area fraction of a triangle where the linear interpolant of (v0, v1, v2)
// exceeds zero.
double positive_fraction(double v0, double v1, double v2) {
  double v[3] = {v0, v1, v2};
  std::sort(v, v + 3);
  if (v[2] <= 0.0) return 0.0;
  if (v[0] >= 0.0) return 1.0;
  if (v[1] <= 0.0) {
    // One positive corner cuts off a similar triangle.
    const double a = v[2];
    return a * a / ((a - v[0]) * (a - v[1]));
  }
  const double a = v[0];
  return 1.0 - a * a / ((a - v[1]) * (a - v[2]));
}

double superlevel_area(const SampledFunction& u, double t) {
  const TriMesh& m = *u.field.mesh;
  double acc = 0.0;
  for (size_t k = 0; k < m.triangles.size(); ++k) {
    const auto& tri = m.triangles[k];
    const double a = u.field.values[tri[0]], b = u.field.values[tri[1]],
                 c = u.field.values[tri[2]];
    double frac = positive_fraction(std::abs(a) - t, std::abs(b) - t, std::abs(c) - t);
    // Sign-changing cells: |u| is not linear there, split into u > t and -u > t.
    if ((a < 0 || b < 0 || c < 0) && (a > 0 || b > 0 || c > 0))
      frac = positive_fraction(a - t, b - t, c - t) +
             positive_fraction(-a - t, -b - t, -c - t);
    acc += frac * m.tri_area[k];
  }
  return acc;
}

}  // namespace

double distribution(const SampledFunction& u, double t) {
  if (t < 0.0) throw std::invalid_argument("distribution: need t >= 0");
  return superlevel_area(u, t);
}

double MonotoneProfile::value_at(double s) const {
  if (s <= knots.front()) return values.front();
  if (s >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), s);
  const size_t i = it - knots.begin();
  const double w = (s - knots[i - 1]) / (knots[i] - knots[i - 1]);
  return values[i - 1] + w * (values[i] - values[i - 1]);
}

double MonotoneProfile::slope_left(double s) const {
  const double ds = 1e-4 * (knots.back() - knots.front());
  return (value_at(s) - value_at(s - ds)) / ds;
}

double MonotoneProfile::slope_right(double s) const {
  const double ds = 1e-4 * (knots.back() - knots.front());
  return (value_at(s + ds) - value_at(s)) / ds;
}

void MonotoneProfile::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os.precision(9);
  os << "s,value\n";
  for (size_t i = 0; i < knots.size(); ++i) os << knots[i] << ',' << values[i] << '\n';
}

MonotoneProfile decreasing_rearrangement(const SampledFunction& u, int resolution) {
  if (resolution < 16)
    throw std::invalid_argument("decreasing_rearrangement: need resolution >= 16");
  double umax = 0.0;
  for (double v : u.field.values) umax = std::max(umax, std::abs(v));
  const double total = u.field.mesh->total_area();

  // Tabulate mu on a fine level grid, then invert by monotone interpolation.
  const int nt = std::max(512, 4 * resolution);
  std::vector<double> level(nt + 1), mu(nt + 1);
  for (int k = 0; k <= nt; ++k) {
    level[k] = umax * k / nt;
    mu[k] = superlevel_area(u, level[k]);
  }
  for (int k = 1; k <= nt; ++k) mu[k] = std::min(mu[k], mu[k - 1]);

  MonotoneProfile out;
  out.knots.resize(resolution + 1);
  out.values.resize(resolution + 1);
  for (int j = 0; j <= resolution; ++j) {
    const double s = total * j / resolution;
    out.knots[j] = s;
    // Largest k with mu[k] > s; mu is non-increasing in k.
    const double s_tol = s - 1e-12 * (total + 1.0);
    int lo = -1, hi = nt + 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (mu[mid] > s_tol ? lo : hi) = mid;
    }
    if (lo < 0) {
      out.values[j] = 0.0;
    } else if (lo == nt) {
      out.values[j] = level[nt];
    } else {
      // sup{t : mu(t) > s} inside the bracketing level cell, by bisection on
      // the exact distribution. Handles jumps of mu (flat regions of u).
      double tlo = level[lo], thi = level[lo + 1];
      for (int it = 0; it < 40 && thi - tlo > 1e-13 * (umax + 1.0); ++it) {
        const double tm = 0.5 * (tlo + thi);
        (superlevel_area(u, tm) > s_tol ? tlo : thi) = tm;
      }
      out.values[j] = tlo;
    }
  }
  for (int j = 1; j <= resolution; ++j) out.values[j] = std::min(out.values[j], out.values[j - 1]);
  return out;
}

double convex_rearrangement(const SampledFunction& u, const Norm& f, Vec2 x,
                            int resolution) {
  const double kappa = f.wulff_measure();
  const double total = u.field.mesh->total_area();
  const double radius = std::sqrt(total / kappa);
  const double rho = f.polar().value(x);
  if (rho > radius * (1.0 + 1e-9))
    throw std::domain_error("convex_rearrangement: point outside the rearranged domain");

  // The profile depends only on the field; memoize the last one computed so
  // pointwise evaluation over many x stays cheap.
  static thread_local const TriMesh* cached_mesh = nullptr;
  static thread_local int cached_res = 0;
  static thread_local double cached_sum = 0.0;
  static thread_local MonotoneProfile cached;
  double sum = 0.0;
  for (size_t i = 0; i < u.field.values.size(); ++i)
    sum += u.field.values[i] * (1.0 + 1e-7 * i);
  if (u.field.mesh != cached_mesh || resolution != cached_res || sum != cached_sum) {
    cached = decreasing_rearrangement(u, resolution);
    cached_mesh = u.field.mesh;
    cached_res = resolution;
    cached_sum = sum;
  }
  return cached.value_at(kappa * rho * rho);
}

RadialGradient radial_gradient_identities(const MonotoneProfile& profile, const Norm& f,
                                          Vec2 x) {
  if (x.norm() == 0.0)
    throw std::invalid_argument("radial_gradient_identities: need x != 0");
  const Norm polar = f.polar();
  const double rho = polar.value(x);
  const double kappa = f.wulff_measure();
  const double s = kappa * rho * rho;

  RadialGradient out;
  const double dl = profile.slope_left(s), dr = profile.slope_right(s);
  const double scale = std::max(std::abs(dl), std::abs(dr));
  if (std::abs(dl - dr) > 1e-2 * (1.0 + scale)) {
    out.kink = true;
    return out;
  }
  const double du = 0.5 * (dl + dr);
  const Vec2 grad_rho = polar.gradient(x);
  out.grad = grad_rho * (du * 2.0 * kappa * rho);
  out.f_of_grad = -du * 2.0 * kappa * rho;
  out.norm_grad = x / rho;
  return out;
}

}  // namespace finsler
