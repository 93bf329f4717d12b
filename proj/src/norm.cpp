#include "finsler/norm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace finsler {

namespace {

constexpr double kGolden = 0.6180339887498949;

bool orthonormal_pair(const std::vector<Vec2>& dirs, double tol = 1e-12) {
  if (dirs.size() != 2) return false;
  return std::abs(dirs[0].norm() - 1.0) <= tol && std::abs(dirs[1].norm() - 1.0) <= tol &&
         std::abs(dirs[0].dot(dirs[1])) <= tol;
}

double dual_exponent(double s) {
  // 1/s + 1/s' = 1
  return s / (s - 1.0);
}

}  // namespace

Norm Norm::lq(double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("Norm::lq: need 1 < q < oo");
  Norm n;
  n.kind_ = Kind::PowerSum;
  n.dirs_ = {Vec2{1, 0}, Vec2{0, 1}};
  n.exponent_ = q;
  n.axis_pair_ = true;
  return n;
}

Norm Norm::ellipse(const Mat2& m) {
  if (!m.is_symmetric(1e-12)) throw std::invalid_argument("Norm::ellipse: matrix not symmetric");
  if (m.min_eigenvalue_sym() <= 0.0)
    throw std::invalid_argument("Norm::ellipse: matrix not positive definite");
  Norm n;
  n.kind_ = Kind::Ellipse;
  n.m_ = m;
  n.m_inv_ = m.inverse();
  return n;
}

Norm Norm::smoothed_polytope(std::vector<Vec2> dirs, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("Norm::smoothed_polytope: need 0 < delta < 1");
  if (dirs.size() < 2)
    throw std::invalid_argument("Norm::smoothed_polytope: need at least two directions");
  double cross_max = 0.0;
  for (size_t i = 0; i < dirs.size(); ++i) {
    if (dirs[i].norm() == 0.0)
      throw std::invalid_argument("Norm::smoothed_polytope: zero direction");
    for (size_t j = i + 1; j < dirs.size(); ++j)
      cross_max = std::max(cross_max, std::abs(dirs[i].cross(dirs[j])));
  }
  if (cross_max < 1e-12)
    throw std::invalid_argument("Norm::smoothed_polytope: directions do not span the plane");
  Norm n;
  n.kind_ = Kind::PowerSum;
  n.dirs_ = std::move(dirs);
  n.exponent_ = 1.0 / delta;
  n.delta_ = delta;
  n.axis_pair_ = orthonormal_pair(n.dirs_);
  return n;
}

double Norm::power_sum_value(Vec2 xi) const {
  const double s = exponent_;
  // Factor out the largest |d_i . xi| for overflow safety at large s.
  double gmax = 0.0;
  for (const Vec2& d : dirs_) gmax = std::max(gmax, std::abs(d.dot(xi)));
  if (gmax == 0.0) return 0.0;
  double acc = 0.0;
  for (const Vec2& d : dirs_) acc += std::pow(std::abs(d.dot(xi)) / gmax, s);
  return gmax * std::pow(acc, 1.0 / s);
}

Vec2 Norm::power_sum_gradient(Vec2 xi) const {
  const double s = exponent_;
  const double f = power_sum_value(xi);
  // grad F = sum_i (|g_i|/F)^{s-1} sgn(g_i) d_i
  Vec2 g{0, 0};
  for (const Vec2& d : dirs_) {
    const double gi = d.dot(xi);
    if (gi == 0.0) continue;
    const double w = std::pow(std::abs(gi) / f, s - 1.0);
    g += d * (w * (gi > 0 ? 1.0 : -1.0));
  }
  return g;
}

Mat2 Norm::power_sum_hessian(Vec2 xi) const {
  const double s = exponent_;
  const double f = power_sum_value(xi);
  // Hess F = (s-1)/F [ sum_i (|g_i|/F)^{s-2} d_i d_i^T - (grad F)(grad F)^T ]
  Mat2 h{0, 0, 0, 0};
  for (const Vec2& d : dirs_) {
    const double gi = d.dot(xi);
    const double w = std::pow(std::abs(gi) / f, s - 2.0);
    h = h + Mat2::outer(d, d) * w;
  }
  const Vec2 g = power_sum_gradient(xi);
  h = h - Mat2::outer(g, g);
  return h * ((s - 1.0) / f);
}

double Norm::value(Vec2 xi) const {
  if (numeric_polar_) {
    if (xi.x == 0.0 && xi.y == 0.0) return 0.0;
    return polar_support(xi).first;
  }
  switch (kind_) {
    case Kind::PowerSum:
      return power_sum_value(xi);
    case Kind::Ellipse:
      return std::sqrt(std::max(0.0, xi.dot(m_ * xi)));
  }
  return 0.0;
}

Vec2 Norm::gradient(Vec2 xi) const {
  if (xi.x == 0.0 && xi.y == 0.0)
    throw std::domain_error("Norm::gradient: undefined at the origin");
  if (numeric_polar_) {
    // Envelope: F°(v) = max_{F(xi)=1} xi . v, so grad F°(v) is the maximizer.
    return polar_support(xi).second;
  }
  switch (kind_) {
    case Kind::PowerSum:
      return power_sum_gradient(xi);
    case Kind::Ellipse: {
      const double f = value(xi);
      return (m_ * xi) / f;
    }
  }
  return {};
}

Mat2 Norm::hessian(Vec2 xi) const {
  if (xi.x == 0.0 && xi.y == 0.0)
    throw std::domain_error("Norm::hessian: undefined at the origin");
  if (numeric_polar_) {
    // Central differences of the envelope gradient.
    const double h = 1e-5 * xi.norm();
    const Vec2 gx1 = gradient(xi + Vec2{h, 0}), gx0 = gradient(xi - Vec2{h, 0});
    const Vec2 gy1 = gradient(xi + Vec2{0, h}), gy0 = gradient(xi - Vec2{0, h});
    Mat2 m{(gx1.x - gx0.x) / (2 * h), (gy1.x - gy0.x) / (2 * h),
           (gx1.y - gx0.y) / (2 * h), (gy1.y - gy0.y) / (2 * h)};
    // Symmetrize.
    const double off = 0.5 * (m.b + m.c);
    m.b = m.c = off;
    return m;
  }
  switch (kind_) {
    case Kind::PowerSum:
      return power_sum_hessian(xi);
    case Kind::Ellipse: {
      const double f = value(xi);
      const Vec2 mxi = m_ * xi;
      return m_ * (1.0 / f) - Mat2::outer(mxi, mxi) * (1.0 / (f * f * f));
    }
  }
  return {};
}

Vec2 Norm::gradient_of_power(double p, Vec2 xi) const {
  if (!(p > 1.0)) throw std::invalid_argument("Norm::gradient_of_power: need p > 1");
  if (xi.x == 0.0 && xi.y == 0.0) return {0, 0};
  const double f = value(xi);
  return gradient(xi) * std::pow(f, p - 1.0);
}

Mat2 Norm::hessian_of_power(double p, Vec2 xi) const {
  const double f = value(xi);
  const Vec2 g = gradient(xi);
  return hessian(xi) * (p * std::pow(f, p - 1.0)) +
         Mat2::outer(g, g) * (p * (p - 1.0) * std::pow(f, p - 2.0));
}

bool Norm::has_closed_polar() const {
  if (numeric_polar_) return true;  // polar of the polar is the stored primal
  return kind_ == Kind::Ellipse || axis_pair_;
}

Norm Norm::polar() const {
  if (numeric_polar_) {
    Norm n = *this;
    n.numeric_polar_ = false;  // bidual
    return n;
  }
  switch (kind_) {
    case Kind::Ellipse:
      return ellipse(m_inv_);
    case Kind::PowerSum:
      if (axis_pair_) {
        Norm n = *this;
        n.exponent_ = dual_exponent(exponent_);
        if (delta_ > 0.0) n.delta_ = 1.0 / n.exponent_;
        return n;
      } else {
        Norm n = *this;
        n.numeric_polar_ = true;
        return n;
      }
  }
  throw std::logic_error("Norm::polar: unreachable");
}

Norm Norm::rotated(const Mat2& a) const {
  const Mat2 ata = a.transpose() * a;
  if (std::abs(ata.a - 1) > 1e-10 || std::abs(ata.d - 1) > 1e-10 || std::abs(ata.b) > 1e-10 ||
      std::abs(a.det() - 1.0) > 1e-10)
    throw std::invalid_argument("Norm::rotated: matrix is not a rotation");
  Norm n = *this;
  switch (kind_) {
    case Kind::Ellipse:
      // F(Ax)^2 = x^T (A^T M A) x
      n.m_ = a.transpose() * m_ * a;
      // Enforce exact symmetry against roundoff.
      n.m_.b = n.m_.c = 0.5 * (n.m_.b + n.m_.c);
      n.m_inv_ = n.m_.inverse();
      return n;
    case Kind::PowerSum:
      // sum |d_i . (Ax)|^s = sum |(A^T d_i) . x|^s
      for (Vec2& d : n.dirs_) d = a.transpose() * d;
      n.axis_pair_ = orthonormal_pair(n.dirs_, 1e-9);
      return n;
  }
  throw std::logic_error("Norm::rotated: unreachable");
}

std::pair<double, Vec2> Norm::polar_support(Vec2 v) const {
  // Maximize h(theta) = e(theta).v / F(e(theta)) over [0, 2pi).
  // The stored spec is the primal here (numeric_polar_ objects call this with
  // the primal member data), so evaluate the primal power sum directly.
  const auto fval = [&](Vec2 e) { return power_sum_value(e); };
  const auto h = [&](double th) {
    const Vec2 e{std::cos(th), std::sin(th)};
    return e.dot(v) / fval(e);
  };
  const int coarse = 128;
  double best_th = 0.0, best = -1e300;
  for (int i = 0; i < coarse; ++i) {
    const double th = 2.0 * M_PI * i / coarse;
    const double val = h(th);
    if (val > best) { best = val; best_th = th; }
  }
  // Golden-section on the bracketing interval.
  double lo = best_th - 2.0 * M_PI / coarse, hi = best_th + 2.0 * M_PI / coarse;
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = h(x1), f2 = h(x2);
  while (hi - lo > 1e-11) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + kGolden * (hi - lo); f2 = h(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - kGolden * (hi - lo); f1 = h(x1);
    }
  }
  double th = 0.5 * (lo + hi);
  // One Newton polish step on h'(theta) = 0 with a finite-difference h''.
  {
    const double dt = 1e-6;
    const double hp = (h(th + dt) - h(th - dt)) / (2 * dt);
    const double hpp = (h(th + dt) - 2 * h(th) + h(th - dt)) / (dt * dt);
    if (hpp < 0.0) {
      const double step = hp / hpp;
      if (std::abs(step) < 2.0 * M_PI / coarse) th -= step;
    }
  }
  Vec2 e{std::cos(th), std::sin(th)};
  const double fe = fval(e);
  const Vec2 xi = e / fe;  // maximizer normalized to F(xi) = 1
  return {xi.dot(v), xi};
}

Vec2 Norm::wulff_boundary_point(double theta) const {
  const Vec2 e{std::cos(theta), std::sin(theta)};
  const double fo = polar().value(e);
  return e / fo;
}

double Norm::wulff_measure() const {
  const Norm po = polar();
  // Polygonal area of the n-gon inscribed in {F° = 1}, Richardson
  // extrapolated; boundary smoothness gives O(n^-2) convergence.
  auto area_n = [&](int n) {
    double acc = 0.0;
    Vec2 prev = po.value(Vec2{1, 0}) > 0 ? Vec2{1.0 / po.value(Vec2{1, 0}), 0} : Vec2{};
    for (int i = 1; i <= n; ++i) {
      const double th = 2.0 * M_PI * i / n;
      const Vec2 e{std::cos(th), std::sin(th)};
      const Vec2 cur = e / po.value(e);
      acc += prev.cross(cur);
      prev = cur;
    }
    return 0.5 * acc;
  };
  double a1 = area_n(2048);
  for (int n = 4096; n <= 1 << 17; n *= 2) {
    const double a2 = area_n(n);
    const double extr = (4.0 * a2 - a1) / 3.0;
    if (std::abs(a2 - a1) < 3e-7 * std::abs(extr)) return extr;
    a1 = a2;
  }
  return a1;
}

std::pair<double, double> Norm::linearity_bounds() const {
  double lo = 1e300, hi = 0.0;
  const int n = 4096;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * M_PI * i / n;
    const double f = value(Vec2{std::cos(th), std::sin(th)});
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return {lo, hi};
}

std::string Norm::to_json() const {
  nlohmann::json j;
  if (numeric_polar_) j["role"] = "polar-of";
  switch (kind_) {
    case Kind::Ellipse:
      j["kind"] = "ellipse";
      j["m"] = {{m_.a, m_.b}, {m_.c, m_.d}};
      break;
    case Kind::PowerSum:
      if (delta_ == 0.0 && axis_pair_ && dirs_[0].x == 1.0 && dirs_[0].y == 0.0) {
        j["kind"] = "lq";
        j["q"] = exponent_;
      } else {
        j["kind"] = "smoothed_polytope";
        j["delta"] = delta_ > 0.0 ? delta_ : 1.0 / exponent_;
        auto arr = nlohmann::json::array();
        for (const Vec2& d : dirs_) arr.push_back({d.x, d.y});
        j["dirs"] = arr;
      }
      break;
  }
  return j.dump();
}

Norm Norm::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  Norm n = [&] {
    if (kind == "lq") return lq(j.at("q").get<double>());
    if (kind == "ellipse") {
      const auto& m = j.at("m");
      return ellipse(Mat2{m[0][0], m[0][1], m[1][0], m[1][1]});
    }
    if (kind == "smoothed_polytope") {
      std::vector<Vec2> dirs;
      for (const auto& d : j.at("dirs")) dirs.push_back(Vec2{d[0], d[1]});
      return smoothed_polytope(std::move(dirs), j.at("delta").get<double>());
    }
    throw std::invalid_argument("Norm::from_json: unknown kind '" + kind + "'");
  }();
  if (j.value("role", "primal") == std::string("polar-of")) n = n.polar();
  return n;
}

}  // namespace finsler
