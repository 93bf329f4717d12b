#include "finsler/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace finsler {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Minimize a convex function on [0, 1] by golden section.
template <typename F>
double golden_min(F&& g, double tol = 1e-11) {
  double lo = 0.0, hi = 1.0;
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  while (hi - lo > tol) {
    if (f1 > f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + kGolden * (hi - lo); f2 = g(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - kGolden * (hi - lo); f1 = g(x1);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const size_t n = vertices_.size();
  if (n < 3) throw std::invalid_argument("ConvexPolygon: need at least 3 vertices");
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = vertices_[i];
    const Vec2 b = vertices_[(i + 1) % n];
    const Vec2 c = vertices_[(i + 2) % n];
    if ((b - a).cross(c - b) <= 0.0)
      throw std::invalid_argument("ConvexPolygon: not strictly convex CCW at vertex index " +
                                  std::to_string((i + 1) % n));
  }
  double a2 = 0.0;
  Vec2 cw{0, 0};
  for (size_t i = 0; i < n; ++i) {
    const Vec2 p = vertices_[i], q = vertices_[(i + 1) % n];
    const double cr = p.cross(q);
    a2 += cr;
    cw += (p + q) * cr;
  }
  area_ = 0.5 * a2;
  if (!(area_ > 0.0)) throw std::invalid_argument("ConvexPolygon: degenerate area");
  centroid_ = cw / (3.0 * a2);
}

bool ConvexPolygon::contains(Vec2 p, double tol) const {
  const size_t n = vertices_.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = vertices_[i], b = vertices_[(i + 1) % n];
    if ((b - a).cross(p - a) < -tol) return false;
  }
  return true;
}

ConvexPolygon ConvexPolygon::translated(Vec2 t) const {
  std::vector<Vec2> v = vertices_;
  for (Vec2& p : v) p += t;
  return ConvexPolygon(std::move(v));
}

ConvexPolygon ConvexPolygon::scaled(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("ConvexPolygon::scaled: need t > 0");
  std::vector<Vec2> v = vertices_;
  for (Vec2& p : v) p = p * t;
  return ConvexPolygon(std::move(v));
}

ConvexPolygon ConvexPolygon::transformed(const Mat2& a) const {
  std::vector<Vec2> v = vertices_;
  for (Vec2& p : v) p = a * p;
  if (a.det() < 0.0) std::reverse(v.begin(), v.end());
  return ConvexPolygon(std::move(v));
}

std::string ConvexPolygon::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const Vec2& p : vertices_) arr.push_back({p.x, p.y});
  j["vertices"] = arr;
  return j.dump();
}

ConvexPolygon ConvexPolygon::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  std::vector<Vec2> v;
  for (const auto& p : j.at("vertices")) v.push_back(Vec2{p[0], p[1]});
  return ConvexPolygon(std::move(v));
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["diameter"] = diameter;
  j["inradius"] = inradius;
  j["incenter"] = {incenter.x, incenter.y};
  j["diameter_pair"] = {{diameter_a.x, diameter_a.y}, {diameter_b.x, diameter_b.y}};
  j["area"] = area;
  j["isodiametric_ratio"] = isodiametric_ratio;
  return j.dump();
}

std::string MetricReport::csv_header() {
  return "diameter,inradius,incenter_x,incenter_y,area,isodiametric_ratio";
}

std::string MetricReport::csv_row() const {
  std::ostringstream os;
  os.precision(9);
  os << diameter << ',' << inradius << ',' << incenter.x << ',' << incenter.y << ',' << area << ','
     << isodiametric_ratio;
  return os.str();
}

double point_distance(const Norm& f, Vec2 x, Vec2 y) { return f.polar().value(x - y); }

double boundary_distance_polar(const Norm& fo, const ConvexPolygon& omega, Vec2 x) {
  if (!omega.contains(x, 1e-9)) throw std::domain_error("boundary_distance: point outside domain");
  const auto& v = omega.vertices();
  const size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = v[i], b = v[(i + 1) % n];
    const Vec2 e = b - a;
    auto g = [&](double t) { return fo.value(x - (a + e * t)); };
    const double t = golden_min(g);
    best = std::min(best, std::min({g(t), g(0.0), g(1.0)}));
  }
  return best;
}

double boundary_distance(const Norm& f, const ConvexPolygon& omega, Vec2 x) {
  return boundary_distance_polar(f.polar(), omega, x);
}

DiameterResult diameter(const Norm& f, const ConvexPolygon& omega) {
  const Norm fo = f.polar();
  const auto& v = omega.vertices();
  DiameterResult r;
  for (size_t i = 0; i < v.size(); ++i)
    for (size_t j = i + 1; j < v.size(); ++j) {
      const double d = fo.value(v[j] - v[i]);
      if (d > r.value) { r.value = d; r.a = v[i]; r.b = v[j]; }
    }
  return r;
}

InradiusResult inradius(const Norm& f, const ConvexPolygon& omega) {
  const Norm fo = f.polar();
  // Bounding box of the polygon.
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& p : omega.vertices()) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  auto dist = [&](Vec2 p) -> double {
    if (!omega.contains(p, 0.0)) return -fo.value(p - omega.centroid());  // push back inside
    return boundary_distance_polar(fo, omega, p);
  };
  // 33x33 seed grid over the bounding box.
  Vec2 best_seed = omega.centroid();
  double best_val = dist(best_seed);
  constexpr int kGrid = 33;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const Vec2 p{x0 + (x1 - x0) * (i + 0.5) / kGrid, y0 + (y1 - y0) * (j + 0.5) / kGrid};
      if (!omega.contains(p, 0.0)) continue;
      const double d = boundary_distance_polar(fo, omega, p);
      if (d > best_val) { best_val = d; best_seed = p; }
    }
  // Nelder-Mead polish; d_F is concave on the convex domain so the local
  // maximum found here is global.
  const double h0 = 0.05 * std::max(x1 - x0, y1 - y0);
  std::array<Vec2, 3> s{best_seed, best_seed + Vec2{h0, 0}, best_seed + Vec2{0, h0}};
  std::array<double, 3> fv{};
  for (int i = 0; i < 3; ++i) fv[i] = dist(s[i]);
  for (int iter = 0; iter < 400; ++iter) {
    // Order ascending: s[0] worst, s[2] best (we maximize).
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    std::array<Vec2, 3> ss{s[idx[0]], s[idx[1]], s[idx[2]]};
    std::array<double, 3> ff{fv[idx[0]], fv[idx[1]], fv[idx[2]]};
    s = ss; fv = ff;
    if ((s[0] - s[2]).norm() < 1e-9 && (s[1] - s[2]).norm() < 1e-9) break;
    const Vec2 mid = (s[1] + s[2]) * 0.5;
    const Vec2 refl = mid + (mid - s[0]);
    const double fr = dist(refl);
    if (fr > fv[2]) {
      const Vec2 exp = mid + (mid - s[0]) * 2.0;
      const double fe = dist(exp);
      if (fe > fr) { s[0] = exp; fv[0] = fe; } else { s[0] = refl; fv[0] = fr; }
    } else if (fr > fv[1]) {
      s[0] = refl; fv[0] = fr;
    } else {
      const Vec2 con = mid + (s[0] - mid) * 0.5;
      const double fc = dist(con);
      if (fc > fv[0]) { s[0] = con; fv[0] = fc; }
      else {
        s[0] = s[2] + (s[0] - s[2]) * 0.5; fv[0] = dist(s[0]);
        s[1] = s[2] + (s[1] - s[2]) * 0.5; fv[1] = dist(s[1]);
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i) if (fv[i] > fv[best]) best = i;
  return {fv[best], s[best]};
}

MetricReport metric_report(const Norm& f, const ConvexPolygon& omega) {
  MetricReport r;
  const DiameterResult d = diameter(f, omega);
  const InradiusResult i = inradius(f, omega);
  r.diameter = d.value;
  r.diameter_a = d.a;
  r.diameter_b = d.b;
  r.inradius = i.value;
  r.incenter = i.center;
  r.area = omega.area();
  const double kappa = f.wulff_measure();
  r.isodiametric_ratio = r.area / (kappa / 4.0 * d.value * d.value);
  return r;
}

ConvexPolygon wulff_polygon(const Norm& f, Vec2 center, double r, int sides) {
  if (sides < 16) throw std::invalid_argument("wulff_polygon: need sides >= 16");
  if (!(r > 0.0)) throw std::invalid_argument("wulff_polygon: need r > 0");
  std::vector<Vec2> v;
  v.reserve(sides);
  for (int i = 0; i < sides; ++i) {
    const double th = 2.0 * M_PI * i / sides;
    v.push_back(center + f.wulff_boundary_point(th) * r);
  }
  return ConvexPolygon(std::move(v));
}

ConvexPolygon wulff_rescaled(const Norm& f, const ConvexPolygon& omega, int sides) {
  const double kappa = f.wulff_measure();
  const double r = std::sqrt(omega.area() / kappa);
  return wulff_polygon(f, Vec2{0, 0}, r, sides);
}

ConvexPolygon spindle(const Norm& f, int k, double d) {
  if (k < 1) throw std::invalid_argument("spindle: need k >= 1");
  if (!(d > 0.0)) throw std::invalid_argument("spindle: need d > 0");
  const double gamma = f.polar().value(Vec2{1, 0});
  const double ell = d / (2.0 * gamma);
  return ConvexPolygon({Vec2{-ell, 0}, Vec2{0, -ell / k}, Vec2{ell, 0}, Vec2{0, ell / k}});
}

}  // namespace finsler
