#include "finsler/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace finsler {

namespace {

// 7-point symmetric triangle rule, exact for degree 5.
struct QuadPoint {
  double l0, l1, l2, w;
};
constexpr std::array<QuadPoint, 7> kQuad7 = {{
    {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827},
}};

double tri_signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * (b - a).cross(c - a); }

// In-circumcircle test with extended precision; positive when d is inside the
// circumcircle of CCW triangle (a, b, c).
bool in_circumcircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const long double ax = a.x - d.x, ay = a.y - d.y;
  const long double bx = b.x - d.x, by = b.y - d.y;
  const long double cx = c.x - d.x, cy = c.y - d.y;
  const long double t0 = (ax * ax + ay * ay) * (bx * cy - by * cx);
  const long double t1 = (bx * bx + by * by) * (ax * cy - ay * cx);
  const long double t2 = (cx * cx + cy * cy) * (ax * by - ay * bx);
  // Containment by a relative margin: cocircular configurations (regular
  // inscribed polygons) must test as outside, or rounding noise makes the
  // cavity inconsistent.
  return t0 - t1 + t2 > 1e-12L * (std::abs(t0) + std::abs(t1) + std::abs(t2));
}

struct Tri {
  int v[3];
  bool alive = true;
};

// Incremental Bowyer-Watson over a fixed point set.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& p : pts) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  const double span = std::max(x1 - x0, y1 - y0);
  const Vec2 mid{0.5 * (x0 + x1), 0.5 * (y0 + y1)};

  std::vector<Vec2> p = pts;
  const int n = static_cast<int>(p.size());
  p.push_back(mid + Vec2{-40 * span, -30 * span});
  p.push_back(mid + Vec2{40 * span, -30 * span});
  p.push_back(mid + Vec2{0, 50 * span});

  std::vector<Tri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});

  std::vector<int> bad;
  // Boundary edges of the cavity, keyed as ordered pairs.
  std::vector<std::pair<int, int>> hole;
  for (int ip = 0; ip < n; ++ip) {
    if (getenv("FINSLER_MESH_DEBUG") && ip % 100 == 0) fprintf(stderr, "ip=%d tris=%zu\n", ip, tris.size());
    bad.clear();
    hole.clear();
    // The triangle containing the point must always join the cavity, even
    // when the margin predicate calls the point (near-cocircular) outside
    // its circumcircle; otherwise the new triangles overlap it.
    int seed = -1;
    for (int t = 0; t < (int)tris.size(); ++t) {
      if (!tris[t].alive) continue;
      const Vec2 a = p[tris[t].v[0]], b = p[tris[t].v[1]], c = p[tris[t].v[2]];
      const bool incirc = in_circumcircle(a, b, c, p[ip]);
      const double s0 = (b - a).cross(p[ip] - a);
      const double s1 = (c - b).cross(p[ip] - b);
      const double s2 = (a - c).cross(p[ip] - c);
      const bool inside = (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
      if (inside && seed < 0) seed = (int)bad.size();
      if (incirc || inside) bad.push_back(t);
    }
    // Keep only the edge-connected component around the containing triangle:
    // stray circumcircle hits from sliver triangles would tear extra holes.
    if (seed >= 0 && bad.size() > 1) {
      std::vector<char> keep(bad.size(), 0);
      std::vector<int> stack{seed};
      keep[seed] = 1;
      while (!stack.empty()) {
        const int bi = stack.back();
        stack.pop_back();
        for (int bj = 0; bj < (int)bad.size(); ++bj) {
          if (keep[bj]) continue;
          int common = 0;
          for (int e = 0; e < 3; ++e)
            for (int f = 0; f < 3; ++f)
              if (tris[bad[bi]].v[e] == tris[bad[bj]].v[f]) ++common;
          if (common >= 2) { keep[bj] = 1; stack.push_back(bj); }
        }
      }
      std::vector<int> kept;
      for (int bi = 0; bi < (int)bad.size(); ++bi)
        if (keep[bi]) kept.push_back(bad[bi]);
      bad.swap(kept);
    }
    // Cavity boundary: edges of bad triangles that are not shared twice.
    for (int t : bad)
      for (int e = 0; e < 3; ++e) {
        const int a = tris[t].v[e], b = tris[t].v[(e + 1) % 3];
        bool shared = false;
        for (int s : bad) {
          if (s == t) continue;
          for (int f = 0; f < 3; ++f) {
            const int c = tris[s].v[f], d = tris[s].v[(f + 1) % 3];
            if ((a == d && b == c) || (a == c && b == d)) { shared = true; break; }
          }
          if (shared) break;
        }
        if (!shared) hole.emplace_back(a, b);
      }
    for (int t : bad) tris[t].alive = false;
    for (auto [a, b] : hole) tris.push_back({{a, b, ip}, true});
    // Compact occasionally to keep scans linear in live triangles.
    if (tris.size() > 4 * (size_t)std::max(16, 2 * ip)) {
      std::vector<Tri> keep;
      keep.reserve(tris.size());
      for (const Tri& t : tris)
        if (t.alive) keep.push_back(t);
      tris.swap(keep);
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const Tri& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back({t.v[0], t.v[1], t.v[2]});
  }
  return out;
}

// Euclidean distance from a point to a segment.
double segment_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 e = b - a;
  const double t = std::clamp((p - a).dot(e) / e.squared_norm(), 0.0, 1.0);
  return (p - (a + e * t)).norm();
}

// Deterministic tie-break jitter in [-1, 1]^2 from an integer pair.
Vec2 hash_jitter(int i, int j) {
  uint64_t h = (uint64_t)(uint32_t)i * 0x9e3779b97f4a7c15ULL ^ (uint64_t)(uint32_t)j * 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 31; h *= 0x94d049bb133111ebULL; h ^= h >> 29;
  const double u = (double)(h & 0xffffffff) / 4294967295.0;
  const double v = (double)(h >> 32) / 4294967295.0;
  return {2 * u - 1, 2 * v - 1};
}

}  // namespace

double TriMesh::total_area() const {
  return std::accumulate(tri_area.begin(), tri_area.end(), 0.0);
}

double TriMesh::max_edge() const {
  double m = 0.0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e)
      m = std::max(m, (nodes[t[e]] - nodes[t[(e + 1) % 3]]).norm());
  return m;
}

double TriMesh::min_angle_deg() const {
  double m = 180.0;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e) {
      const Vec2 a = nodes[t[e]], b = nodes[t[(e + 1) % 3]], c = nodes[t[(e + 2) % 3]];
      const Vec2 u = b - a, v = c - a;
      m = std::min(m, std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)) * 180.0 /
                          M_PI);
    }
  return m;
}

TriMesh triangulate(const ConvexPolygon& omega, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("triangulate: need h > 0");
  const auto& verts = omega.vertices();
  const size_t nv = verts.size();

  std::vector<Vec2> pts;
  std::vector<char> on_boundary;
  for (size_t i = 0; i < nv; ++i) {
    const Vec2 a = verts[i], b = verts[(i + 1) % nv];
    const int segs = std::max(1, (int)std::ceil((b - a).norm() / h));
    for (int s = 0; s < segs; ++s) {
      // Tiny tangential jitter keeps subdivision points on the edge while
      // breaking the exactly cocircular quadruples that regular spacing
      // creates (square corners, inscribed polygons of a circle).
      double t = (double)s / segs;
      if (s > 0) t += (1e-5 / segs) * hash_jitter((int)i, s).x;
      pts.push_back(a + (b - a) * t);
      on_boundary.push_back(1);
    }
  }

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& p : verts) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  const double row_h = h * std::sqrt(3.0) / 2.0;
  int j = 0;
  for (double y = y0 + 0.6 * row_h; y < y1; y += row_h, ++j) {
    const double off = (j % 2) ? 0.5 * h : 0.0;
    int i = 0;
    for (double x = x0 + 0.3 * h + off; x < x1; x += h, ++i) {
      Vec2 p{x, y};
      p += hash_jitter(i, j) * (0.02 * h);
      if (!omega.contains(p, 0.0)) continue;
      double dmin = 1e300;
      for (size_t e = 0; e < nv; ++e)
        dmin = std::min(dmin, segment_distance(verts[e], verts[(e + 1) % nv], p));
      if (dmin < 0.55 * h) continue;
      pts.push_back(p);
      on_boundary.push_back(0);
    }
  }

  TriMesh mesh;
  mesh.nodes = pts;
  mesh.is_boundary = on_boundary;
  mesh.target_h = h;
  for (size_t i = 0; i < pts.size(); ++i)
    if (on_boundary[i]) mesh.boundary_nodes.push_back((int)i);

  mesh.triangles = delaunay(pts);
  // Enforce CCW orientation and drop zero-area slivers from cocircular ties.
  std::erase_if(mesh.triangles, [&](const std::array<int, 3>& t) {
    return std::abs(tri_signed_area(pts[t[0]], pts[t[1]], pts[t[2]])) < 1e-13 * h * h;
  });
  for (auto& t : mesh.triangles) {
    if (tri_signed_area(pts[t[0]], pts[t[1]], pts[t[2]]) < 0.0) std::swap(t[1], t[2]);
  }

  mesh.tri_area.reserve(mesh.triangles.size());
  mesh.shape_grad.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec2 a = pts[t[0]], b = pts[t[1]], c = pts[t[2]];
    const double area = tri_signed_area(a, b, c);
    mesh.tri_area.push_back(area);
    // grad of hat_i is the rotated opposite edge over (2 area).
    const auto rot = [](Vec2 v) { return Vec2{-v.y, v.x}; };
    mesh.shape_grad.push_back({rot(c - b) / (2 * area), rot(a - c) / (2 * area),
                               rot(b - a) / (2 * area)});
  }

  const double defect = mesh.total_area() - omega.area();
  if (std::abs(defect) > 1e-9 * omega.area())
    throw std::runtime_error("triangulate: triangulation does not cover the polygon (area defect " +
                             std::to_string(defect) + ")");
  return mesh;
}

Vec2 cell_gradient(const ScalarField& u, int tri) {
  const TriMesh& m = *u.mesh;
  const auto& t = m.triangles[tri];
  Vec2 g{0, 0};
  for (int i = 0; i < 3; ++i) g += m.shape_grad[tri][i] * u.values[t[i]];
  return g;
}

double integrate_power(const ScalarField& u, double p, bool signed_mode,
                       const std::vector<double>* node_weight) {
  const TriMesh& m = *u.mesh;
  double acc = 0.0;
  for (size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    double cell = 0.0;
    for (const QuadPoint& q : kQuad7) {
      const double uv =
          q.l0 * u.values[tri[0]] + q.l1 * u.values[tri[1]] + q.l2 * u.values[tri[2]];
      double term = signed_mode ? std::pow(std::abs(uv), p - 1.0) * (uv >= 0 ? 1.0 : -1.0)
                                : std::pow(std::abs(uv), p);
      if (node_weight) {
        const auto& w = *node_weight;
        term *= q.l0 * w[tri[0]] + q.l1 * w[tri[1]] + q.l2 * w[tri[2]];
      }
      cell += q.w * term;
    }
    acc += cell * m.tri_area[t];
  }
  return acc;
}

double dirichlet_energy(const Norm& f, const ScalarField& u, double p) {
  const TriMesh& m = *u.mesh;
  double acc = 0.0;
  for (size_t t = 0; t < m.triangles.size(); ++t) {
    const double fv = f.value(cell_gradient(u, (int)t));
    acc += m.tri_area[t] * std::pow(fv, p);
  }
  return acc;
}

void write_off(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_off: cannot open " + path);
  os.precision(9);
  os << "OFF\n" << mesh.nodes.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const Vec2& p : mesh.nodes) os << p.x << ' ' << p.y << " 0\n";
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_field_csv(const ScalarField& u, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_field_csv: cannot open " + path);
  os.precision(9);
  os << "node_x,node_y,value\n";
  for (size_t i = 0; i < u.mesh->nodes.size(); ++i)
    os << u.mesh->nodes[i].x << ',' << u.mesh->nodes[i].y << ',' << u.values[i] << '\n';
}

void write_svg_heatmap(const ScalarField& u, const std::string& path, int width_px) {
  const TriMesh& m = *u.mesh;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_svg_heatmap: cannot open " + path);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& p : m.nodes) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  const double scale = width_px / (x1 - x0);
  const int height_px = (int)std::ceil((y1 - y0) * scale);
  double vmin = *std::min_element(u.values.begin(), u.values.end());
  double vmax = *std::max_element(u.values.begin(), u.values.end());
  if (vmax <= vmin) vmax = vmin + 1.0;

  // Diverging blue-white-red map.
  const auto color = [&](double v) {
    const double t = std::clamp((v - vmin) / (vmax - vmin), 0.0, 1.0);
    int r, g, b;
    if (t < 0.5) {
      const double s = 2 * t;
      r = (int)(255 * (0.23 + 0.77 * s));
      g = (int)(255 * (0.30 + 0.70 * s));
      b = 255;
    } else {
      const double s = 2 * (t - 0.5);
      r = 255;
      g = (int)(255 * (1.0 - 0.70 * s));
      b = (int)(255 * (1.0 - 0.77 * s));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };

  os.precision(9);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\""
     << height_px << "\" viewBox=\"0 0 " << width_px << ' ' << height_px << "\">\n";
  for (size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const double v = (u.values[tri[0]] + u.values[tri[1]] + u.values[tri[2]]) / 3.0;
    os << "<polygon points=\"";
    for (int e = 0; e < 3; ++e) {
      const Vec2 p = m.nodes[tri[e]];
      os << (p.x - x0) * scale << ',' << (y1 - p.y) * scale << (e < 2 ? " " : "");
    }
    os << "\" fill=\"" << color(v) << "\" stroke=\"none\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace finsler
