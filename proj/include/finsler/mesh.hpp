#pragma once

#include <array>
#include <string>
#include <vector>

#include "finsler/norm.hpp"
#include "finsler/polygon.hpp"

namespace finsler {

// P1 triangulation of a convex polygon. Immutable after construction; the
// per-triangle areas and shape-function gradients are precomputed.
struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // CCW node indices
  std::vector<int> boundary_nodes;
  std::vector<char> is_boundary;  // one flag per node
  double target_h = 0.0;

  std::vector<double> tri_area;
  std::vector<std::array<Vec2, 3>> shape_grad;  // gradient of each P1 hat on the cell

  double total_area() const;
  double max_edge() const;
  double min_angle_deg() const;
};

// Delaunay triangulation of boundary points spaced <= h plus a hexagonal
// interior lattice of pitch h. Max edge <= 1.8 h; the interior quality floor
// is 20 degrees, relaxed only at polygon corners sharper than that.
TriMesh triangulate(const ConvexPolygon& omega, double h);

struct ScalarField {
  const TriMesh* mesh = nullptr;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const TriMesh& m) : mesh(&m), values(m.nodes.size(), 0.0) {}
  template <typename F>
  static ScalarField sample(const TriMesh& m, F&& f) {
    ScalarField u(m);
    for (size_t i = 0; i < m.nodes.size(); ++i) u.values[i] = f(m.nodes[i]);
    return u;
  }
};

// Exact gradient of the linear interpolant on one cell.
Vec2 cell_gradient(const ScalarField& u, int tri);

// 7-point Gauss quadrature (degree-5 exact) of |u|^p, or of |u|^{p-2} u when
// signed_mode is set. An optional nodal weight is interpolated with u.
double integrate_power(const ScalarField& u, double p, bool signed_mode = false,
                       const std::vector<double>* node_weight = nullptr);

// sum over cells of area * F(grad u)^p; exact per cell for P1 fields.
double dirichlet_energy(const Norm& f, const ScalarField& u, double p);

void write_off(const TriMesh& mesh, const std::string& path);
void write_field_csv(const ScalarField& u, const std::string& path);
void write_svg_heatmap(const ScalarField& u, const std::string& path, int width_px = 720);

}  // namespace finsler
