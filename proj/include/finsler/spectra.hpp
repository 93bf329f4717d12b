#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/mesh.hpp"
#include "finsler/norm.hpp"
#include "finsler/polygon.hpp"

namespace finsler {

// pi_p = 2 pi (p-1)^{1/p} / (p sin(pi/p)), p > 1.
double pi_p(double p);

struct EigenOptions {
  int max_iter = 50000;
  double tol = 1e-10;      // relative quotient decrease, watched over 25 iters
  std::uint64_t seed = 0;  // perturbation of the warm start
};

struct EigenResult {
  double p = 2.0;
  double lambda = 0.0;  // p-th root of the Rayleigh quotient
  std::shared_ptr<TriMesh> mesh;
  ScalarField field;  // minimizer, ||u||_p = 1
  double residual = 0.0;
  int iterations = 0;
  double constraint_defect = 0.0;  // |int |u|^{p-2} u| / int |u|^{p-1}
  std::vector<double> trace;       // quotient after each accepted step
};

struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what, std::vector<double> trace_ = {})
      : std::runtime_error(what), trace(std::move(trace_)) {}
  std::vector<double> trace;
};

// First nontrivial Neumann value: minimize int F^p(grad u) / int |u|^p under
// int |u|^{p-2} u = 0. lambda^p is certified inside
// [(pi_p/diam_F)^p, Rayleigh(d_F(. , x0) - c)].
EigenResult neumann_eigenvalue(const Norm& f, const ConvexPolygon& omega, double p,
                               double h, const EigenOptions& opts = {});

// First Dirichlet value: same quotient over fields vanishing on the boundary.
EigenResult dirichlet_eigenvalue(const Norm& f, const ConvexPolygon& omega, double p,
                                 double h, const EigenOptions& opts = {});

// (2 / diam_F, 1 / inradius_F).
std::pair<double, double> limit_eigenvalues(const Norm& f, const ConvexPolygon& omega);

// Smallest nontrivial eigenvalue of the P1 membrane pencil K x = mu M x with
// the anisotropy frozen at p = 2 (exact for the Euclidean and ellipse gauges).
// dirichlet selects the boundary condition. Used as warm start and oracle.
double linear_membrane_eigenvalue(const Norm& f, const TriMesh& mesh, bool dirichlet,
                                  std::vector<double>* eigvec = nullptr);

// Weighted 1D problem on [-l, l] with the cone weight g(s) = w_{n-1}(l-|s|)^{n-1}:
// minimize int g |f'|^p / int g |f|^p under int g |f|^{p-2} f = 0.
struct OneDProfile {
  double l = 1.0;
  int n = 1;
  double p = 2.0;
  double eta = 0.0;  // the eigenvalue (not its p-th root)
  std::vector<double> grid;
  std::vector<double> f;
};

OneDProfile oned_weighted_eigen(double l, int n, double p, int grid);

struct SpindleRow {
  int k = 0;
  double lambda_neumann = 0.0;  // Lambda_p of the spindle
  double upper = 0.0;           // lambda_p(W) * diam ratio
  double gap = 0.0;
  bool flagged = false;  // non-monotone gap step (mesh error)
};

// Neumann values of thinning spindles against the Dirichlet bound of the
// Wulff shape with the same diameter.
std::vector<SpindleRow> spindle_limit_study(const Norm& f, double d, double p,
                                            const std::vector<int>& ks, double h,
                                            const EigenOptions& opts = {});

}  // namespace finsler
