#pragma once

#include <string>
#include <vector>

#include "finsler/mesh.hpp"
#include "finsler/norm.hpp"
#include "finsler/polygon.hpp"

namespace finsler {

// Pointwise evaluators for the infinity-Laplacian objects
//
//   Q_oo u  = F^2(grad u) (Hess u  gradF(grad u)) . gradF(grad u)
//   D_F u   = div(F(grad u) gradF(grad u))
//   A       = min{ F(grad u) - L u, -Q_oo u }
//   B       = max{ -F(grad u) - L u, -Q_oo u }
//   G_p     = -(p-2) F^{p-4} Q_oo u - F^{p-2} D_F u - L^p |u|^{p-2} u
//
// applied to explicit candidate functions, plus a sign screen of the
// eigenvalue conditions over a domain.

// Candidate functions with closed-form first and second derivatives off
// their singular points. All radial kinds are profiles of rho = F°(x - c):
//
//   cone                u = b - a rho
//   cone pair           u = F°(x - x_neg) - F°(x - x_pos)
//   quadratic barrier   u = (1+eps) rho - gamma rho^2
//   sqrt barrier        u = top - (top - bot) sqrt(rho / r)
//
// The tabulated kind reconstructs u, grad u, Hess u from nodal values by a
// moving-least-squares quadratic fit over the 2-ring of the nearest node.
struct SmoothCandidate {
  enum class Kind { Cone, ConePair, QuadraticBarrier, SqrtBarrier, Tabulated };

  Kind kind = Kind::Cone;
  Vec2 center;   // cone vertex / barrier center / positive pole of a pair
  Vec2 center2;  // negative pole of a pair
  double slope = 1.0;
  double offset = 0.0;
  double eps = 0.0;
  double gamma = 0.0;
  double radius = 1.0;
  double u_top = 0.0;
  double u_bot = 0.0;
  const ScalarField* field = nullptr;

  static SmoothCandidate cone(Vec2 vertex, double slope, double offset);
  static SmoothCandidate cone_pair(Vec2 pos_pole, Vec2 neg_pole);
  static SmoothCandidate quadratic_barrier(Vec2 center, double eps, double gamma);
  static SmoothCandidate sqrt_barrier(Vec2 center, double r, double top, double bot);
  static SmoothCandidate tabulated(const ScalarField& u);
};

// Value and exact (or reconstructed) derivatives at one point.
struct CandidateJet {
  double u = 0.0;
  Vec2 grad;
  Mat2 hess;
};

// Throws std::domain_error at a singular point of the candidate.
CandidateJet candidate_jet(const Norm& f, const SmoothCandidate& c, Vec2 x);

// Jet-level evaluators; the candidate overloads delegate here.
double q_infinity(const Norm& f, const CandidateJet& jet);
double finsler_laplacian(const Norm& f, const CandidateJet& jet);
double operator_A(const Norm& f, const CandidateJet& jet, double lambda);
double operator_B(const Norm& f, const CandidateJet& jet, double lambda);
double g_p_residual(const Norm& f, const CandidateJet& jet, double p, double lambda_p);

// Convention: grad u = 0 gives Q_oo u = 0 (and D_F u = 0).
double q_infinity(const Norm& f, const SmoothCandidate& c, Vec2 x);
double finsler_laplacian(const Norm& f, const SmoothCandidate& c, Vec2 x);
double operator_A(const Norm& f, const SmoothCandidate& c, Vec2 x, double lambda);
double operator_B(const Norm& f, const SmoothCandidate& c, Vec2 x, double lambda);
double g_p_residual(const Norm& f, const SmoothCandidate& c, Vec2 x, double p, double lambda_p);

// gradF(grad u) . nu at a boundary point with unit outer normal nu.
// Throws std::domain_error when grad u = 0.
double neumann_flux(const Norm& f, const SmoothCandidate& c, Vec2 x, Vec2 nu);

// One fully evaluated point. q_inf_alt recomputes Q_oo through the
// eigendecomposition of the symmetrized Hessian as a cross-check.
struct OperatorSample {
  Vec2 point;
  double u = 0.0;
  Vec2 grad;
  Mat2 hess;
  double f_grad = 0.0;
  double q_inf = 0.0;
  double q_inf_alt = 0.0;
  double delta_f = 0.0;
  double a_value = 0.0;
  double b_value = 0.0;
  double flux = 0.0;     // valid when on_boundary
  bool on_boundary = false;
};

OperatorSample operator_sample(const Norm& f, const SmoothCandidate& c, Vec2 x,
                               double lambda);

// One scan sample that fails its sign condition. `value` is the signed
// branch quantity; the violation magnitude is max(0, -value).
struct ScanViolation {
  Vec2 x;
  std::string branch;  // "A", "B", "Qinf" or "flux"
  double value = 0.0;
};

struct ScanReport {
  std::vector<ScanViolation> violations;
  double max_violation = 0.0;       // interior branches A, B, Qinf
  double max_flux_violation = 0.0;  // boundary probes
  int samples = 0;
  double tau0 = 0.0;  // zero-set tolerance used for branch routing
  std::string to_json() const;
};

// Sign screen of the eigenvalue conditions for the pair (candidate, lambda).
// A classical eigenfunction has A = 0 where u > 0, B = 0 where u < 0 and
// Q_oo u = 0 on the nodal set; the scan checks the one-sided halves that
// remain meaningful for merely Lipschitz candidates: A >= 0 on {u > 0},
// B <= 0 on {u < 0}, Q_oo u = 0 on the nodal band. A pair of opposite cones
// passes this screen classically while a nonzero constant does not. On the
// boundary the screen reduces to the sign of the outward flux: <= 0 where
// u > 0 and >= 0 where u < 0. Points are routed to the nodal branch when
// |u| <= 1e-3 max|u|. Singular points of the candidate are skipped and
// violations below `tol` are not recorded.
ScanReport residual_scan(const Norm& f, const ConvexPolygon& omega,
                         const SmoothCandidate& c, double lambda,
                         double spacing = 0.05, double tol = 1e-7);

}  // namespace finsler
