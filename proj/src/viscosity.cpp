#include "finsler/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "json.hpp"

namespace finsler {

namespace {

constexpr double kGradTiny = 1e-13;

}  // namespace

SmoothCandidate SmoothCandidate::cone(Vec2 vertex, double slope, double offset) {
  SmoothCandidate c;
  c.kind = Kind::Cone;
  c.center = vertex;
  c.slope = slope;
  c.offset = offset;
  return c;
}

SmoothCandidate SmoothCandidate::cone_pair(Vec2 pos_pole, Vec2 neg_pole) {
  SmoothCandidate c;
  c.kind = Kind::ConePair;
  c.center = pos_pole;
  c.center2 = neg_pole;
  return c;
}

SmoothCandidate SmoothCandidate::quadratic_barrier(Vec2 center, double eps, double gamma) {
  SmoothCandidate c;
  c.kind = Kind::QuadraticBarrier;
  c.center = center;
  c.eps = eps;
  c.gamma = gamma;
  return c;
}

SmoothCandidate SmoothCandidate::sqrt_barrier(Vec2 center, double r, double top, double bot) {
  if (!(r > 0.0)) throw std::invalid_argument("sqrt_barrier: need r > 0");
  SmoothCandidate c;
  c.kind = Kind::SqrtBarrier;
  c.center = center;
  c.radius = r;
  c.u_top = top;
  c.u_bot = bot;
  return c;
}

SmoothCandidate SmoothCandidate::tabulated(const ScalarField& u) {
  if (!u.mesh) throw std::invalid_argument("tabulated: field has no mesh");
  SmoothCandidate c;
  c.kind = Kind::Tabulated;
  c.field = &u;
  return c;
}

namespace {

// Jet of rho = F°(x - c) plus the profile chain rule
// u = psi(rho), grad u = psi' grad rho, Hess u = psi'' grad rho grad rho^T + psi' Hess rho.
struct RadialJet {
  double rho;
  Vec2 grho;
  Mat2 hrho;
};

RadialJet radial_jet(const Norm& polar, Vec2 x, Vec2 c) {
  const Vec2 d = x - c;
  const double rho = polar.value(d);
  if (rho <= 1e-12) throw std::domain_error("candidate_jet: singular point of the candidate");
  return {rho, polar.gradient(d), polar.hessian(d)};
}

CandidateJet profile_jet(const RadialJet& r, double psi, double dpsi, double ddpsi) {
  CandidateJet j;
  j.u = psi;
  j.grad = r.grho * dpsi;
  j.hess = Mat2::outer(r.grho, r.grho) * ddpsi + r.hrho * dpsi;
  return j;
}

// Node adjacency (1-ring), built lazily per mesh. The address alone is not a
// safe key (meshes get destroyed and reallocated), so the entry also records
// the mesh shape.
struct RingEntry {
  size_t nnodes = 0, ntris = 0;
  Vec2 first_node;
  std::vector<std::vector<int>> rings;
};

const std::vector<std::vector<int>>& one_ring(const TriMesh& mesh) {
  thread_local std::map<const TriMesh*, RingEntry> cache;
  auto it = cache.find(&mesh);
  if (it != cache.end() && it->second.nnodes == mesh.nodes.size() &&
      it->second.ntris == mesh.triangles.size() &&
      it->second.first_node.x == mesh.nodes[0].x &&
      it->second.first_node.y == mesh.nodes[0].y)
    return it->second.rings;
  std::vector<std::set<int>> adj(mesh.nodes.size());
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      adj[t[e]].insert(t[(e + 1) % 3]);
      adj[t[e]].insert(t[(e + 2) % 3]);
    }
  std::vector<std::vector<int>> rings(adj.size());
  for (size_t i = 0; i < adj.size(); ++i) rings[i].assign(adj[i].begin(), adj[i].end());
  if (cache.size() > 8) cache.clear();
  RingEntry& e = cache[&mesh];
  e = {mesh.nodes.size(), mesh.triangles.size(), mesh.nodes[0], std::move(rings)};
  return e.rings;
}

// Moving-least-squares quadratic fit over the 2-ring of the nearest node,
// Gaussian weights at the mesh scale. Exact for quadratic nodal data.
CandidateJet tabulated_jet(const ScalarField& u, Vec2 x) {
  const TriMesh& mesh = *u.mesh;
  const auto& ring = one_ring(mesh);

  int nearest = 0;
  double best = (mesh.nodes[0] - x).squared_norm();
  for (size_t i = 1; i < mesh.nodes.size(); ++i) {
    const double d2 = (mesh.nodes[i] - x).squared_norm();
    if (d2 < best) { best = d2; nearest = (int)i; }
  }

  std::set<int> stencil;
  stencil.insert(nearest);
  for (int j : ring[nearest]) stencil.insert(j);
  for (int j : ring[nearest])
    for (int k : ring[j]) stencil.insert(k);

  const double h = mesh.target_h > 0 ? mesh.target_h : std::sqrt(best) + 1e-12;
  Eigen::MatrixXd a(stencil.size(), 6);
  Eigen::VectorXd b(stencil.size());
  int row = 0;
  for (int j : stencil) {
    const Vec2 d = mesh.nodes[j] - x;
    const double w = std::exp(-d.squared_norm() / (2.0 * h * h));
    a(row, 0) = w;
    a(row, 1) = w * d.x;
    a(row, 2) = w * d.y;
    a(row, 3) = w * d.x * d.x;
    a(row, 4) = w * d.x * d.y;
    a(row, 5) = w * d.y * d.y;
    b(row) = w * u.values[j];
    ++row;
  }
  const Eigen::VectorXd c = (a.transpose() * a).ldlt().solve(a.transpose() * b);

  CandidateJet j;
  j.u = c(0);
  j.grad = {c(1), c(2)};
  j.hess = {2.0 * c(3), c(4), c(4), 2.0 * c(5)};
  return j;
}

}  // namespace

CandidateJet candidate_jet(const Norm& f, const SmoothCandidate& c, Vec2 x) {
  switch (c.kind) {
    case SmoothCandidate::Kind::Cone: {
      const RadialJet r = radial_jet(f.polar(), x, c.center);
      return profile_jet(r, c.offset - c.slope * r.rho, -c.slope, 0.0);
    }
    case SmoothCandidate::Kind::ConePair: {
      const Norm polar = f.polar();
      const RadialJet rp = radial_jet(polar, x, c.center);
      const RadialJet rn = radial_jet(polar, x, c.center2);
      CandidateJet j;
      j.u = rn.rho - rp.rho;
      j.grad = rn.grho - rp.grho;
      j.hess = rn.hrho - rp.hrho;
      return j;
    }
    case SmoothCandidate::Kind::QuadraticBarrier: {
      const RadialJet r = radial_jet(f.polar(), x, c.center);
      const double rho = r.rho;
      return profile_jet(r, (1.0 + c.eps) * rho - c.gamma * rho * rho,
                         (1.0 + c.eps) - 2.0 * c.gamma * rho, -2.0 * c.gamma);
    }
    case SmoothCandidate::Kind::SqrtBarrier: {
      const RadialJet r = radial_jet(f.polar(), x, c.center);
      const double drop = c.u_top - c.u_bot;
      const double sr = std::sqrt(c.radius);
      const double q = std::sqrt(r.rho);
      return profile_jet(r, c.u_top - drop * q / sr, -drop / (2.0 * sr * q),
                         drop / (4.0 * sr * q * q * q));
    }
    case SmoothCandidate::Kind::Tabulated:
      return tabulated_jet(*c.field, x);
  }
  throw std::logic_error("candidate_jet: unreachable");
}

double q_infinity(const Norm& f, const CandidateJet& jet) {
  if (jet.grad.norm() <= kGradTiny) return 0.0;
  const double fg = f.value(jet.grad);
  const Vec2 w = f.gradient(jet.grad);
  return fg * fg * (jet.hess * w).dot(w);
}

double finsler_laplacian(const Norm& f, const CandidateJet& jet) {
  if (jet.grad.norm() <= kGradTiny) return 0.0;
  const double fg = f.value(jet.grad);
  const Vec2 w = f.gradient(jet.grad);
  const Mat2 hf = f.hessian(jet.grad);
  // div(F gradF) = (Hess u gradF).gradF + F tr(Hess F Hess u)
  return (jet.hess * w).dot(w) + fg * (hf * jet.hess.transpose()).trace();
}

double operator_A(const Norm& f, const CandidateJet& jet, double lambda) {
  const double fg = jet.grad.norm() <= kGradTiny ? 0.0 : f.value(jet.grad);
  return std::min(fg - lambda * jet.u, -q_infinity(f, jet));
}

double operator_B(const Norm& f, const CandidateJet& jet, double lambda) {
  const double fg = jet.grad.norm() <= kGradTiny ? 0.0 : f.value(jet.grad);
  return std::max(-fg - lambda * jet.u, -q_infinity(f, jet));
}

double g_p_residual(const Norm& f, const CandidateJet& jet, double p, double lambda_p) {
  const double lam_term =
      std::pow(lambda_p, p) * std::pow(std::abs(jet.u), p - 2.0) * jet.u;
  if (jet.grad.norm() <= kGradTiny) return -lam_term;
  const double fg = f.value(jet.grad);
  return -(p - 2.0) * std::pow(fg, p - 4.0) * q_infinity(f, jet) -
         std::pow(fg, p - 2.0) * finsler_laplacian(f, jet) - lam_term;
}

double q_infinity(const Norm& f, const SmoothCandidate& c, Vec2 x) {
  return q_infinity(f, candidate_jet(f, c, x));
}

double finsler_laplacian(const Norm& f, const SmoothCandidate& c, Vec2 x) {
  return finsler_laplacian(f, candidate_jet(f, c, x));
}

double operator_A(const Norm& f, const SmoothCandidate& c, Vec2 x, double lambda) {
  return operator_A(f, candidate_jet(f, c, x), lambda);
}

double operator_B(const Norm& f, const SmoothCandidate& c, Vec2 x, double lambda) {
  return operator_B(f, candidate_jet(f, c, x), lambda);
}

double g_p_residual(const Norm& f, const SmoothCandidate& c, Vec2 x, double p,
                    double lambda_p) {
  return g_p_residual(f, candidate_jet(f, c, x), p, lambda_p);
}

double neumann_flux(const Norm& f, const SmoothCandidate& c, Vec2 x, Vec2 nu) {
  const CandidateJet jet = candidate_jet(f, c, x);
  if (jet.grad.norm() <= kGradTiny)
    throw std::domain_error("neumann_flux: vanishing gradient");
  return f.gradient(jet.grad).dot(nu);
}

OperatorSample operator_sample(const Norm& f, const SmoothCandidate& c, Vec2 x,
                               double lambda) {
  OperatorSample s;
  s.point = x;
  const CandidateJet jet = candidate_jet(f, c, x);
  s.u = jet.u;
  s.grad = jet.grad;
  s.hess = jet.hess;
  s.f_grad = jet.grad.norm() <= kGradTiny ? 0.0 : f.value(jet.grad);
  s.q_inf = q_infinity(f, jet);
  s.delta_f = finsler_laplacian(f, jet);
  s.a_value = operator_A(f, jet, lambda);
  s.b_value = operator_B(f, jet, lambda);

  // Cross-check: Q_oo through the spectral decomposition of sym(Hess u).
  if (jet.grad.norm() > kGradTiny) {
    const Vec2 w = f.gradient(jet.grad);
    const double fg = s.f_grad;
    const Mat2 h = (jet.hess + jet.hess.transpose()) * 0.5;
    const double mean = 0.5 * (h.a + h.d);
    const double disc = std::sqrt(0.25 * (h.a - h.d) * (h.a - h.d) + h.b * h.b);
    const double l1 = mean + disc, l2 = mean - disc;
    Vec2 v1 = std::abs(h.b) > 1e-300 ? Vec2{h.b, l1 - h.a}
                                     : (h.a >= h.d ? Vec2{1, 0} : Vec2{0, 1});
    v1 = v1 / v1.norm();
    const Vec2 v2{-v1.y, v1.x};
    s.q_inf_alt = fg * fg * (l1 * w.dot(v1) * w.dot(v1) + l2 * w.dot(v2) * w.dot(v2));
  }
  return s;
}

std::string ScanReport::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& v : violations)
    arr.push_back({{"x", {v.x.x, v.x.y}}, {"branch", v.branch}, {"value", v.value}});
  j["violations"] = arr;
  j["max_violation"] = max_violation;
  j["max_flux_violation"] = max_flux_violation;
  j["samples"] = samples;
  j["tau0"] = tau0;
  return j.dump();
}

ScanReport residual_scan(const Norm& f, const ConvexPolygon& omega,
                         const SmoothCandidate& c, double lambda, double spacing,
                         double tol) {
  if (!(spacing > 0.0)) throw std::invalid_argument("residual_scan: need spacing > 0");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vec2 v : omega.vertices()) {
    xmin = std::min(xmin, v.x); xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y); ymax = std::max(ymax, v.y);
  }

  struct Probe {
    Vec2 x;
    Vec2 nu;          // outer normal, boundary probes only
    bool boundary;
  };
  std::vector<Probe> probes;
  for (double px = xmin + 0.5 * spacing; px < xmax; px += spacing)
    for (double py = ymin + 0.5 * spacing; py < ymax; py += spacing)
      if (omega.contains({px, py}, -1e-9 * spacing)) probes.push_back({{px, py}, {}, false});
  const auto& vs = omega.vertices();
  for (size_t i = 0; i < vs.size(); ++i) {
    const Vec2 a = vs[i], b = vs[(i + 1) % vs.size()];
    const Vec2 t = b - a;
    const double len = t.norm();
    const Vec2 nu = Vec2{t.y, -t.x} / len;
    const int segs = std::max(1, (int)std::ceil(len / spacing));
    for (int s = 0; s < segs; ++s)
      probes.push_back({a + t * ((s + 0.5) / segs), nu, true});
  }

  // First pass fixes the zero-branch tolerance from the sampled sup norm.
  std::vector<CandidateJet> jets(probes.size());
  std::vector<char> ok(probes.size(), 0);
  double sup = 0.0;
  for (size_t i = 0; i < probes.size(); ++i) {
    try {
      jets[i] = candidate_jet(f, c, probes[i].x);
      ok[i] = 1;
      sup = std::max(sup, std::abs(jets[i].u));
    } catch (const std::domain_error&) {
      // singular point of the candidate: skipped, not a violation
    }
  }

  ScanReport report;
  report.tau0 = 1e-3 * sup;
  for (size_t i = 0; i < probes.size(); ++i) {
    if (!ok[i]) continue;
    ++report.samples;
    const CandidateJet& jet = jets[i];

    std::string branch;
    double value;
    double violation;
    if (probes[i].boundary) {
      // The one-sided boundary conditions reduce to a sign of the outward
      // flux: <= 0 where u > 0, >= 0 where u < 0, free on the nodal band.
      branch = "flux";
      if (jet.grad.norm() <= kGradTiny) continue;  // trivially satisfied
      value = f.gradient(jet.grad).dot(probes[i].nu);
      if (jet.u > report.tau0)
        violation = std::max(0.0, value);
      else if (jet.u < -report.tau0)
        violation = std::max(0.0, -value);
      else
        violation = 0.0;
      report.max_flux_violation = std::max(report.max_flux_violation, violation);
    } else {
      if (jet.u > report.tau0) {
        branch = "A";
        value = operator_A(f, jet, lambda);
        violation = std::max(0.0, -value);
      } else if (jet.u < -report.tau0) {
        branch = "B";
        value = operator_B(f, jet, lambda);
        violation = std::max(0.0, value);
      } else {
        branch = "Qinf";
        value = -q_infinity(f, jet);
        violation = std::abs(value);
      }
      report.max_violation = std::max(report.max_violation, violation);
    }
    if (violation > tol) report.violations.push_back({probes[i].x, branch, value});
  }
  return report;
}

}  // namespace finsler
