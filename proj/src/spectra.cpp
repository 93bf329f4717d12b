#include "finsler/spectra.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>

namespace finsler {

double pi_p(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("pi_p: need p > 1");
  return 2.0 * M_PI * std::pow(p - 1.0, 1.0 / p) / (p * std::sin(M_PI / p));
}

namespace {

// Same degree-5 rule as the quadrature in the mesh module.
struct QP {
  double l[3], w;
};
constexpr QP kQ7[7] = {
    {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
    {{0.059715871789770, 0.470142064105115, 0.470142064105115}, 0.132394152788506},
    {{0.470142064105115, 0.059715871789770, 0.470142064105115}, 0.132394152788506},
    {{0.470142064105115, 0.470142064105115, 0.059715871789770}, 0.132394152788506},
    {{0.797426985353087, 0.101286507323456, 0.101286507323456}, 0.125939180544827},
    {{0.101286507323456, 0.797426985353087, 0.101286507323456}, 0.125939180544827},
    {{0.101286507323456, 0.101286507323456, 0.797426985353087}, 0.125939180544827},
};

struct Quotient {
  double log_e = 0.0, log_m = 0.0;
  double log_r() const { return log_e - log_m; }
};

// Rayleigh quotient int F^p(grad u) / int |u|^p in log form: every cell term
// is scaled by the largest one before summation, so p up to 128 cannot
// overflow. The gradient of log R with respect to nodal values is optional.
Quotient rayleigh(const Norm& f, const TriMesh& mesh, const std::vector<double>& u,
                  double p, std::vector<double>* grad_log_r) {
  const size_t nc = mesh.triangles.size();
  std::vector<double> fv(nc), uq;
  double fmax = 0.0, umax = 0.0;
  for (size_t t = 0; t < nc; ++t) {
    Vec2 g{0, 0};
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) g += mesh.shape_grad[t][i] * u[tri[i]];
    fv[t] = f.value(g);
    fmax = std::max(fmax, fv[t]);
  }
  for (double v : u) umax = std::max(umax, std::abs(v));
  if (fmax == 0.0 || umax == 0.0)
    throw SolverFailure("rayleigh: degenerate field (constant or zero)");

  double se = 0.0, sm = 0.0;
  if (grad_log_r) grad_log_r->assign(u.size(), 0.0);
  for (size_t t = 0; t < nc; ++t) {
    const auto& tri = mesh.triangles[t];
    const double te = mesh.tri_area[t] * std::pow(fv[t] / fmax, p);
    se += te;
    double tm = 0.0;
    for (const QP& q : kQ7) {
      const double uv = q.l[0] * u[tri[0]] + q.l[1] * u[tri[1]] + q.l[2] * u[tri[2]];
      tm += q.w * std::pow(std::abs(uv) / umax, p);
    }
    sm += tm * mesh.tri_area[t];
  }

  Quotient out;
  out.log_e = p * std::log(fmax) + std::log(se);
  out.log_m = p * std::log(umax) + std::log(sm);
  if (!grad_log_r) return out;

  std::vector<double>& g = *grad_log_r;
  for (size_t t = 0; t < nc; ++t) {
    const auto& tri = mesh.triangles[t];
    if (fv[t] > 0.0) {
      Vec2 gc{0, 0};
      for (int i = 0; i < 3; ++i) gc += mesh.shape_grad[t][i] * u[tri[i]];
      const Vec2 nf = f.gradient(gc);
      const double te = mesh.tri_area[t] * std::pow(fv[t] / fmax, p);
      const double ce = p * te / (fv[t] * se);
      for (int i = 0; i < 3; ++i) g[tri[i]] += ce * nf.dot(mesh.shape_grad[t][i]);
    }
    for (const QP& q : kQ7) {
      const double uv = q.l[0] * u[tri[0]] + q.l[1] * u[tri[1]] + q.l[2] * u[tri[2]];
      if (uv == 0.0) continue;
      const double tm = mesh.tri_area[t] * q.w * std::pow(std::abs(uv) / umax, p);
      const double cm = p * tm / (uv * sm);
      for (int i = 0; i < 3; ++i) g[tri[i]] -= cm * q.l[i];
    }
  }
  return out;
}

// Unique root of the strictly decreasing map c -> int |u-c|^{p-2}(u-c).
// Solved as Newton on g(c) = ln int (u-c)_+^{p-1} - ln int (c-u)_+^{p-1},
// which stays well scaled for any p: the raw defect spans hundreds of
// orders of magnitude at large exponents and defeats both Newton (steps of
// size range/(p-1)) and any absolute tolerance.
double recenter_shift(const TriMesh& mesh, const std::vector<double>& u, double p,
                      double c0) {
  double lo = *std::min_element(u.begin(), u.end());
  double hi = *std::max_element(u.begin(), u.end());
  const double span = std::max(hi - lo, 1e-300);
  double c = std::clamp(c0, lo + 1e-3 * span, hi - 1e-3 * span);

  const double ulo = lo, uhi = hi;

  // One sweep: scaled tail integrals P, N of (u-c)_+^{p-1}, (c-u)_+^{p-1}
  // and the companion p-2 moments for the derivative of the log ratio.
  const auto tails = [&](double cc) {
    const double dmax = std::max({uhi - cc, cc - ulo, 1e-300});
    double pos = 0.0, neg = 0.0, pos2 = 0.0, neg2 = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      for (const QP& q : kQ7) {
        const double uv =
            q.l[0] * u[tri[0]] + q.l[1] * u[tri[1]] + q.l[2] * u[tri[2]] - cc;
        const double a = std::abs(uv) / dmax;
        if (a == 0.0) continue;
        const double w1 = mesh.tri_area[t] * q.w * std::pow(a, p - 1.0);
        const double w2 = mesh.tri_area[t] * q.w * std::pow(a, p - 2.0);
        if (uv > 0) {
          pos += w1;
          pos2 += w2;
        } else {
          neg += w1;
          neg2 += w2;
        }
      }
    }
    return std::array<double, 4>{pos, neg, pos2, neg2};
  };

  for (int it = 0; it < 100; ++it) {
    const auto [pos, neg, pos2, neg2] = tails(c);
    if (pos == 0.0 || neg == 0.0) {
      // All mass on one side: the root lies beyond c, bisect toward it.
      (pos > 0.0 ? lo : hi) = c;
      c = 0.5 * (lo + hi);
      continue;
    }
    const double g = std::log(pos) - std::log(neg);
    (g > 0 ? lo : hi) = c;
    if (hi - lo < 1e-14 * span) break;
    // d/dc ln P = -(p-1) P2/(dmax P); same for N with opposite sign.
    const double dmax = std::max({uhi - c, c - ulo, 1e-300});
    const double gp = -(p - 1.0) / dmax * (pos2 / pos + neg2 / neg);
    double cn = c - g / gp;
    if (!(cn > lo && cn < hi)) cn = 0.5 * (lo + hi);
    if (std::abs(cn - c) < 1e-14 * span) {
      c = cn;
      break;
    }
    c = cn;
  }
  return c;
}

struct Projector {
  const Norm* f;
  const TriMesh* mesh;
  double p;
  bool neumann;
  double last_c = 0.0;

  void operator()(std::vector<double>& u) {
    if (neumann) {
      if (p == 2.0) {
        double s = 0.0;
        for (size_t t = 0; t < mesh->triangles.size(); ++t) {
          const auto& tri = mesh->triangles[t];
          s += mesh->tri_area[t] * (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0;
        }
        last_c = s / mesh->total_area();
      } else {
        last_c = recenter_shift(*mesh, u, p, last_c);
      }
      if (getenv("FINSLER_SOLVER_DEBUG2")) {
        double lo = *std::min_element(u.begin(), u.end());
        double hi = *std::max_element(u.begin(), u.end());
        fprintf(stderr, "    proj p=%g c=%.9f range [%.6f, %.6f]\n", p, last_c, lo, hi);
      }
      for (double& v : u) v -= last_c;
      last_c = 0.0;
    } else {
      for (int i : mesh->boundary_nodes) u[i] = 0.0;
    }
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    if (umax == 0.0) throw SolverFailure("projection: field collapsed to zero");
    double sm = 0.0;
    for (size_t t = 0; t < mesh->triangles.size(); ++t) {
      const auto& tri = mesh->triangles[t];
      for (const QP& q : kQ7) {
        const double uv = q.l[0] * u[tri[0]] + q.l[1] * u[tri[1]] + q.l[2] * u[tri[2]];
        sm += mesh->tri_area[t] * q.w * std::pow(std::abs(uv) / umax, p);
      }
    }
    // Mean norm: (1/|Omega|) int |u|^p = 1.
    const double scale =
        std::exp(-(std::log(umax) + (std::log(sm) - std::log(mesh->total_area())) / p));
    for (double& v : u) v *= scale;
  }
};

struct DescentOut {
  double log_r = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

Eigen::SparseMatrix<double> assemble_stiffness(const Norm& f, const TriMesh& mesh);
Eigen::SparseMatrix<double> assemble_mass(const TriMesh& mesh);

// Projected gradient descent with Barzilai-Borwein steps and a non-monotone
// backtracking line search. The coefficient gradient is preconditioned by the
// linear stiffness matrix (a Sobolev gradient), which keeps the iteration
// count essentially mesh-independent; a lumped-mass direction needs O(1/h^2)
// steps on fine meshes.
DescentOut descend(const Norm& f, const TriMesh& mesh, std::vector<double>& u, double p,
                   bool neumann, const EigenOptions& opts, std::vector<double>& trace) {
  Projector proj{&f, &mesh, p, neumann};
  proj(u);

  // Metric for the direction: Hessian of the p-energy at the warm start.
  // hessian_of_power is (p-2)-homogeneous, so cell gradients are scaled by
  // the largest one first and powers of F stay in [0, 1].
  Eigen::SparseMatrix<double> pre((int)u.size(), (int)u.size());
  {
    const size_t nc = mesh.triangles.size();
    std::vector<Mat2> hc(nc, Mat2{0, 0, 0, 0});
    double fmax = 0.0, hmax = 0.0;
    std::vector<Vec2> gc(nc);
    for (size_t t = 0; t < nc; ++t) {
      Vec2 g{0, 0};
      const auto& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i) g += mesh.shape_grad[t][i] * u[tri[i]];
      gc[t] = g;
      fmax = std::max(fmax, f.value(g));
    }
    for (size_t t = 0; t < nc; ++t) {
      const Vec2 gs = fmax > 0.0 ? gc[t] / fmax : Vec2{0, 0};
      if (f.value(gs) > 1e-8) hc[t] = f.hessian_of_power(p, gs);
      hmax = std::max(hmax, hc[t].a + hc[t].d);
    }
    if (hmax == 0.0) hmax = 1.0;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nc * 9);
    for (size_t t = 0; t < nc; ++t) {
      // Floor flat cells so the metric stays positive definite.
      Mat2 a = hc[t];
      a.a += 0.1 * hmax;
      a.d += 0.1 * hmax;
      const auto& tri = mesh.triangles[t];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const Vec2 gi = mesh.shape_grad[t][i], gj = mesh.shape_grad[t][j];
          trip.emplace_back(tri[i], tri[j],
                            mesh.tri_area[t] * (gi.x * (a.a * gj.x + a.b * gj.y) +
                                                gi.y * (a.c * gj.x + a.d * gj.y)));
        }
    }
    pre.setFromTriplets(trip.begin(), trip.end());
    const Eigen::SparseMatrix<double> m = assemble_mass(mesh);
    if (neumann) {
      // Small mass shift keeps the operator invertible on constants.
      const double sigma =
          1e-3 * pre.diagonal().sum() / std::max(m.diagonal().sum(), 1e-300);
      pre += sigma * m;
    } else {
      // Pin boundary rows/columns so the direction honors the constraint.
      for (int c = 0; c < pre.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator itr(pre, c); itr; ++itr)
          if (mesh.is_boundary[itr.row()] || mesh.is_boundary[itr.col()])
            itr.valueRef() = itr.row() == itr.col() ? 1.0 : 0.0;
      pre.prune(0.0);
    }
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(pre);
  if (chol.info() != Eigen::Success)
    throw SolverFailure("descent: preconditioner factorization failed");

  std::vector<double> grad, dir, prev_u, prev_dir, trial;
  Quotient q = rayleigh(f, mesh, u, p, &grad);
  double log_r = q.log_r();
  if (getenv("FINSLER_SOLVER_DEBUG"))
    fprintf(stderr, "  descend p=%g start log_r=%.6f\n", p, log_r);
  trace.push_back(log_r);

  Eigen::VectorXd rhs((int)u.size());
  const auto make_dir = [&]() {
    for (size_t i = 0; i < grad.size(); ++i) rhs[(int)i] = grad[i];
    if (!neumann)
      for (int i : mesh.boundary_nodes) rhs[i] = 0.0;
    const Eigen::VectorXd sol = chol.solve(rhs);
    dir.resize(grad.size());
    for (size_t i = 0; i < grad.size(); ++i) dir[i] = sol[(int)i];
    if (!neumann)
      for (int i : mesh.boundary_nodes) dir[i] = 0.0;
  };
  make_dir();

  std::deque<double> window;       // stopping: decrease over 25 iterations
  std::deque<double> recent;       // non-monotone reference values
  window.push_back(log_r);
  recent.push_back(log_r);
  DescentOut out;

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double g2 = 0.0, dmax = 0.0;
    for (size_t i = 0; i < dir.size(); ++i) {
      g2 += grad[i] * dir[i];
      dmax = std::max(dmax, std::abs(dir[i]));
    }
    if (dmax == 0.0) break;

    double step;
    if (!prev_u.empty()) {
      double sy = 0.0, ss = 0.0;
      for (size_t i = 0; i < u.size(); ++i) {
        const double s = u[i] - prev_u[i], y = dir[i] - prev_dir[i];
        ss += s * s;
        sy += s * y;
      }
      step = sy > 0.0 ? ss / sy : 0.1 / dmax;
    } else {
      step = 0.1 / dmax;
    }
    step = std::clamp(step, 1e-14 / dmax, 1e8 / dmax);

    const double ref = *std::max_element(recent.begin(), recent.end());
    prev_u = u;
    prev_dir = dir;
    bool accepted = false;
    for (int bt = 0; bt < 45; ++bt) {
      trial = prev_u;
      for (size_t i = 0; i < trial.size(); ++i) trial[i] -= step * prev_dir[i];
      try {
        proj(trial);
        const Quotient qt = rayleigh(f, mesh, trial, p, nullptr);
        if (qt.log_r() < ref - 1e-4 * step * g2 || (bt > 25 && qt.log_r() < log_r)) {
          u = trial;
          log_r = qt.log_r();
          accepted = true;
          break;
        }
      } catch (const SolverFailure&) {
        // Degenerate trial (stepped onto a constant); shrink.
      }
      step *= 0.5;
    }
    trace.push_back(log_r);
    window.push_back(log_r);
    recent.push_back(log_r);
    if ((int)window.size() > 26) window.pop_front();
    if ((int)recent.size() > 10) recent.pop_front();
    if (!accepted) {
      out.residual = 0.0;
      ++it;
      break;
    }
    q = rayleigh(f, mesh, u, p, &grad);
    make_dir();
    if ((int)window.size() == 26 && window.front() - log_r < opts.tol) {
      out.residual = window.front() - log_r;
      ++it;
      break;
    }
  }
  if (it >= opts.max_iter)
    throw SolverFailure("descent: no convergence after max_iter", trace);
  if (getenv("FINSLER_SOLVER_DEBUG"))
    fprintf(stderr, "  stage p=%g iters=%d log_r=%.6f\n", p, it, log_r);
  out.log_r = log_r;
  out.iterations = it;
  return out;
}

Eigen::SparseMatrix<double> assemble_stiffness(const Norm& f, const TriMesh& mesh) {
  // Quadratic metric frozen at p = 2: average Hessian of F^2/2 over directions
  // (constant, hence exact, for Euclidean and ellipse gauges).
  Mat2 a{0, 0, 0, 0};
  const int nd = 16;
  for (int k = 0; k < nd; ++k) {
    const double th = M_PI * (k + 0.5) / nd;
    const Mat2 hh = f.hessian_of_power(2.0, Vec2{std::cos(th), std::sin(th)});
    a.a += hh.a / (2 * nd);
    a.b += hh.b / (2 * nd);
    a.c += hh.c / (2 * nd);
    a.d += hh.d / (2 * nd);
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 9);
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Vec2 gi = mesh.shape_grad[t][i], gj = mesh.shape_grad[t][j];
        const double kij =
            mesh.tri_area[t] *
            (gi.x * (a.a * gj.x + a.b * gj.y) + gi.y * (a.c * gj.x + a.d * gj.y));
        trip.emplace_back(tri[i], tri[j], kij);
      }
  }
  Eigen::SparseMatrix<double> k((int)mesh.nodes.size(), (int)mesh.nodes.size());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Eigen::SparseMatrix<double> assemble_mass(const TriMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 9);
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(tri[i], tri[j], mesh.tri_area[t] * (i == j ? 2.0 : 1.0) / 12.0);
  }
  Eigen::SparseMatrix<double> m((int)mesh.nodes.size(), (int)mesh.nodes.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

double linear_membrane_eigenvalue(const Norm& f, const TriMesh& mesh, bool dirichlet,
                                  std::vector<double>* eigvec) {
  const int n = (int)mesh.nodes.size();
  Eigen::SparseMatrix<double> k = assemble_stiffness(f, mesh);
  Eigen::SparseMatrix<double> m = assemble_mass(mesh);

  std::vector<int> keep;
  if (dirichlet) {
    for (int i = 0; i < n; ++i)
      if (!mesh.is_boundary[i]) keep.push_back(i);
  } else {
    for (int i = 0; i < n; ++i) keep.push_back(i);
  }
  const int nk = (int)keep.size();
  std::vector<int> pos(n, -1);
  for (int i = 0; i < nk; ++i) pos[keep[i]] = i;

  const auto restrict_mat = [&](const Eigen::SparseMatrix<double>& s) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < s.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(s, c); itr; ++itr)
        if (pos[itr.row()] >= 0 && pos[itr.col()] >= 0)
          trip.emplace_back(pos[itr.row()], pos[itr.col()], itr.value());
    Eigen::SparseMatrix<double> out(nk, nk);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  };
  Eigen::SparseMatrix<double> kr = restrict_mat(k), mr = restrict_mat(m);

  const double sigma = dirichlet ? 0.0 : 1e-8 * kr.coeffs().abs().maxCoeff();
  Eigen::SparseMatrix<double> shifted = kr + sigma * mr;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw SolverFailure("linear_membrane_eigenvalue: factorization failed");

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(nk);
  const double cmc = ones.dot(mr * ones);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(nk, -1.0, 1.0);
  for (int i = 0; i < nk; ++i) x[i] += 1e-3 * std::sin(7.0 * i);
  double mu = 0.0;
  for (int it = 0; it < 400; ++it) {
    if (!dirichlet) x -= (ones.dot(mr * x) / cmc) * ones;
    Eigen::VectorXd y = solver.solve(mr * x);
    if (!dirichlet) y -= (ones.dot(mr * y) / cmc) * ones;
    y /= std::sqrt(y.dot(mr * y));
    const double mu_new = y.dot(kr * y) / y.dot(mr * y);
    const bool done = it > 10 && std::abs(mu_new - mu) < 1e-12 * (1.0 + mu_new);
    x = y;
    mu = mu_new;
    if (done) break;
  }
  if (eigvec) {
    eigvec->assign(n, 0.0);
    for (int i = 0; i < nk; ++i) (*eigvec)[keep[i]] = x[i];
  }
  return mu;
}

namespace {

EigenResult solve_eigen(const Norm& f, const ConvexPolygon& omega, double p, double h,
                        const EigenOptions& opts, bool neumann) {
  if (!(p >= 2.0 && p <= 128.0))
    throw std::invalid_argument("eigenvalue: need p in [2, 128]");
  // Nearly crystalline gauges (tiny smoothing, huge power-sum exponent)
  // violate the smoothness hypothesis and stall the descent.
  if (f.smoothing() > 0.0 && f.smoothing() < 1e-3)
    throw std::invalid_argument("eigenvalue: gauge too close to crystalline");

  EigenResult res;
  res.p = p;
  res.mesh = std::make_shared<TriMesh>(triangulate(omega, h));
  const TriMesh& mesh = *res.mesh;

  std::vector<double> u;
  linear_membrane_eigenvalue(f, mesh, !neumann, &u);
  if (opts.seed != 0) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> d(-1e-3, 1e-3);
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    for (size_t i = 0; i < u.size(); ++i) u[i] += d(rng) * umax;
    if (!neumann)
      for (int i : mesh.boundary_nodes) u[i] = 0.0;
  }

  // Continuation: double the exponent from 2 up to p, reusing the minimizer.
  std::vector<double> stages{2.0};
  while (stages.back() < p) stages.push_back(std::min(2.0 * stages.back(), p));

  // Anisotropic distance test functions from the diameter endpoints. At large
  // exponents they are near-extremal, so each stage starts from whichever of
  // the continued minimizer and these candidates has the lower quotient; that
  // keeps the descent off the interior plateaus it stalls on at high p.
  std::vector<std::vector<double>> distance_starts;
  if (neumann) {
    const DiameterResult dia = diameter(f, omega);
    const Norm polar = f.polar();
    for (Vec2 x0 : {dia.a, dia.b}) {
      std::vector<double> w(mesh.nodes.size());
      for (size_t i = 0; i < w.size(); ++i) w[i] = polar.value(mesh.nodes[i] - x0);
      distance_starts.push_back(std::move(w));
    }
  }

  DescentOut last;
  for (double pk : stages) {
    // Intermediate stages only feed the warm start; solve them loosely.
    EigenOptions stage = opts;
    if (pk < p) stage.tol = std::max(opts.tol, 1e-7);
    if (neumann && pk >= 8.0) {
      Projector proj{&f, &mesh, pk, true};
      proj(u);
      double best = rayleigh(f, mesh, u, pk, nullptr).log_r();
      for (const std::vector<double>& w0 : distance_starts) {
        std::vector<double> w = w0;
        proj(w);
        const double lw = rayleigh(f, mesh, w, pk, nullptr).log_r();
        if (getenv("FINSLER_SOLVER_DEBUG"))
          fprintf(stderr, "  start pick p=%g best=%.6f cand=%.6f\n", pk, best, lw);
        if (lw < best) {
          best = lw;
          u = std::move(w);
        }
      }
    }
    last = descend(f, mesh, u, pk, neumann, stage, res.trace);
    res.iterations += last.iterations;
  }
  res.residual = last.residual;
  res.lambda = std::exp(last.log_r / p);

  if (neumann) {
    // Certification bracket: Payne-Weinberger below, distance test functions
    // above. A quotient outside the bracket is a solver failure, not a result.
    const DiameterResult dia = diameter(f, omega);
    const double log_lower = p * std::log(pi_p(p) / dia.value);
    const Norm polar = f.polar();
    double log_upper = 1e300;
    for (Vec2 x0 : {dia.a, dia.b}) {
      std::vector<double> w(mesh.nodes.size());
      for (size_t i = 0; i < w.size(); ++i) w[i] = polar.value(mesh.nodes[i] - x0);
      Projector proj{&f, &mesh, p, true};
      proj(w);
      log_upper = std::min(log_upper, rayleigh(f, mesh, w, p, nullptr).log_r());
    }
    const double slack = 1e-3;
    if (last.log_r < log_lower - slack || last.log_r > log_upper + slack)
      throw SolverFailure(
          "neumann_eigenvalue: quotient escaped the certification bracket (log_r " +
              std::to_string(last.log_r) + ", bracket [" + std::to_string(log_lower) +
              ", " + std::to_string(log_upper) + "])",
          res.trace);
  }

  res.field.mesh = res.mesh.get();
  res.field.values = std::move(u);
  if (!neumann) {
    // First Dirichlet eigenfunction has one sign; report it positive.
    double s = 0.0;
    for (double v : res.field.values) s += v;
    if (s < 0.0)
      for (double& v : res.field.values) v = -v;
    for (int i : mesh.boundary_nodes) res.field.values[i] = 0.0;
  }
  {
    ScalarField sf;
    sf.mesh = res.mesh.get();
    sf.values = res.field.values;
    const double num = std::abs(integrate_power(sf, p, true));
    const double den = integrate_power(sf, p - 1.0, false);
    res.constraint_defect = neumann ? num / den : 0.0;
  }
  return res;
}

}  // namespace

EigenResult neumann_eigenvalue(const Norm& f, const ConvexPolygon& omega, double p,
                               double h, const EigenOptions& opts) {
  return solve_eigen(f, omega, p, h, opts, true);
}

EigenResult dirichlet_eigenvalue(const Norm& f, const ConvexPolygon& omega, double p,
                                 double h, const EigenOptions& opts) {
  return solve_eigen(f, omega, p, h, opts, false);
}

std::pair<double, double> limit_eigenvalues(const Norm& f, const ConvexPolygon& omega) {
  return {2.0 / diameter(f, omega).value, 1.0 / inradius(f, omega).value};
}

namespace {

double cone_weight(double l, int n, double s) {
  const double w[] = {2.0, 2.0 * M_PI, 4.0 * M_PI};
  return w[n - 1] * std::pow(std::max(l - std::abs(s), 0.0), n - 1);
}

// 1D quotient int g |f'|^p / int g |f|^p on a uniform grid; trapezoid mass,
// midpoint energy.
double oned_quotient(const std::vector<double>& s, const std::vector<double>& gs,
                     const std::vector<double>& gmid, const std::vector<double>& u,
                     double p, std::vector<double>* grad) {
  const size_t m = u.size();
  const double ds = s[1] - s[0];
  double e = 0.0, mm = 0.0;
  for (size_t i = 0; i + 1 < m; ++i) {
    const double d = (u[i + 1] - u[i]) / ds;
    e += ds * gmid[i] * std::pow(std::abs(d), p);
  }
  for (size_t i = 0; i < m; ++i) {
    const double w = (i == 0 || i + 1 == m) ? 0.5 * ds : ds;
    mm += w * gs[i] * std::pow(std::abs(u[i]), p);
  }
  if (grad) {
    grad->assign(m, 0.0);
    for (size_t i = 0; i + 1 < m; ++i) {
      const double d = (u[i + 1] - u[i]) / ds;
      if (d == 0.0) continue;
      const double t = gmid[i] * p * std::pow(std::abs(d), p - 1.0) * (d > 0 ? 1 : -1);
      (*grad)[i + 1] += t / e;
      (*grad)[i] -= t / e;
    }
    for (size_t i = 0; i < m; ++i) {
      if (u[i] == 0.0) continue;
      const double w = (i == 0 || i + 1 == m) ? 0.5 * ds : ds;
      (*grad)[i] -= w * gs[i] * p * std::pow(std::abs(u[i]), p - 1.0) *
                    (u[i] > 0 ? 1 : -1) / mm;
    }
  }
  return e / mm;
}

void oned_project(const std::vector<double>& s, const std::vector<double>& gs,
                  std::vector<double>& u, double p, double* c_hint = nullptr) {
  const size_t m = u.size();
  const double ds = s[1] - s[0];
  double lo = *std::min_element(u.begin(), u.end());
  double hi = *std::max_element(u.begin(), u.end());
  const double span = std::max(hi - lo, 1e-300);
  const double ulo = lo, uhi = hi;
  // Same log-ratio Newton as the 2D recentering: the raw defect spans too
  // many orders of magnitude in the exponent to be solved directly.
  const auto tails = [&](double cc) {
    const double dmax = std::max({uhi - cc, cc - ulo, 1e-300});
    double pos = 0.0, neg = 0.0, pos2 = 0.0, neg2 = 0.0;
    for (size_t i = 0; i < m; ++i) {
      const double w = (i == 0 || i + 1 == m) ? 0.5 * ds : ds;
      const double x = u[i] - cc;
      const double a = std::abs(x) / dmax;
      if (a == 0.0) continue;
      const double w1 = w * gs[i] * std::pow(a, p - 1.0);
      const double w2 = w * gs[i] * std::pow(a, p - 2.0);
      if (x > 0) {
        pos += w1;
        pos2 += w2;
      } else {
        neg += w1;
        neg2 += w2;
      }
    }
    return std::array<double, 4>{pos, neg, pos2, neg2};
  };
  double c = c_hint ? std::clamp(*c_hint, lo + 1e-3 * span, hi - 1e-3 * span)
                    : 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const auto [pos, neg, pos2, neg2] = tails(c);
    if (pos == 0.0 || neg == 0.0) {
      (pos > 0.0 ? lo : hi) = c;
      c = 0.5 * (lo + hi);
      continue;
    }
    const double g = std::log(pos) - std::log(neg);
    (g > 0 ? lo : hi) = c;
    if (hi - lo < 1e-14 * span) break;
    const double dmax = std::max({uhi - c, c - ulo, 1e-300});
    const double gp = -(p - 1.0) / dmax * (pos2 / pos + neg2 / neg);
    double cn = c - g / gp;
    if (!(cn > lo && cn < hi)) cn = 0.5 * (lo + hi);
    if (std::abs(cn - c) < 1e-14 * span) {
      c = cn;
      break;
    }
    c = cn;
  }
  if (c_hint) *c_hint = c;
  double nrm = 0.0;
  for (size_t i = 0; i < m; ++i) {
    u[i] -= c;
    const double w = (i == 0 || i + 1 == m) ? 0.5 * ds : ds;
    nrm += w * gs[i] * std::pow(std::abs(u[i]), p);
  }
  const double scale = std::pow(nrm, -1.0 / p);
  for (double& v : u) v *= scale;
}

}  // namespace

OneDProfile oned_weighted_eigen(double l, int n, double p, int grid) {
  if (n < 1 || n > 3) throw std::invalid_argument("oned_weighted_eigen: need n in {1,2,3}");
  if (grid < 256) throw std::invalid_argument("oned_weighted_eigen: need grid >= 256");
  if (!(p > 1.0)) throw std::invalid_argument("oned_weighted_eigen: need p > 1");

  OneDProfile out;
  out.l = l;
  out.n = n;
  out.p = p;
  out.grid.resize(grid + 1);
  std::vector<double> gs(grid + 1), gmid(grid);
  const double ds = 2.0 * l / grid;
  for (int i = 0; i <= grid; ++i) {
    out.grid[i] = -l + ds * i;
    gs[i] = cone_weight(l, n, out.grid[i]);
  }
  for (int i = 0; i < grid; ++i) gmid[i] = cone_weight(l, n, -l + ds * (i + 0.5));

  std::vector<double> u(grid + 1);
  for (int i = 0; i <= grid; ++i) u[i] = std::sin(0.5 * M_PI * out.grid[i] / l);
  double c_hint = 0.0;
  oned_project(out.grid, gs, u, p, &c_hint);

  // Weighted-mass preconditioner; the weight vanishes at the ends for n >= 2,
  // so it is floored to stay invertible.
  const double ds2 = 2.0 * l / grid;
  double gsmax = 0.0;
  for (double v : gs) gsmax = std::max(gsmax, v);
  std::vector<double> prec(grid + 1);
  for (int i = 0; i <= grid; ++i) {
    const double w = (i == 0 || i == grid) ? 0.5 * ds2 : ds2;
    prec[i] = 1.0 / (w * std::max(gs[i], 1e-3 * gsmax));
  }

  std::vector<double> g, d, pu, pd, trial;
  double q = oned_quotient(out.grid, gs, gmid, u, p, &g);
  const auto make_dir = [&]() {
    d.resize(g.size());
    for (size_t i = 0; i < g.size(); ++i) d[i] = g[i] * prec[i];
  };
  make_dir();
  std::deque<double> recent{q};
  int stall = 0;
  for (int it = 0; it < 200000; ++it) {
    double dmax = 0.0, gd = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
      dmax = std::max(dmax, std::abs(d[i]));
      gd += g[i] * d[i];
    }
    if (dmax == 0.0) break;
    double step;
    if (!pu.empty()) {
      double ss = 0.0, sy = 0.0;
      for (size_t i = 0; i < u.size(); ++i) {
        const double sv = u[i] - pu[i], yv = d[i] - pd[i];
        ss += sv * sv;
        sy += sv * yv;
      }
      step = sy > 0 ? ss / sy : 0.1 / dmax;
    } else {
      step = 0.1 / dmax;
    }
    const double ref = *std::max_element(recent.begin(), recent.end());
    pu = u;
    pd = d;
    bool ok = false;
    for (int bt = 0; bt < 50; ++bt) {
      trial = pu;
      for (size_t i = 0; i < u.size(); ++i) trial[i] -= step * pd[i];
      oned_project(out.grid, gs, trial, p, &c_hint);
      const double qt = oned_quotient(out.grid, gs, gmid, trial, p, nullptr);
      if (qt < ref - 1e-4 * step * gd || (bt > 30 && qt <= q)) {
        const double drop = (q - qt) / q;
        u = trial;
        q = qt;
        ok = true;
        stall = drop < 1e-12 ? stall + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    if (!ok || stall > 25) break;
    recent.push_back(q);
    if (recent.size() > 10) recent.pop_front();
    q = oned_quotient(out.grid, gs, gmid, u, p, &g);
    make_dir();
  }

  // Report f with f(-l) < 0 < f(l) for definiteness.
  if (u.back() < 0)
    for (double& v : u) v = -v;
  out.f = std::move(u);
  out.eta = q;
  return out;
}

std::vector<SpindleRow> spindle_limit_study(const Norm& f, double d, double p,
                                            const std::vector<int>& ks, double h,
                                            const EigenOptions& opts) {
  const ConvexPolygon w = wulff_polygon(f, Vec2{0, 0}, 0.5 * d, 128);
  const double diam_w = diameter(f, w).value;
  const double lam_w = dirichlet_eigenvalue(f, w, p, h, opts).lambda;

  std::vector<SpindleRow> rows;
  for (int k : ks) {
    const ConvexPolygon om = spindle(f, k, d);
    const double diam_k = diameter(f, om).value;
    // Thin spindles need the mesh to resolve the short axis.
    double halfw = 0.0;
    for (const Vec2& v : om.vertices()) halfw = std::max(halfw, std::abs(v.y));
    const double hk = std::min(h, 0.45 * halfw);
    SpindleRow row;
    row.k = k;
    row.lambda_neumann = neumann_eigenvalue(f, om, p, hk, opts).lambda;
    row.upper = lam_w * diam_w / diam_k;
    row.gap = row.upper - row.lambda_neumann;
    if (!(row.lambda_neumann < row.upper))
      throw SolverFailure("spindle_limit_study: Neumann value not below the Dirichlet bound");
    if (!rows.empty() && row.gap > rows.back().gap) row.flagged = true;
    rows.push_back(row);
  }
  int flagged = 0;
  for (const SpindleRow& r : rows) flagged += r.flagged;
  if (flagged > 1)
    throw SolverFailure("spindle_limit_study: gap not shrinking with k");
  return rows;
}

}  // namespace finsler
