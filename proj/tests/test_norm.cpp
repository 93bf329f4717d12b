#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "finsler/norm.hpp"

using namespace finsler;

namespace {

std::vector<Norm> admissible_specs() {
  return {
      Norm::lq(2.0),
      Norm::lq(4.0),
      Norm::lq(1.5),
      Norm::ellipse(Mat2{4, 0, 0, 1}),
      Norm::ellipse(Mat2{2, 0.5, 0.5, 1}),
      Norm::smoothed_polytope(
          {Vec2{1, 0}, Vec2{0.5, std::sqrt(3) / 2}, Vec2{-0.5, std::sqrt(3) / 2}}, 0.1),
  };
}

Vec2 random_dir(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  const double th = u(rng);
  return {std::cos(th), std::sin(th)};
}

Vec2 random_vec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.1, 3.0);
  return random_dir(rng) * r(rng);
}

// Exact area of the unit ball of the lq' norm (polar of lq): 4 G(1+1/s)^2 /
// G(1+2/s) with s the dual exponent.
double lq_ball_area(double s) {
  return 4.0 * std::tgamma(1.0 + 1.0 / s) * std::tgamma(1.0 + 1.0 / s) /
         std::tgamma(1.0 + 2.0 / s);
}

}  // namespace

TEST_CASE("norm evaluation closed forms") {
  CHECK(Norm::lq(2).value({3, 4}) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(Norm::ellipse(Mat2{4, 0, 0, 1}).value({1, 0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(Norm::lq(4).value({1, 1}) == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-14));
  CHECK(Norm::lq(2).value({0, 0}) == 0.0);
}

TEST_CASE("invalid specs rejected at construction") {
  CHECK_THROWS_AS(Norm::lq(1.0), std::invalid_argument);
  CHECK_THROWS_AS(Norm::lq(0.5), std::invalid_argument);
  CHECK_THROWS_AS(Norm::ellipse(Mat2{1, 2, 2, 1}), std::invalid_argument);  // indefinite
  CHECK_THROWS_AS(Norm::ellipse(Mat2{1, 0.5, 0.2, 1}), std::invalid_argument);  // asymmetric
  CHECK_THROWS_AS(Norm::smoothed_polytope({Vec2{1, 0}, Vec2{2, 0}}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Norm::smoothed_polytope({Vec2{1, 0}, Vec2{0, 1}}, 0.0), std::invalid_argument);
}

TEST_CASE("homogeneity and evenness") {
  std::mt19937_64 rng(101);
  for (const Norm& f : admissible_specs()) {
    for (int i = 0; i < 1000; ++i) {
      const Vec2 xi = random_vec(rng);
      const double fx = f.value(xi);
      for (double t : {-2.0, 0.5, 3.0})
        CHECK(std::abs(f.value(xi * t) - std::abs(t) * fx) <= 1e-12 * fx * std::abs(t) + 1e-300);
      CHECK(f.value(-xi) == doctest::Approx(fx).epsilon(1e-14));
    }
  }
}

TEST_CASE("triangle inequality") {
  std::mt19937_64 rng(102);
  for (const Norm& f : admissible_specs())
    for (int i = 0; i < 500; ++i) {
      const Vec2 a = random_vec(rng), b = random_vec(rng);
      CHECK(f.value(a + b) <= f.value(a) + f.value(b) + 1e-12);
    }
}

TEST_CASE("polar closed forms") {
  CHECK(Norm::lq(2).polar().value({3, 4}) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(Norm::ellipse(Mat2{4, 0, 0, 1}).polar().value({1, 0}) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // lq(4) dual exponent is 4/3.
  const Norm p = Norm::lq(4).polar();
  CHECK(p.value({1, 1}) == doctest::Approx(std::pow(2.0, 3.0 / 4.0)).epsilon(1e-13));
}

TEST_CASE("scalar product inequality |xi.eta| <= F(xi) F°(eta)") {
  std::mt19937_64 rng(103);
  for (const Norm& f : admissible_specs()) {
    const Norm fo = f.polar();
    for (int i = 0; i < 1000; ++i) {
      const Vec2 xi = random_vec(rng), eta = random_vec(rng);
      CHECK(std::abs(xi.dot(eta)) <= f.value(xi) * fo.value(eta) * (1 + 1e-10));
    }
  }
}

TEST_CASE("bidual agrees with primal") {
  std::mt19937_64 rng(104);
  for (const Norm& f : admissible_specs()) {
    const Norm ff = f.polar().polar();
    for (int i = 0; i < 200; ++i) {
      const Vec2 xi = random_vec(rng);
      CHECK(ff.value(xi) == doctest::Approx(f.value(xi)).epsilon(1e-8));
    }
  }
}

TEST_CASE("gradient closed forms and Euler identity") {
  CHECK(Norm::lq(2).gradient({3, 4}).x == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(Norm::lq(2).gradient({3, 4}).y == doctest::Approx(0.8).epsilon(1e-14));
  CHECK_THROWS_AS(Norm::lq(2).gradient({0, 0}), std::domain_error);

  std::mt19937_64 rng(105);
  for (const Norm& f : admissible_specs())
    for (int i = 0; i < 500; ++i) {
      const Vec2 xi = random_vec(rng);
      CHECK(f.gradient(xi).dot(xi) == doctest::Approx(f.value(xi)).epsilon(1e-10));
    }
}

TEST_CASE("gradient matches central differences at O(h^2)") {
  std::mt19937_64 rng(106);
  for (const Norm& f : admissible_specs()) {
    for (int i = 0; i < 20; ++i) {
      const Vec2 xi = random_vec(rng);
      const Vec2 g = f.gradient(xi);
      auto fd_err = [&](double h) {
        const Vec2 gh{(f.value(xi + Vec2{h, 0}) - f.value(xi - Vec2{h, 0})) / (2 * h),
                      (f.value(xi + Vec2{0, h}) - f.value(xi - Vec2{0, h})) / (2 * h)};
        return (gh - g).norm();
      };
      const double e1 = fd_err(1e-3), e2 = fd_err(5e-4);
      CHECK(e1 <= 1e-4 * (1.0 + g.norm()));
      // Halving h cuts the error by about 4 unless already at roundoff.
      if (e1 > 1e-10) CHECK(e2 <= 0.35 * e1 + 1e-11);
    }
  }
}

TEST_CASE("duality identities eq H1 and HH0") {
  std::mt19937_64 rng(107);
  for (const Norm& f : admissible_specs()) {
    const Norm fo = f.polar();
    for (int i = 0; i < 300; ++i) {
      const Vec2 xi = random_vec(rng);
      CHECK(fo.value(f.gradient(xi)) == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(f.value(fo.gradient(xi)) == doctest::Approx(1.0).epsilon(1e-8));
      const Vec2 lhs = f.gradient(fo.gradient(xi)) * fo.value(xi);
      CHECK((lhs - xi).norm() <= 1e-8 * xi.norm());
      const Vec2 lhs2 = fo.gradient(f.gradient(xi)) * f.value(xi);
      CHECK((lhs2 - xi).norm() <= 1e-8 * xi.norm());
    }
  }
}

TEST_CASE("hessian closed forms and eq sec") {
  const Mat2 h = Norm::lq(2).hessian({1, 0});
  CHECK(h.a == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(h.d == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h.b == doctest::Approx(0.0).epsilon(1e-14));

  std::mt19937_64 rng(108);
  for (const Norm& f : admissible_specs())
    for (int i = 0; i < 300; ++i) {
      const Vec2 xi = random_vec(rng);
      const Vec2 r = f.hessian(xi) * xi;
      CHECK(r.norm() <= 1e-8 * (1.0 + std::abs(f.hessian(xi).trace())));
    }

  // Hessian of F^2 for an ellipse is the constant 2M.
  const Norm e = Norm::ellipse(Mat2{4, 0, 0, 1});
  const Mat2 h2 = e.hessian_of_power(2.0, {0, 1});
  CHECK(h2.a == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(h2.d == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(h2.min_eigenvalue_sym() > 0.0);
}

TEST_CASE("hessian of power is positive definite off the origin") {
  std::mt19937_64 rng(109);
  for (const Norm& f : admissible_specs())
    for (double p : {2.0, 4.0})
      for (int i = 0; i < 100; ++i) {
        const Vec2 xi = random_vec(rng);
        CHECK(f.hessian_of_power(p, xi).min_eigenvalue_sym() > 0.0);
      }
}

TEST_CASE("gradient of power") {
  const Vec2 g = Norm::lq(2).gradient_of_power(2.0, {3, 4});
  CHECK(g.x == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(g.y == doctest::Approx(4.0).epsilon(1e-13));
  const Vec2 z = Norm::lq(4).gradient_of_power(7.0, {0, 0});
  CHECK(z.x == 0.0);
  CHECK(z.y == 0.0);
  const Vec2 g3 = Norm::lq(2).gradient_of_power(3.0, {0, 2});
  CHECK(g3.x == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(g3.y == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("rotation") {
  const Mat2 a = Mat2::rotation(0.7);
  std::mt19937_64 rng(110);
  // Euclidean norm is rotation invariant.
  const Norm r2 = Norm::lq(2).rotated(a);
  for (int i = 0; i < 50; ++i) {
    const Vec2 xi = random_vec(rng);
    CHECK(r2.value(xi) == doctest::Approx(xi.norm()).epsilon(1e-12));
  }
  // Quarter turn swaps the ellipse axes.
  const Norm re = Norm::ellipse(Mat2{4, 0, 0, 1}).rotated(Mat2::rotation(M_PI / 2));
  CHECK(re.value({1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(Norm::lq(2).rotated(Mat2{1, 0, 0, 2}), std::invalid_argument);
}

TEST_CASE("polar commutes with rotation") {
  const Mat2 a = Mat2::rotation(1.1);
  std::mt19937_64 rng(111);
  for (const Norm& f : admissible_specs()) {
    const Norm lhs = f.rotated(a).polar();
    const Norm rhs = f.polar().rotated(a);
    for (int i = 0; i < 100; ++i) {
      const Vec2 xi = random_vec(rng);
      CHECK(lhs.value(xi) == doctest::Approx(rhs.value(xi)).epsilon(1e-10));
    }
  }
}

TEST_CASE("wulff measure") {
  CHECK(Norm::lq(2).wulff_measure() == doctest::Approx(M_PI).epsilon(1e-6));
  // Wulff of the ellipse norm diag(4,1) has semi-axes 2 and 1.
  CHECK(Norm::ellipse(Mat2{4, 0, 0, 1}).wulff_measure() == doctest::Approx(2 * M_PI).epsilon(1e-6));
  // Wulff of lq(q) is the dual-exponent ball; exact area via Gamma functions.
  for (double q : {1.25, 1.5, 3.0, 8.0}) {
    const double s = q / (q - 1.0);
    CHECK(Norm::lq(q).wulff_measure() == doctest::Approx(lq_ball_area(s)).epsilon(1e-6));
  }
  // q -> 1: the Wulff shape tends to the square of side 2.
  CHECK(Norm::lq(1.01).wulff_measure() == doctest::Approx(4.0).epsilon(2e-3));
}

TEST_CASE("json round trip") {
  for (const Norm& f : admissible_specs()) {
    const Norm g = Norm::from_json(f.to_json());
    std::mt19937_64 rng(112);
    for (int i = 0; i < 20; ++i) {
      const Vec2 xi = random_vec(rng);
      CHECK(g.value(xi) == doctest::Approx(f.value(xi)).epsilon(1e-12));
    }
  }
  // Numeric polar keeps its role tag through serialization.
  const Norm sp = Norm::smoothed_polytope(
      {Vec2{1, 0}, Vec2{0.5, std::sqrt(3) / 2}, Vec2{-0.5, std::sqrt(3) / 2}}, 0.1);
  const Norm spo = sp.polar();
  const Norm round = Norm::from_json(spo.to_json());
  CHECK(round.is_numeric_polar());
  CHECK(round.value({1.3, -0.4}) == doctest::Approx(spo.value({1.3, -0.4})).epsilon(1e-10));
}
