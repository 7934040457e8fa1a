#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "schwarzlab/spaces.hpp"

using namespace schwarzlab;
using spaces::InnerProduct;
using spaces::Subspace;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

InnerProduct random_ip(int n, std::mt19937_64& rng) {
  const Matrix m = random_matrix(n, n, rng);
  return InnerProduct(m.transpose() * m + Matrix::Identity(n, n));
}

}  // namespace

TEST_CASE("orthonormalize scales a single direction") {
  Matrix basis = Matrix::Zero(2, 1);
  basis(0, 0) = 1;
  const InnerProduct ip((2 * Matrix::Identity(2, 2)).eval());
  const auto q = spaces::orthonormalize(Subspace(2, basis), ip);
  CHECK(q.basis()(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(q.basis()(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("orthonormalize spans the same plane") {
  Matrix basis(2, 2);
  basis << 1, 1, 0, 1;  // e1 and e1+e2
  const auto q = spaces::orthonormalize(Subspace(2, basis),
                                        InnerProduct::euclidean(2));
  CHECK((q.basis().transpose() * q.basis() - Matrix::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("orthonormalize satisfies the Gram identity on random bases") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ip = random_ip(8, rng);
    const Subspace x(8, random_matrix(8, 3, rng));
    const auto q = spaces::orthonormalize(x, ip);
    CHECK((q.basis().transpose() * ip.gram() * q.basis() -
           Matrix::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("subspace construction rejects dependent columns") {
  Matrix bad(3, 2);
  bad << 1, 2, 1, 2, 0, 0;
  CHECK_THROWS_AS(Subspace(3, bad), RankDeficient);
}

TEST_CASE("orthogonal projector basics") {
  const auto whole = spaces::orth_project(Subspace::whole(3),
                                          InnerProduct::euclidean(3));
  CHECK((whole - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1;
  const auto p = spaces::orth_project(Subspace(2, e1),
                                      InnerProduct::euclidean(2));
  Vector v(2);
  v << 1, 1;
  const Vector pv = p * v;
  CHECK(pv[0] == doctest::Approx(1.0));
  CHECK(pv[1] == doctest::Approx(0.0));
}

TEST_CASE("orthogonal projection minimizes the ip-distance") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ip = random_ip(7, rng);
    const Matrix basis = random_matrix(7, 3, rng);
    const Subspace x(7, basis);
    const Matrix p = spaces::orth_project(x, ip);
    const Vector v = random_matrix(7, 1, rng);
    // Normal-equations oracle for the coefficients of the closest point.
    const Matrix gram = basis.transpose() * ip.gram() * basis;
    const Vector coef =
        gram.ldlt().solve(basis.transpose() * ip.gram() * v);
    const Vector closest = basis * coef;
    CHECK((p * v - closest).norm() < 1e-10 * (1 + closest.norm()));
    // Projector algebra in the ip geometry.
    CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ip.gram() * p - (ip.gram() * p).transpose()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("oblique projector on a hand-solved plane pair") {
  Matrix x = Matrix::Zero(2, 1), y = Matrix::Zero(2, 1);
  x(0, 0) = 1;
  y << 1, 1;
  const Matrix q = spaces::oblique_project(Subspace(2, x), Subspace(2, y));
  Vector v(2);
  v << 5, 2;
  const Vector qv = q * v;
  CHECK(qv[0] == doctest::Approx(3.0));  // v1 - v2
  CHECK(qv[1] == doctest::Approx(0.0));
  CHECK((q * q - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("oblique projector rejects degenerate pairs") {
  Matrix x = Matrix::Zero(2, 1);
  x(0, 0) = 1;
  CHECK_THROWS_AS(spaces::oblique_project(Subspace(2, x), Subspace(2, x)),
                  NotComplementary);
  Matrix both(3, 2);
  both << 1, 0, 0, 1, 0, 0;
  CHECK_THROWS_AS(
      spaces::oblique_project(Subspace(3, both), Subspace(3, both)),
      NotComplementary);
}

TEST_CASE("oblique projector along the orthogonal complement is orthogonal") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6;
    const auto ip = random_ip(n, rng);
    const Subspace x(n, random_matrix(n, 2, rng));
    const auto perp = spaces::complement(x, ip);
    const Matrix q = spaces::oblique_project(x, perp);
    const Matrix p = spaces::orth_project(x, ip);
    CHECK((q - p).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("angles of trivial configurations") {
  const auto ip = InnerProduct::euclidean(2);
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1;
  const Subspace x(2, e1);
  const auto same = spaces::subspace_angles(x, x, ip);
  CHECK(same.theta == doctest::Approx(0.0));
  CHECK(same.big_theta == doctest::Approx(0.0));

  Matrix diag(2, 1);
  diag << 1, 1;
  const auto fortyfive = spaces::subspace_angles(x, Subspace(2, diag), ip);
  CHECK(fortyfive.theta == doctest::Approx(std::numbers::pi / 4));
  CHECK(fortyfive.big_theta == doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("minimal angle ties the oblique projector norm") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + int(rng() % 6);
    const int p = 1 + int(rng() % (n - 1));
    const auto ip = random_ip(n, rng);
    const Subspace x(n, random_matrix(n, p, rng));
    const Subspace y(n, random_matrix(n, n - p, rng));
    const Matrix q = spaces::oblique_project(x, y);
    const double qn = spaces::operator_norm(q, ip, ip);
    const double st = std::sin(spaces::subspace_angles(x, y, ip).theta);
    CHECK(st * qn == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("angle complement identity and product-of-projectors identity") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + int(rng() % 5);
    const int p = 1 + int(rng() % (n - 2));
    const int r = 1 + int(rng() % (n - 2));
    const auto ip = random_ip(n, rng);
    const Subspace x(n, random_matrix(n, p, rng));
    const Subspace y(n, random_matrix(n, r, rng));
    const auto a = spaces::subspace_angles(x, y, ip);
    const auto yperp = spaces::complement(y, ip);
    const auto b = spaces::subspace_angles(x, yperp, ip);
    CHECK(a.theta + b.big_theta ==
          doctest::Approx(std::numbers::pi / 2).epsilon(1e-8));

    const Matrix prod =
        spaces::orth_project(x, ip) * spaces::orth_project(y, ip);
    CHECK(spaces::operator_norm(prod, ip, ip) ==
          doctest::Approx(std::cos(a.theta)).epsilon(1e-8));
  }
}

TEST_CASE("equal-dimension maximal angle equals the projector gap") {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + int(rng() % 4);
    const int p = 1 + int(rng() % (n - 1));
    const auto ip = random_ip(n, rng);
    const Subspace x(n, random_matrix(n, p, rng));
    const Subspace y(n, random_matrix(n, p, rng));
    const auto a = spaces::subspace_angles(x, y, ip);
    const Matrix gap =
        spaces::orth_project(x, ip) - spaces::orth_project(y, ip);
    CHECK(std::sin(a.big_theta) ==
          doctest::Approx(spaces::operator_norm(gap, ip, ip)).epsilon(1e-8));
  }
}

TEST_CASE("operator norm basics and restriction") {
  const auto ip2 = InnerProduct::euclidean(2);
  CHECK(spaces::operator_norm(Matrix::Identity(2, 2), ip2, ip2) ==
        doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  CHECK(spaces::operator_norm(d, ip2, ip2) == doctest::Approx(3.0));
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1;
  CHECK(spaces::operator_norm(d, ip2, ip2, Subspace(2, e2)) ==
        doctest::Approx(1.0));
}

TEST_CASE("projector norms are at least one, equal one when orthogonal") {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6;
    const auto ip = random_ip(n, rng);
    const Subspace x(n, random_matrix(n, 2, rng));
    const Subspace y(n, random_matrix(n, 4, rng));
    const Matrix q = spaces::oblique_project(x, y);
    const double qn = spaces::operator_norm(q, ip, ip);
    CHECK(qn >= 1.0 - 1e-10);
    // Rayleigh sweep oracle never exceeds the computed norm.
    double sweep = 0;
    for (int s = 0; s < 500; ++s) {
      const Vector v = random_matrix(n, 1, rng);
      sweep = std::max(sweep, ip.norm(q * v) / ip.norm(v));
    }
    CHECK(sweep <= qn * (1 + 1e-9));
    // The orthogonal projector has norm exactly one.
    const Matrix p = spaces::orth_project(x, ip);
    CHECK(spaces::operator_norm(p, ip, ip) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("wielandt gap: proportional forms have zero bound") {
  const int n = 5;
  std::mt19937_64 rng(137);
  const auto b = random_ip(n, rng);
  const InnerProduct c((2.0 * b.gram()).eval());
  const auto gap = spaces::wielandt_gap(b, c, 200, 7);
  CHECK(gap.m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(gap.big_m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(gap.bound == doctest::Approx(0.0));
  CHECK(gap.worst_ratio <= 1e-12);
}

TEST_CASE("wielandt gap: planar diagonal pair attains the bound") {
  const InnerProduct b(Matrix::Identity(2, 2));
  Matrix cg = Matrix::Zero(2, 2);
  cg(0, 0) = 1;
  cg(1, 1) = 4;
  const InnerProduct c(cg);
  const auto gap = spaces::wielandt_gap(b, c, 500, 11);
  CHECK(gap.bound == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(gap.worst_ratio <= gap.bound + 1e-10);

  // Dense sweep over orthogonal unit pairs attains the bound.
  double best = 0;
  const int steps = 200000;
  for (int i = 0; i < steps; ++i) {
    const double phi = i * std::numbers::pi / steps;
    Vector x(2), y(2);
    x << std::cos(phi), std::sin(phi);
    y << -std::sin(phi), std::cos(phi);
    const Vector cy = cg * y;
    const double r = x.dot(cy) * x.dot(cy) / (cy.squaredNorm());
    best = std::max(best, r);
  }
  CHECK(best == doctest::Approx(0.36).epsilon(1e-8));
  CHECK(best <= gap.bound + 1e-10);
}

TEST_CASE("wielandt gap holds on random SPD pairs") {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4 + int(rng() % 5);
    const auto b = random_ip(n, rng);
    const auto c = random_ip(n, rng);
    const auto gap = spaces::wielandt_gap(b, c, 1000, 1000 + trial);
    CHECK(gap.worst_ratio <= gap.bound + 1e-10);
  }
}
