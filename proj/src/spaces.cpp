#include "schwarzlab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace schwarzlab::spaces {

namespace {
constexpr double kRankTol = 1e-10;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }
}  // namespace

InnerProduct::InnerProduct(Matrix gram, std::string label)
    : gram_(std::move(gram)),
      label_(std::move(label)),
      solver_(std::make_shared<linalg::SpdSolver>(gram_)) {}

InnerProduct InnerProduct::euclidean(int n, std::string label) {
  return InnerProduct(Matrix::Identity(n, n), std::move(label));
}

double InnerProduct::dot(const Vector& x, const Vector& y) const {
  return x.dot(gram_ * y);
}

double InnerProduct::norm(const Vector& x) const {
  return std::sqrt(std::max(0.0, dot(x, x)));
}

Vector InnerProduct::solve(const Vector& x) const { return solver_->solve(x); }

Subspace::Subspace(int ambient, Matrix basis)
    : ambient_(ambient), basis_(std::move(basis)) {
  if (basis_.rows() != ambient_)
    throw DimensionMismatch("Subspace: basis rows must match ambient dim");
  if (basis_.cols() < 1 || basis_.cols() > basis_.rows())
    throw RankDeficient("Subspace: invalid basis column count");
  const auto sv = linalg::svd(basis_).sigma;
  if (sv[sv.size() - 1] <= kRankTol * sv[0])
    throw RankDeficient("Subspace: basis columns are linearly dependent");
}

Subspace Subspace::whole(int ambient) {
  return Subspace(ambient, Matrix::Identity(ambient, ambient));
}

Subspace orthonormalize(const Subspace& x, const InnerProduct& ip) {
  if (ip.size() != x.ambient())
    throw DimensionMismatch("orthonormalize: inner product size");
  // Factor gram = L L^T and orthonormalize L^T basis in the euclidean sense.
  Eigen::LLT<Matrix> llt(ip.gram());
  if (llt.info() != Eigen::Success) throw NotSpd("orthonormalize: gram");
  const Matrix lt_basis = llt.matrixU() * x.basis();
  const auto dec = linalg::svd(lt_basis);
  if (dec.sigma[dec.sigma.size() - 1] <= kRankTol * dec.sigma[0])
    throw RankDeficient("orthonormalize: basis is ip-degenerate");
  Matrix q = llt.matrixU().solve(dec.u);
  return Subspace(x.ambient(), std::move(q));
}

Matrix orth_project(const Subspace& x, const InnerProduct& ip) {
  const Subspace q = orthonormalize(x, ip);
  return q.basis() * (q.basis().transpose() * ip.gram());
}

Matrix oblique_project(const Subspace& onto, const Subspace& along) {
  const int n = onto.ambient();
  if (along.ambient() != n)
    throw DimensionMismatch("oblique_project: ambient dims differ");
  const int p = onto.dim();
  if (p + along.dim() != n)
    throw NotComplementary("oblique_project: dims do not add to ambient");
  Matrix w(n, n);
  w.leftCols(p) = onto.basis();
  w.rightCols(n - p) = along.basis();
  const auto dec = linalg::svd(w);
  if (dec.sigma[n - 1] <= 1e-12 * dec.sigma[0])
    throw NotComplementary("oblique_project: subspaces intersect");
  // Rows 0..p-1 of w^{-1} give the coefficients on `onto`.
  Matrix winv = dec.v * dec.sigma.cwiseInverse().asDiagonal() * dec.u.transpose();
  return onto.basis() * winv.topRows(p);
}

Angles subspace_angles(const Subspace& x, const Subspace& y,
                       const InnerProduct& ip) {
  const Subspace qx = orthonormalize(x, ip);
  const Subspace qy = orthonormalize(y, ip);
  // Squared principal cosines and sines of x against y, as the paired
  // eigenvalues of the projected and residual quadratic forms. Both angles
  // come out of atan2, which stays well conditioned at 0 and pi/2.
  const Matrix pi_y = qy.basis() * (qy.basis().transpose() * ip.gram());
  const Matrix on_y = pi_y * qx.basis();
  const Matrix off_y = qx.basis() - on_y;
  Matrix cos2 = on_y.transpose() * ip.gram() * on_y;
  Matrix sin2 = off_y.transpose() * ip.gram() * off_y;
  cos2 = 0.5 * (cos2 + cos2.transpose()).eval();
  sin2 = 0.5 * (sin2 + sin2.transpose()).eval();
  const auto cos_ev = linalg::eig_sym(cos2).values;
  const auto sin_ev = linalg::eig_sym(sin2).values;
  const int last = static_cast<int>(cos_ev.size()) - 1;

  Angles a;
  a.theta = std::atan2(std::sqrt(clamp01(sin_ev[0])),
                       std::sqrt(clamp01(cos_ev[last])));
  a.big_theta = std::atan2(std::sqrt(clamp01(sin_ev[last])),
                           std::sqrt(clamp01(cos_ev[0])));
  return a;
}

double operator_norm(const Matrix& m, const InnerProduct& ip_in,
                     const InnerProduct& ip_out,
                     const std::optional<Subspace>& restricted_to) {
  if (m.cols() != ip_in.size() || m.rows() != ip_out.size())
    throw DimensionMismatch("operator_norm: matrix and inner product sizes");
  Matrix z = restricted_to ? restricted_to->basis()
                           : Matrix::Identity(m.cols(), m.cols());
  if (restricted_to && restricted_to->ambient() != m.cols())
    throw DimensionMismatch("operator_norm: restriction ambient dim");
  const Matrix mz = m * z;
  Matrix num = mz.transpose() * ip_out.gram() * mz;
  Matrix den = z.transpose() * ip_in.gram() * z;
  num = 0.5 * (num + num.transpose()).eval();
  den = 0.5 * (den + den.transpose()).eval();
  const auto ev = linalg::eig_sym_gen(num, den).values;
  return std::sqrt(std::max(0.0, ev[ev.size() - 1]));
}

Subspace complement(const Subspace& x, const InnerProduct& ip) {
  const int n = x.ambient();
  if (x.dim() == n) throw RankDeficient("complement: subspace is the whole space");
  const Matrix residual = Matrix::Identity(n, n) - orth_project(x, ip);
  // Rank-reveal the residual range.
  const auto dec = linalg::svd(residual);
  const int want = n - x.dim();
  return Subspace(n, dec.u.leftCols(want));
}

WielandtGap wielandt_gap(const InnerProduct& b, const InnerProduct& c,
                         int samples, std::uint64_t seed) {
  if (b.size() != c.size())
    throw DimensionMismatch("wielandt_gap: inner product sizes differ");
  WielandtGap out;
  const auto ev = linalg::eig_sym_gen(c.gram(), b.gram()).values;
  out.m = ev[0];
  out.big_m = ev[ev.size() - 1];
  const double spread = (out.big_m - out.m) / (out.big_m + out.m);
  out.bound = spread * spread;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = b.size();
  auto draw = [&] {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  for (int s = 0; s < samples; ++s) {
    const Vector x = draw();
    Vector y = draw();
    const double bxx = b.dot(x, x);
    if (bxx <= 0) continue;
    y -= (b.dot(x, y) / bxx) * x;
    if (b.norm(y) <= 1e-12 * b.norm(x)) continue;
    const Vector cy = b.solve(c.gram() * y);  // C y
    const double num = x.dot(c.gram() * y);   // b(x, Cy) = c(x, y)
    const double den = bxx * b.dot(cy, cy);
    if (den <= 0) continue;
    out.worst_ratio = std::max(out.worst_ratio, num * num / den);
  }
  if (out.worst_ratio > out.bound + 1e-10)
    throw Error("wielandt_gap: sampled ratio exceeds the spectral bound");
  return out;
}

}  // namespace schwarzlab::spaces
