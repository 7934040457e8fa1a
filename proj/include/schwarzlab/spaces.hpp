#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "schwarzlab/linalg.hpp"
#include "schwarzlab/types.hpp"

namespace schwarzlab::spaces {

/// An SPD Gram matrix defining an inner product, factored at construction.
class InnerProduct {
 public:
  explicit InnerProduct(Matrix gram, std::string label = "");
  static InnerProduct euclidean(int n, std::string label = "euclidean");

  int size() const { return static_cast<int>(gram_.rows()); }
  const Matrix& gram() const { return gram_; }
  const std::string& label() const { return label_; }
  double dot(const Vector& x, const Vector& y) const;
  double norm(const Vector& x) const;
  /// gram^{-1} x
  Vector solve(const Vector& x) const;

 private:
  Matrix gram_;
  std::string label_;
  std::shared_ptr<const linalg::SpdSolver> solver_;
};

/// Column span of a basis matrix inside an ambient space. Construction
/// rejects rank-deficient bases (singular value ratio below 1e-10).
class Subspace {
 public:
  Subspace(int ambient, Matrix basis);
  static Subspace whole(int ambient);

  int ambient() const { return ambient_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

 private:
  int ambient_;
  Matrix basis_;
};

/// Basis Q with Q^T gram Q = I spanning the same space.
Subspace orthonormalize(const Subspace& x, const InnerProduct& ip);

/// Orthogonal projector onto x in the given inner product.
Matrix orth_project(const Subspace& x, const InnerProduct& ip);

/// Oblique projector with range `onto` and kernel containing `along`.
/// Throws NotComplementary when dims do not add to the ambient dimension or
/// the pair fails to span.
Matrix oblique_project(const Subspace& onto, const Subspace& along);

struct Angles {
  double theta;      // minimal angle, in [0, pi/2]
  double big_theta;  // maximal angle from x toward y, in [0, pi/2]
};

/// Minimal angle from the largest principal cosine and maximal angle from
/// the sup over unit x of the ip-distance to y (one-sided in x).
Angles subspace_angles(const Subspace& x, const Subspace& y,
                       const InnerProduct& ip);

/// sup over x (restricted when given) of |m x|_out / |x|_in.
double operator_norm(const Matrix& m, const InnerProduct& ip_in,
                     const InnerProduct& ip_out,
                     const std::optional<Subspace>& restricted_to = std::nullopt);

/// Orthogonal complement of x in the given inner product.
Subspace complement(const Subspace& x, const InnerProduct& ip);

struct WielandtGap {
  double m = 0.0;           // min eigenvalue of the (c, b) pencil
  double big_m = 0.0;       // max eigenvalue
  double bound = 0.0;       // ((M - m) / (M + m))^2
  double worst_ratio = 0.0; // worst sampled b-orthogonal coupling ratio
};

/// Samples b-orthogonal pairs (x, y) and checks
/// b(x, Cy)^2 <= bound * b(x, x) b(Cy, Cy), with C the operator defined by
/// b(Cu, v) = c(u, v). Throws if a sample exceeds bound + 1e-10.
WielandtGap wielandt_gap(const InnerProduct& b, const InnerProduct& c,
                         int samples, std::uint64_t seed);

}  // namespace schwarzlab::spaces
