#pragma once

#include <functional>
#include <vector>

#include "schwarzlab/types.hpp"

namespace schwarzlab::linalg {

/// Dense symmetric positive definite solver. Factors once (Cholesky),
/// solves many right-hand sides.
class SpdSolver {
 public:
  /// Throws NotSymmetric if a deviates from a^T by more than 1e-12 relative,
  /// NotSpd if the Cholesky factorization hits a nonpositive pivot.
  explicit SpdSolver(const Matrix& a);

  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;
  Eigen::Index size() const { return n_; }

 private:
  Eigen::Index n_ = 0;
  Eigen::LLT<Matrix> llt_;
};

/// One-shot SPD solve.
Vector solve_spd(const Matrix& a, const Vector& rhs);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // columns, B-orthonormal for the generalized problem
};

/// Standard symmetric eigendecomposition, values ascending.
SymEig eig_sym(const Matrix& a);

/// Generalized symmetric eigenproblem A v = lambda B v with B SPD,
/// reduced through the Cholesky factor of B. V^T B V = I.
SymEig eig_sym_gen(const Matrix& a, const Matrix& b);

struct Svd {
  Matrix u;
  Vector sigma;  // descending, nonnegative
  Matrix v;
};

Svd svd(const Matrix& m);

/// Eigenvalues of a general square matrix, sorted by (real, imag).
Eigen::VectorXcd eig_general(const Matrix& m);

using LinearOperator = std::function<Vector(const Vector&)>;

enum class KrylovMethod { kCg, kGmres };

struct KrylovParams {
  KrylovMethod method = KrylovMethod::kGmres;
  double tol = 1e-10;  // relative residual
  int max_iter = 500;
  int restart = 200;
};

struct SolveReport {
  Vector x;
  int iterations = 0;
  std::vector<double> residual_history;  // norms measured per iteration
  bool converged = false;
};

/// Conjugate gradients for an operator that is self-adjoint positive definite
/// in the inner product induced by `gram` (identity when empty). Residual
/// norms are measured in that same inner product.
SolveReport cg(const LinearOperator& apply, const Vector& rhs, double tol,
               int max_iter, const LinearOperator& gram = nullptr);

/// GMRES with modified Gram-Schmidt plus one reorthogonalization pass.
/// The optional `gram` turns it into weighted GMRES in that inner product.
/// Residual history holds explicitly recomputed residual norms. Happy or
/// unlucky Hessenberg breakdown terminates the cycle early.
SolveReport gmres(const LinearOperator& apply, const Vector& rhs, double tol,
                  int max_iter, int restart = 200,
                  const LinearOperator& gram = nullptr);

SolveReport krylov_solve(const LinearOperator& apply, const Vector& rhs,
                         const KrylovParams& params,
                         const LinearOperator& gram = nullptr);

}  // namespace schwarzlab::linalg
