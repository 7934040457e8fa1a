#include "schwarzlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace schwarzlab::linalg {

namespace {

void check_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw DimensionMismatch(std::string(who) + ": matrix is not square");
}

void check_symmetric(const Matrix& a, const char* who) {
  check_square(a, who);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotSymmetric(std::string(who) + ": matrix is not symmetric");
}

Vector apply_or_identity(const LinearOperator& gram, const Vector& x) {
  return gram ? gram(x) : x;
}

double ip_dot(const LinearOperator& gram, const Vector& x, const Vector& y) {
  return gram ? x.dot(gram(y)) : x.dot(y);
}

double ip_norm(const LinearOperator& gram, const Vector& x) {
  return std::sqrt(std::max(0.0, ip_dot(gram, x, x)));
}

}  // namespace

SpdSolver::SpdSolver(const Matrix& a) : n_(a.rows()) {
  check_symmetric(a, "SpdSolver");
  llt_.compute(a);
  if (llt_.info() != Eigen::Success)
    throw NotSpd("SpdSolver: nonpositive pivot in Cholesky factorization");
}

Vector SpdSolver::solve(const Vector& rhs) const {
  if (rhs.size() != n_) throw DimensionMismatch("SpdSolver::solve: rhs size");
  return llt_.solve(rhs);
}

Matrix SpdSolver::solve(const Matrix& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("SpdSolver::solve: rhs rows");
  return llt_.solve(rhs);
}

Vector solve_spd(const Matrix& a, const Vector& rhs) {
  return SpdSolver(a).solve(rhs);
}

SymEig eig_sym(const Matrix& a) {
  check_symmetric(a, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw Error("eig_sym: failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

SymEig eig_sym_gen(const Matrix& a, const Matrix& b) {
  check_symmetric(a, "eig_sym_gen(A)");
  check_symmetric(b, "eig_sym_gen(B)");
  if (a.rows() != b.rows())
    throw DimensionMismatch("eig_sym_gen: A and B sizes differ");
  {
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success)
      throw NotSpd("eig_sym_gen: B is not positive definite");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b);
  if (es.info() != Eigen::Success)
    throw Error("eig_sym_gen: failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

Svd svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {s.matrixU(), s.singularValues(), s.matrixV()};
}

Eigen::VectorXcd eig_general(const Matrix& m) {
  check_square(m, "eig_general");
  Eigen::EigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw Error("eig_general: failed to converge");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<std::complex<double>> sorted(ev.data(), ev.data() + ev.size());
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = sorted[i];
  return ev;
}

SolveReport cg(const LinearOperator& apply, const Vector& rhs, double tol,
               int max_iter, const LinearOperator& gram) {
  SolveReport rep;
  rep.x = Vector::Zero(rhs.size());
  const double rhs_norm = ip_norm(gram, rhs);
  if (rhs_norm == 0.0) {
    rep.converged = true;
    return rep;
  }

  Vector r = rhs;
  Vector gr = apply_or_identity(gram, r);
  double rho = r.dot(gr);
  Vector p = r;
  double res = std::sqrt(std::max(0.0, rho));

  for (int k = 0; k < max_iter; ++k) {
    Vector ap = apply(p);
    const double denom = ip_dot(gram, p, ap);
    if (denom <= 0.0)
      throw NotSpd("cg: operator is not positive definite in the given inner product");
    const double alpha = rho / denom;
    rep.x += alpha * p;
    r -= alpha * ap;
    gr = apply_or_identity(gram, r);
    const double rho_next = r.dot(gr);
    res = std::sqrt(std::max(0.0, rho_next));
    rep.residual_history.push_back(res);
    rep.iterations = k + 1;
    if (res <= tol * rhs_norm) {
      rep.converged = true;
      break;
    }
    p = r + (rho_next / rho) * p;
    rho = rho_next;
  }
  return rep;
}

SolveReport gmres(const LinearOperator& apply, const Vector& rhs, double tol,
                  int max_iter, int restart, const LinearOperator& gram) {
  SolveReport rep;
  const auto n = rhs.size();
  rep.x = Vector::Zero(n);
  const double rhs_norm = ip_norm(gram, rhs);
  if (rhs_norm == 0.0) {
    rep.converged = true;
    return rep;
  }
  if (restart <= 0) restart = max_iter;

  int total_it = 0;
  while (total_it < max_iter && !rep.converged) {
    Vector r = rhs - apply(rep.x);
    double beta = ip_norm(gram, r);
    if (beta <= tol * rhs_norm) {
      rep.converged = true;
      break;
    }
    const int m = std::min(restart, max_iter - total_it);
    std::vector<Vector> basis;
    basis.reserve(m + 1);
    basis.push_back(r / beta);
    Matrix hess = Matrix::Zero(m + 1, m);
    // Givens-reduced least squares state.
    Vector g = Vector::Zero(m + 1);
    g[0] = beta;
    std::vector<double> cs(m), sn(m);
    bool stalled = false;

    for (int k = 0; k < m; ++k) {
      Vector w = apply(basis[k]);
      // Modified Gram-Schmidt with one reorthogonalization pass.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= k; ++i) {
          const double hik = ip_dot(gram, basis[i], w);
          hess(i, k) += hik;
          w -= hik * basis[i];
        }
      }
      const double hk1 = ip_norm(gram, w);
      hess(k + 1, k) = hk1;

      // Apply accumulated rotations, then eliminate the new subdiagonal.
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
        hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      const double denom = std::hypot(hess(k, k), hess(k + 1, k));
      if (denom == 0.0) {
        // Singular Hessenberg column: no further progress possible.
        stalled = true;
        break;
      }
      cs[k] = hess(k, k) / denom;
      sn[k] = hess(k + 1, k) / denom;
      hess(k, k) = denom;
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      // Form the current iterate and measure the true residual.
      Vector y = hess.topLeftCorner(k + 1, k + 1)
                     .triangularView<Eigen::Upper>()
                     .solve(g.head(k + 1));
      Vector xk = rep.x;
      for (int i = 0; i <= k; ++i) xk += y[i] * basis[i];
      const double true_res = ip_norm(gram, rhs - apply(xk));
      rep.residual_history.push_back(true_res);
      ++total_it;
      rep.iterations = total_it;

      if (true_res <= tol * rhs_norm) {
        rep.x = xk;
        rep.converged = true;
        break;
      }
      if (hk1 <= 1e-14 * beta) {
        // Lucky breakdown converges above; otherwise restart from xk.
        rep.x = xk;
        if (k + 1 == m || total_it >= max_iter) stalled = true;
        break;
      }
      if (k + 1 == m || total_it >= max_iter) {
        rep.x = xk;
        break;
      }
      basis.push_back(w / hk1);
    }
    if (stalled) break;
  }
  return rep;
}

SolveReport krylov_solve(const LinearOperator& apply, const Vector& rhs,
                         const KrylovParams& params, const LinearOperator& gram) {
  if (params.method == KrylovMethod::kCg)
    return cg(apply, rhs, params.tol, params.max_iter, gram);
  return gmres(apply, rhs, params.tol, params.max_iter, params.restart, gram);
}

}  // namespace schwarzlab::linalg
