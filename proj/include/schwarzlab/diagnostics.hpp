#pragma once

#include <map>
#include <string>
#include <vector>

#include "schwarzlab/operators.hpp"
#include "schwarzlab/spaces.hpp"
#include "schwarzlab/types.hpp"

namespace schwarzlab::diag {

/// Every constant entering the condition-number bounds, measured on the
/// assembled finite-dimensional spaces (sharp values, not the generic upper
/// estimates).
struct Constants {
  int nu = 0;
  Matrix mu;           // strengthened Cauchy matrix of pairwise cosines
  double rho_mu = 0;   // spectral radius of mu
  double c_e = 0;      // stable-decomposition norm of the chi splitting
  double c_f = 0;      // same for the eta splitting
  double norm_E = 0;   // zero extension, b -> a
  double norm_F = 0;   // harmonic-like extension, b -> a
  double norm_Fov = 0;
  double norm_FovFhat = 0;  // a -> a
  double cos_alpha_E = 0, cos_alpha_F = 0;
  double beta_E = 0, beta_F = 0;  // maximal angles from the common hat range
  double norm_QE = 0;             // b-norm of the hat-extension projector
  double cos_beta_EF = 0;         // between the two transpose ranges (eps -> 0)
  double max_grad_eta_times_delta = 0;  // measured cut-function Lipschitz ratio

  struct EpsEntry {
    double eps = 0;
    double r0 = 0, r1 = 0;
    double norm_Feps = 0;
    double norm_Fhat_eps = 0;
    double cos_beta_EFeps = 0;
    double wielandt_m = 0, wielandt_M = 0, wielandt_bound = 0,
           wielandt_worst = 0;
  };
  std::vector<EpsEntry> eps;

  const EpsEntry& at_eps(double e) const;
};

Constants measure_constants(const ops::LocalSolverBundle& bundle,
                            const std::vector<double>& eps_list,
                            std::uint64_t seed = 20240001,
                            int wielandt_samples = 400);

/// Spectrum and condition numbers of one composed method operator.
struct Spectrum {
  ops::Method method;
  Eigen::VectorXcd eigenvalues;
  double norm_aa = 0;       // |T| in the a geometry
  double norm_inv_aa = 0;   // |T^{-1}|
  double kappa_aa = 0;
  double lambda_min = 0;    // extremes of the a-symmetrized pencil
  double lambda_max = 0;
  double spectral_kappa = 0;  // lambda_max / lambda_min (meaningful when a-self-adjoint)
  double min_fov = 0;         // min field of values in the a geometry
};

Spectrum method_spectrum(const ops::LocalSolverBundle& bundle,
                         const ops::Method& m, int dense_cap = 5000);

/// One verified statement: measured left side against the theoretical right
/// side built from measured constants. pass <=> measured <= theoretical
/// within 1e-8 relative. Report-only rows never gate an experiment.
struct BoundReport {
  std::string statement;
  std::string method;  // empty for global statements
  double epsilon = 0;
  double measured = 0;
  double theoretical = 0;
  double slack = 0;  // theoretical / measured
  bool asserted = true;
  bool pass = false;
};

std::vector<BoundReport> verify_bounds(const Constants& k,
                                       const std::vector<Spectrum>& spectra);

struct Positivity {
  double eps = 0;
  double m = 0, big_m = 0;
  double multiplier = 0;  // sqrt(mM) (M-m)^2 / (2 (M+m))
  double tan_theta = 0;   // between the two complements of the interior space
  double alpha_r = 0;
  double min_fov = 0;  // of the eps-perturbed method in the a geometry
  bool pass = false;   // min_fov >= -1e-10
};

Positivity positivity_report(const ops::LocalSolverBundle& bundle, double eps,
                             int dense_cap = 5000);

struct SolverRow {
  std::string method;  // "NONE" marks the unpreconditioned baseline
  double epsilon = 0;
  std::string solver;  // "CG" or "GMRES"
  int iterations = 0;
  bool converged = false;
  double final_relres = 0;
  double a_error = 0;  // relative a-norm distance to the direct solve
};

/// Solves the f = 1 load problem with every requested method (CG and GMRES
/// for the symmetric method, GMRES otherwise) plus an unpreconditioned
/// GMRES baseline, and cross-checks each solution against the direct solve.
std::vector<SolverRow> solver_table(const ops::LocalSolverBundle& bundle,
                                    const std::vector<ops::Method>& methods,
                                    double tol, int max_iter);

}  // namespace schwarzlab::diag
