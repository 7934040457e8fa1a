#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "schwarzlab/decomposition.hpp"
#include "schwarzlab/linalg.hpp"
#include "schwarzlab/types.hpp"

namespace schwarzlab::ops {

/// The five composed methods plus the epsilon-perturbed restricted method.
enum class MethodKind { kAs, kFeT, kEfT, kRasCut, kObddCut, kFepsT };

struct Method {
  MethodKind kind = MethodKind::kAs;
  double epsilon = 0.0;  // only meaningful for kFepsT, in (0, 1)
};

std::string method_name(const Method& m);
Method parse_method(const std::string& name, double epsilon = 0.0);

/// Offsets of the per-subdomain blocks inside a stacked product-space vector.
struct BlockLayout {
  std::vector<int> offset;  // size count()+1
  int dim() const { return offset.back(); }
  int count() const { return static_cast<int>(offset.size()) - 1; }
  int block_size(int l) const { return offset[l + 1] - offset[l]; }
};

BlockLayout layout_closure(const decomp::OverlapDecomposition& od);
BlockLayout layout_interior(const decomp::OverlapDecomposition& od);

/// Block-diagonal bilinear form on the product space (closure dofs per
/// subdomain). Every block is SPD.
struct ProductSpaceForm {
  std::vector<Matrix> block;
  BlockLayout layout;
  std::string label;

  Matrix assemble() const;
  Vector apply(const Vector& x) const;
  double dot(const Vector& x, const Vector& y) const { return x.dot(apply(y)); }
};

/// Neumann stiffness over each overlapped region plus the lumped boundary
/// mass on its in-domain region boundary.
ProductSpaceForm build_b_form(const decomp::OverlapDecomposition& od);

/// Stiffness over the nonoverlapping part plus epsilon times the stiffness
/// over the overlap remainder plus the same boundary mass. SPD for
/// epsilon > 0.
ProductSpaceForm build_c_form(const decomp::OverlapDecomposition& od,
                              double epsilon);

std::pair<ProductSpaceForm, std::optional<ProductSpaceForm>> build_forms(
    const decomp::OverlapDecomposition& od, std::optional<double> epsilon);

/// Everything the composed operators need: the global stiffness (sparse and
/// factored dense), per-subdomain Dirichlet factorizations, the region
/// stiffness rectangles, and the cut-function diagonals.
struct LocalSolverBundle {
  decomp::OverlapDecomposition od;
  decomp::CutFunctions cuts;
  BlockLayout g_layout;     // interior dofs per subdomain
  BlockLayout ghat_layout;  // closure dofs per subdomain

  SparseMatrix a_sparse;  // global Dirichlet stiffness on free dofs
  Matrix a_dense;
  std::shared_ptr<const linalg::SpdSolver> a_solver;

  ProductSpaceForm b_form;                                   // closure blocks
  std::vector<Matrix> dirichlet_block;                       // interior blocks
  std::vector<std::shared_ptr<const linalg::SpdSolver>> dirichlet_solver;
  std::vector<SparseMatrix> neumann_part;     // rows global, cols interior; part region
  std::vector<SparseMatrix> neumann_overlap;  // same shape; overlap remainder
  std::vector<Vector> eta_interior, eta_closure, chi_interior;

  int free_dof_count() const { return od.dofs.size(); }
};

LocalSolverBundle build_bundle(const decomp::OverlapDecomposition& od,
                               const decomp::CutFunctions& cuts);

/// Local Dirichlet solves against the global stiffness image of u, packed
/// into the closure layout with zero region-boundary entries.
Vector apply_ET(const LocalSolverBundle& bundle, const Vector& u);

/// Local Dirichlet solves with the part-region right-hand side.
Vector apply_FT(const LocalSolverBundle& bundle, const Vector& u);

enum class ExtensionKind { kZero, kHarmonic, kOverlap, kEpsilon };

/// Maps a product-space vector (closure layout, zero on region boundaries)
/// into the global space. kZero sums the injected interior values; the
/// other kinds solve one global problem and are meant for diagnostics.
Vector apply_extension(const LocalSolverBundle& bundle, ExtensionKind kind,
                       const Vector& vhat, double epsilon = 0.0);

/// The composed method operator on the global space (diagnostics; the
/// restricted kinds use one global solve per application).
Vector apply_preconditioned(const LocalSolverBundle& bundle, const Method& m,
                            const Vector& u);

/// The operator actually iterated by a Krylov solver for this method; never
/// applies the global inverse.
Vector apply_equation(const LocalSolverBundle& bundle, const Method& m,
                      const Vector& u);

/// Right-hand side of the method's residual equation, assembled from the
/// load vector through local solves.
Vector equation_rhs(const LocalSolverBundle& bundle, const Method& m,
                    const Vector& load);

/// Recovers the solution of the original problem from the Krylov unknown
/// (one more round of local solves for the kinds that need it).
Vector equation_solution(const LocalSolverBundle& bundle, const Method& m,
                         const Vector& w);

/// Dense matrix of the method operator on the free dofs.
Matrix materialize(const LocalSolverBundle& bundle, const Method& m,
                   int dense_cap = 5000);

/// Convenience views used by the diagnostics: dense zero-extension
/// [E_1 ... E_N], the stacked restriction, and the projection onto the
/// interior-dof subspace in the b form.
Matrix extension_matrix(const LocalSolverBundle& bundle);
Matrix interior_injection(const LocalSolverBundle& bundle);  // ghat x g
Matrix projection_G_b(const LocalSolverBundle& bundle);      // on ghat

/// Interior part of a closure-layout vector and its inverse (zero padding).
Vector ghat_to_g(const LocalSolverBundle& bundle, const Vector& vhat);
Vector g_to_ghat(const LocalSolverBundle& bundle, const Vector& v);

}  // namespace schwarzlab::ops
