#include "schwarzlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace schwarzlab::ops {

namespace {

std::vector<int> overlap_remainder(const decomp::Subdomain& sd) {
  std::set<int> part(sd.part_elements.begin(), sd.part_elements.end());
  std::vector<int> rest;
  for (int e : sd.overlap_elements)
    if (!part.count(e)) rest.push_back(e);
  return rest;
}

fem::DofMap local_map(const decomp::OverlapDecomposition& od,
                      const std::vector<int>& global_dofs) {
  std::vector<int> nodes(global_dofs.size());
  for (size_t i = 0; i < global_dofs.size(); ++i)
    nodes[i] = od.dofs.nodes[global_dofs[i]];
  return fem::dofs_for_nodes(od.grid, nodes);
}

void check_spd_blocks(const ProductSpaceForm& form) {
  for (const auto& blk : form.block) {
    Eigen::LLT<Matrix> llt(blk);
    if (llt.info() != Eigen::Success)
      throw NotSpd("build_forms: a product-space block is not SPD (" +
                   form.label + ")");
  }
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

std::string method_name(const Method& m) {
  switch (m.kind) {
    case MethodKind::kAs:
      return "AS";
    case MethodKind::kFeT:
      return "FE_T";
    case MethodKind::kEfT:
      return "EF_T";
    case MethodKind::kRasCut:
      return "RAS_CUT";
    case MethodKind::kObddCut:
      return "OBDD_CUT";
    case MethodKind::kFepsT:
      return "FEPS_T";
  }
  return "?";
}

Method parse_method(const std::string& name, double epsilon) {
  Method m;
  m.epsilon = epsilon;
  if (name == "AS")
    m.kind = MethodKind::kAs;
  else if (name == "FE_T")
    m.kind = MethodKind::kFeT;
  else if (name == "EF_T")
    m.kind = MethodKind::kEfT;
  else if (name == "RAS_CUT")
    m.kind = MethodKind::kRasCut;
  else if (name == "OBDD_CUT")
    m.kind = MethodKind::kObddCut;
  else if (name == "FEPS_T")
    m.kind = MethodKind::kFepsT;
  else
    throw ConfigError("unknown method: " + name);
  if (m.kind == MethodKind::kFepsT && (epsilon <= 0.0 || epsilon >= 1.0))
    throw ConfigError("FEPS_T requires epsilon in (0, 1)");
  return m;
}

BlockLayout layout_closure(const decomp::OverlapDecomposition& od) {
  BlockLayout l;
  l.offset.push_back(0);
  for (const auto& sd : od.sub)
    l.offset.push_back(l.offset.back() +
                       static_cast<int>(sd.closure_dofs.size()));
  return l;
}

BlockLayout layout_interior(const decomp::OverlapDecomposition& od) {
  BlockLayout l;
  l.offset.push_back(0);
  for (const auto& sd : od.sub)
    l.offset.push_back(l.offset.back() +
                       static_cast<int>(sd.interior_dofs.size()));
  return l;
}

Matrix ProductSpaceForm::assemble() const {
  Matrix out = Matrix::Zero(layout.dim(), layout.dim());
  for (int l = 0; l < layout.count(); ++l)
    out.block(layout.offset[l], layout.offset[l], block[l].rows(),
              block[l].cols()) = block[l];
  return out;
}

Vector ProductSpaceForm::apply(const Vector& x) const {
  if (x.size() != layout.dim())
    throw DimensionMismatch("ProductSpaceForm::apply: vector size");
  Vector out(x.size());
  for (int l = 0; l < layout.count(); ++l)
    out.segment(layout.offset[l], layout.block_size(l)) =
        block[l] * x.segment(layout.offset[l], layout.block_size(l));
  return out;
}

ProductSpaceForm build_b_form(const decomp::OverlapDecomposition& od) {
  ProductSpaceForm form;
  form.layout = layout_closure(od);
  form.label = "b";
  for (const auto& sd : od.sub) {
    const fem::DofMap lm = local_map(od, sd.closure_dofs);
    Matrix blk = Matrix(fem::assemble_stiffness(od.grid, sd.overlap_elements,
                                                lm, lm));
    std::vector<int> mass_nodes(sd.boundary_dofs.size());
    for (size_t i = 0; i < sd.boundary_dofs.size(); ++i)
      mass_nodes[i] = od.dofs.nodes[sd.boundary_dofs[i]];
    blk += Matrix(
        fem::boundary_mass(od.grid, sd.overlap_elements, mass_nodes, lm));
    form.block.push_back(std::move(blk));
  }
  check_spd_blocks(form);
  return form;
}

ProductSpaceForm build_c_form(const decomp::OverlapDecomposition& od,
                              double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw ConfigError("build_c_form: epsilon must be in (0, 1]");
  ProductSpaceForm form;
  form.layout = layout_closure(od);
  form.label = "c_eps";
  for (const auto& sd : od.sub) {
    const fem::DofMap lm = local_map(od, sd.closure_dofs);
    Matrix blk =
        Matrix(fem::assemble_stiffness(od.grid, sd.part_elements, lm, lm));
    const auto rest = overlap_remainder(sd);
    if (!rest.empty())
      blk += epsilon *
             Matrix(fem::assemble_stiffness(od.grid, rest, lm, lm));
    std::vector<int> mass_nodes(sd.boundary_dofs.size());
    for (size_t i = 0; i < sd.boundary_dofs.size(); ++i)
      mass_nodes[i] = od.dofs.nodes[sd.boundary_dofs[i]];
    blk += Matrix(
        fem::boundary_mass(od.grid, sd.overlap_elements, mass_nodes, lm));
    form.block.push_back(std::move(blk));
  }
  check_spd_blocks(form);
  return form;
}

std::pair<ProductSpaceForm, std::optional<ProductSpaceForm>> build_forms(
    const decomp::OverlapDecomposition& od, std::optional<double> epsilon) {
  std::optional<ProductSpaceForm> c;
  if (epsilon) c = build_c_form(od, *epsilon);
  return {build_b_form(od), std::move(c)};
}

LocalSolverBundle build_bundle(const decomp::OverlapDecomposition& od,
                               const decomp::CutFunctions& cuts) {
  LocalSolverBundle b;
  b.od = od;
  b.cuts = cuts;
  b.g_layout = layout_interior(od);
  b.ghat_layout = layout_closure(od);

  const fem::DofMap& free = od.dofs;
  b.a_sparse = fem::assemble_stiffness(od.grid, fem::all_elements(od.grid),
                                       free, free);
  b.a_dense = Matrix(b.a_sparse);
  b.a_solver = std::make_shared<linalg::SpdSolver>(b.a_dense);
  b.b_form = build_b_form(od);

  for (int l = 0; l < od.count(); ++l) {
    const auto& sd = od.sub[l];
    const fem::DofMap im = local_map(od, sd.interior_dofs);
    Matrix blk =
        Matrix(fem::assemble_stiffness(od.grid, sd.overlap_elements, im, im));
    b.dirichlet_solver.push_back(std::make_shared<linalg::SpdSolver>(blk));
    b.dirichlet_block.push_back(std::move(blk));
    b.neumann_part.push_back(
        fem::assemble_stiffness(od.grid, sd.part_elements, free, im));
    const auto rest = overlap_remainder(sd);
    SparseMatrix nov(free.size(), im.size());
    if (!rest.empty())
      nov = fem::assemble_stiffness(od.grid, rest, free, im);
    b.neumann_overlap.push_back(std::move(nov));

    Vector eta_i(sd.interior_dofs.size()), chi_i(sd.interior_dofs.size());
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i) {
      const int node = free.nodes[sd.interior_dofs[i]];
      eta_i[i] = cuts.eta[l][node];
      chi_i[i] = cuts.chi[l][node];
    }
    Vector eta_c(sd.closure_dofs.size());
    for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
      eta_c[i] = cuts.eta[l][free.nodes[sd.closure_dofs[i]]];
    b.eta_interior.push_back(std::move(eta_i));
    b.chi_interior.push_back(std::move(chi_i));
    b.eta_closure.push_back(std::move(eta_c));
  }
  return b;
}

Vector apply_ET(const LocalSolverBundle& b, const Vector& u) {
  if (u.size() != b.free_dof_count())
    throw DimensionMismatch("apply_ET: vector size");
  const Vector au = b.a_sparse * u;
  Vector out = Vector::Zero(b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    const Vector x = b.dirichlet_solver[l]->solve(gather(au, sd.interior_dofs));
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      out[b.ghat_layout.offset[l] + sd.interior_pos[i]] = x[i];
  }
  return out;
}

Vector apply_FT(const LocalSolverBundle& b, const Vector& u) {
  if (u.size() != b.free_dof_count())
    throw DimensionMismatch("apply_FT: vector size");
  Vector out = Vector::Zero(b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    const Vector rhs = b.neumann_part[l].transpose() * u;
    const Vector x = b.dirichlet_solver[l]->solve(rhs);
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      out[b.ghat_layout.offset[l] + sd.interior_pos[i]] = x[i];
  }
  return out;
}

Vector ghat_to_g(const LocalSolverBundle& b, const Vector& vhat) {
  Vector out(b.g_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      out[b.g_layout.offset[l] + i] =
          vhat[b.ghat_layout.offset[l] + sd.interior_pos[i]];
  }
  return out;
}

Vector g_to_ghat(const LocalSolverBundle& b, const Vector& v) {
  Vector out = Vector::Zero(b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      out[b.ghat_layout.offset[l] + sd.interior_pos[i]] =
          v[b.g_layout.offset[l] + i];
  }
  return out;
}

namespace {

// Throws unless the region-boundary entries of a closure-layout vector vanish.
void check_in_g(const LocalSolverBundle& b, const Vector& vhat) {
  if (vhat.size() != b.ghat_layout.dim())
    throw DimensionMismatch("apply_extension: vector size");
  const double scale = 1.0 + vhat.cwiseAbs().maxCoeff();
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    std::vector<bool> interior(sd.closure_dofs.size(), false);
    for (int p : sd.interior_pos) interior[p] = true;
    for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
      if (!interior[i] &&
          std::abs(vhat[b.ghat_layout.offset[l] + i]) > 1e-13 * scale)
        throw NotInG("apply_extension: nonzero value on a region boundary dof");
  }
}

}  // namespace

Vector apply_extension(const LocalSolverBundle& b, ExtensionKind kind,
                       const Vector& vhat, double epsilon) {
  check_in_g(b, vhat);
  Vector out = Vector::Zero(b.free_dof_count());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    Vector v(sd.interior_dofs.size());
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      v[i] = vhat[b.ghat_layout.offset[l] + sd.interior_pos[i]];
    switch (kind) {
      case ExtensionKind::kZero:
        for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
          out[sd.interior_dofs[i]] += v[i];
        break;
      case ExtensionKind::kHarmonic:
        out += b.neumann_part[l] * v;
        break;
      case ExtensionKind::kOverlap:
        out += b.neumann_overlap[l] * v;
        break;
      case ExtensionKind::kEpsilon:
        out += b.neumann_part[l] * v + epsilon * (b.neumann_overlap[l] * v);
        break;
    }
  }
  if (kind != ExtensionKind::kZero) out = b.a_solver->solve(out);
  return out;
}

Vector apply_preconditioned(const LocalSolverBundle& b, const Method& m,
                            const Vector& u) {
  switch (m.kind) {
    case MethodKind::kAs:
      return apply_extension(b, ExtensionKind::kZero, apply_ET(b, u));
    case MethodKind::kFeT:
      return apply_extension(b, ExtensionKind::kHarmonic, apply_ET(b, u));
    case MethodKind::kFepsT:
      return apply_extension(b, ExtensionKind::kEpsilon, apply_ET(b, u),
                             m.epsilon);
    case MethodKind::kEfT:
      return apply_extension(b, ExtensionKind::kZero, apply_FT(b, u));
    case MethodKind::kRasCut: {
      const Vector x = apply_ET(b, u);
      Vector out = Vector::Zero(b.free_dof_count());
      for (int l = 0; l < b.od.count(); ++l) {
        const auto& sd = b.od.sub[l];
        for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
          out[sd.interior_dofs[i]] +=
              b.eta_interior[l][i] *
              x[b.ghat_layout.offset[l] + sd.interior_pos[i]];
      }
      return out;
    }
    case MethodKind::kObddCut: {
      // Local Dirichlet solve against the cut-multiplied restricted residual.
      Vector out = Vector::Zero(b.free_dof_count());
      for (int l = 0; l < b.od.count(); ++l) {
        const auto& sd = b.od.sub[l];
        const Vector res =
            b.b_form.block[l] * gather(u, sd.closure_dofs);
        Vector rhs(sd.interior_dofs.size());
        for (size_t i = 0; i < sd.interior_pos.size(); ++i)
          rhs[i] = b.eta_closure[l][sd.interior_pos[i]] *
                   res[sd.interior_pos[i]];
        const Vector z = b.dirichlet_solver[l]->solve(rhs);
        for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
          out[sd.interior_dofs[i]] += z[i];
      }
      return out;
    }
  }
  throw Error("apply_preconditioned: unknown method");
}

Vector apply_equation(const LocalSolverBundle& b, const Method& m,
                      const Vector& u) {
  switch (m.kind) {
    case MethodKind::kAs:
    case MethodKind::kRasCut:
      return apply_preconditioned(b, m, u);
    case MethodKind::kFeT:
    case MethodKind::kFepsT: {
      const Vector x = apply_ET(b, u);
      Vector out = Vector::Zero(b.free_dof_count());
      for (int l = 0; l < b.od.count(); ++l) {
        const auto& sd = b.od.sub[l];
        Vector v(sd.interior_dofs.size());
        for (size_t i = 0; i < sd.interior_pos.size(); ++i)
          v[i] = x[b.ghat_layout.offset[l] + sd.interior_pos[i]];
        out += b.neumann_part[l] * v;
        if (m.kind == MethodKind::kFepsT)
          out += m.epsilon * (b.neumann_overlap[l] * v);
      }
      return out;
    }
    case MethodKind::kEfT:
    case MethodKind::kObddCut:
      return b.a_sparse * apply_preconditioned(b, m, u);
  }
  throw Error("apply_equation: unknown method");
}

Vector equation_rhs(const LocalSolverBundle& b, const Method& m,
                    const Vector& load) {
  switch (m.kind) {
    case MethodKind::kEfT:
    case MethodKind::kObddCut:
      return load;
    default:
      break;
  }
  // Local solves b_l x_l = E_l^T load, then the method's assembly.
  Vector xhat = Vector::Zero(b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    const Vector x =
        b.dirichlet_solver[l]->solve(gather(load, sd.interior_dofs));
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      xhat[b.ghat_layout.offset[l] + sd.interior_pos[i]] = x[i];
  }
  Vector out = Vector::Zero(b.free_dof_count());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    Vector v(sd.interior_dofs.size());
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      v[i] = xhat[b.ghat_layout.offset[l] + sd.interior_pos[i]];
    switch (m.kind) {
      case MethodKind::kAs:
        for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
          out[sd.interior_dofs[i]] += v[i];
        break;
      case MethodKind::kRasCut:
        for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
          out[sd.interior_dofs[i]] += b.eta_interior[l][i] * v[i];
        break;
      case MethodKind::kFeT:
        out += b.neumann_part[l] * v;
        break;
      case MethodKind::kFepsT:
        out += b.neumann_part[l] * v + m.epsilon * (b.neumann_overlap[l] * v);
        break;
      default:
        break;
    }
  }
  return out;
}

Vector equation_solution(const LocalSolverBundle& b, const Method& m,
                         const Vector& w) {
  if (m.kind == MethodKind::kEfT || m.kind == MethodKind::kObddCut)
    return apply_preconditioned(b, m, w);
  return w;
}

Matrix materialize(const LocalSolverBundle& b, const Method& m,
                   int dense_cap) {
  const int n = b.free_dof_count();
  if (n > dense_cap)
    throw DenseCapExceeded("materialize: free dof count exceeds dense cap");
  const bool needs_global_solve =
      m.kind == MethodKind::kFeT || m.kind == MethodKind::kFepsT;
  Matrix t(n, n);
  for (int j = 0; j < n; ++j) {
    Vector ej = Vector::Zero(n);
    ej[j] = 1.0;
    t.col(j) = needs_global_solve ? apply_equation(b, m, ej)
                                  : apply_preconditioned(b, m, ej);
  }
  if (needs_global_solve) t = b.a_solver->solve(t);
  return t;
}

Matrix extension_matrix(const LocalSolverBundle& b) {
  Matrix e = Matrix::Zero(b.free_dof_count(), b.g_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      e(sd.interior_dofs[i], b.g_layout.offset[l] + i) = 1.0;
  }
  return e;
}

Matrix interior_injection(const LocalSolverBundle& b) {
  Matrix j = Matrix::Zero(b.ghat_layout.dim(), b.g_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      j(b.ghat_layout.offset[l] + sd.interior_pos[i],
        b.g_layout.offset[l] + i) = 1.0;
  }
  return j;
}

Matrix projection_G_b(const LocalSolverBundle& b) {
  Matrix p = Matrix::Zero(b.ghat_layout.dim(), b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    const Matrix& bhat = b.b_form.block[l];
    Matrix rows(sd.interior_dofs.size(), bhat.cols());
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      rows.row(i) = bhat.row(sd.interior_pos[i]);
    const Matrix x = b.dirichlet_solver[l]->solve(rows);
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      p.block(b.ghat_layout.offset[l] + sd.interior_pos[i],
              b.ghat_layout.offset[l], 1, bhat.cols()) = x.row(i);
  }
  return p;
}

}  // namespace schwarzlab::ops
