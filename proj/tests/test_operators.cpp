#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "schwarzlab/operators.hpp"

using namespace schwarzlab;

namespace {

struct Stack {
  fem::StructuredGrid grid;
  decomp::OverlapDecomposition od;
  decomp::CutFunctions cuts;
  ops::LocalSolverBundle bundle;
};

Stack make_stack(int dim, int cells, int blocks, int layers) {
  Stack s;
  s.grid = fem::build_grid(dim, cells);
  s.od = decomp::build_decomposition(s.grid, blocks, layers);
  s.cuts = decomp::build_cut_functions(s.od);
  s.bundle = ops::build_bundle(s.od, s.cuts);
  return s;
}

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Random product-space vector supported on the interior dofs.
Vector random_g_vector(const ops::LocalSolverBundle& b, std::mt19937_64& rng) {
  Vector vhat = Vector::Zero(b.ghat_layout.dim());
  std::normal_distribution<double> g;
  for (int l = 0; l < b.od.count(); ++l)
    for (int p : b.od.sub[l].interior_pos)
      vhat[b.ghat_layout.offset[l] + p] = g(rng);
  return vhat;
}

// Nodal multiplication of a global function by per-subdomain weights,
// packed into the closure layout.
Vector weighted_hat(const ops::LocalSolverBundle& b,
                    const std::vector<Vector>& nodal_weights,
                    const Vector& u) {
  Vector vhat = Vector::Zero(b.ghat_layout.dim());
  for (int l = 0; l < b.od.count(); ++l) {
    const auto& sd = b.od.sub[l];
    for (size_t i = 0; i < sd.interior_pos.size(); ++i) {
      const int dof = sd.interior_dofs[i];
      vhat[b.ghat_layout.offset[l] + sd.interior_pos[i]] =
          nodal_weights[l][b.od.dofs.nodes[dof]] * u[dof];
    }
  }
  return vhat;
}

}  // namespace

TEST_CASE("forms: epsilon = 1 reproduces the region-additive b blocks") {
  const auto s = make_stack(1, 16, 4, 1);
  const auto b = ops::build_b_form(s.od);
  const auto c1 = ops::build_c_form(s.od, 1.0);
  for (int l = 0; l < s.od.count(); ++l)
    CHECK((b.block[l] - c1.block[l]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forms: c_eps never exceeds b on the interior subspace") {
  const auto s = make_stack(1, 16, 4, 2);
  const auto b = ops::build_b_form(s.od);
  std::mt19937_64 rng(41);
  for (double eps : {0.5, 0.1, 0.02}) {
    const auto c = ops::build_c_form(s.od, eps);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector v = random_g_vector(s.bundle, rng);
      CHECK(c.dot(v, v) <= b.dot(v, v) * (1 + 1e-12));
    }
  }
}

TEST_CASE("forms: blocks match an independent per-element accumulation") {
  const auto s = make_stack(1, 16, 4, 1);
  const double eps = 0.5;
  const auto c = ops::build_c_form(s.od, eps);
  const auto& grid = s.grid;
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    const int m = static_cast<int>(sd.closure_dofs.size());
    Matrix expect = Matrix::Zero(m, m);
    std::map<int, int> node_to_local;
    for (int i = 0; i < m; ++i)
      node_to_local[s.od.dofs.nodes[sd.closure_dofs[i]]] = i;
    const std::set<int> part(sd.part_elements.begin(), sd.part_elements.end());
    for (int e : sd.overlap_elements) {
      const double w = part.count(e) ? 1.0 : eps;
      const auto nodes = grid.element_nodes(e);
      const double k = 1.0 / grid.h;
      const int local[2] = {node_to_local.count(nodes[0])
                                ? node_to_local[nodes[0]]
                                : -1,
                            node_to_local.count(nodes[1])
                                ? node_to_local[nodes[1]]
                                : -1};
      const double stencil[2][2] = {{k, -k}, {-k, k}};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          if (local[i] >= 0 && local[j] >= 0)
            expect(local[i], local[j]) += w * stencil[i][j];
    }
    // Boundary mass: weight one on each in-domain region endpoint.
    for (int d : sd.boundary_dofs)
      expect(node_to_local[s.od.dofs.nodes[d]] ,
             node_to_local[s.od.dofs.nodes[d]]) += 1.0;
    CHECK((c.block[l] - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forms: boundary mass contributes nothing on the interior block") {
  const auto s = make_stack(2, 8, 2, 1);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    const auto& bhat = s.bundle.b_form.block[l];
    for (size_t i = 0; i < sd.interior_pos.size(); ++i)
      for (size_t j = 0; j < sd.interior_pos.size(); ++j)
        CHECK(bhat(sd.interior_pos[i], sd.interior_pos[j]) ==
              doctest::Approx(s.bundle.dirichlet_block[l](i, j))
                  .epsilon(1e-13));
  }
}

TEST_CASE("apply_ET: zero maps to zero, dense composition oracle agrees") {
  const auto s = make_stack(1, 16, 2, 1);
  const int n = s.bundle.free_dof_count();
  CHECK(ops::apply_ET(s.bundle, Vector::Zero(n)).cwiseAbs().maxCoeff() == 0);

  // Dense oracle: sum of E_l B_l^{-1} E_l^T A.
  Matrix oracle = Matrix::Zero(n, n);
  const Matrix a = s.bundle.a_dense;
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    Matrix e = Matrix::Zero(n, sd.interior_dofs.size());
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      e(sd.interior_dofs[i], i) = 1.0;
    const Matrix binv_eta =
        s.bundle.dirichlet_solver[l]->solve((e.transpose() * a).eval());
    oracle += e * binv_eta;
  }
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector u = random_vector(n, rng);
    const Vector via_op = ops::apply_extension(s.bundle, ops::ExtensionKind::kZero,
                                               ops::apply_ET(s.bundle, u));
    CHECK((via_op - oracle * u).cwiseAbs().maxCoeff() <
          1e-10 * (1 + u.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("apply_ET vanishes on functions harmonic inside the region") {
  const auto s = make_stack(1, 32, 4, 2);
  // A u = e_j with j outside the closure of subdomain 0.
  const int n = s.bundle.free_dof_count();
  const std::set<int> closure(s.od.sub[0].closure_dofs.begin(),
                              s.od.sub[0].closure_dofs.end());
  int j = -1;
  for (int d = 0; d < n; ++d)
    if (!closure.count(d)) {
      j = d;
      break;
    }
  REQUIRE(j >= 0);
  Vector ej = Vector::Zero(n);
  ej[j] = 1.0;
  const Vector u = s.bundle.a_solver->solve(ej);
  const Vector xhat = ops::apply_ET(s.bundle, u);
  for (int p = 0; p < s.bundle.ghat_layout.block_size(0); ++p)
    CHECK(std::abs(xhat[p]) < 1e-12);
}

TEST_CASE("apply_FT: zero, hand-solved interior subdomain, global additivity") {
  const auto s = make_stack(1, 8, 4, 1);
  const int n = s.bundle.free_dof_count();
  CHECK(ops::apply_FT(s.bundle, Vector::Zero(n)).cwiseAbs().maxCoeff() == 0);

  // Interpolant of x on the free dofs; subdomain 1 covers cells [2, 3].
  Vector u(n);
  for (int d = 0; d < n; ++d) u[d] = (d + 1) * s.grid.h;
  const Vector what = ops::apply_FT(s.bundle, u);
  const auto& sd = s.od.sub[1];
  REQUIRE(sd.interior_dofs.size() == 3);
  const int off = s.bundle.ghat_layout.offset[1];
  CHECK(what[off + sd.interior_pos[0]] == doctest::Approx(-1.0 / 16));
  CHECK(what[off + sd.interior_pos[1]] == doctest::Approx(0.0));
  CHECK(what[off + sd.interior_pos[2]] == doctest::Approx(1.0 / 16));

  // The part regions tile the domain: scattering the local right-hand sides
  // reassembles the global stiffness action.
  std::mt19937_64 rng(47);
  const Vector v = random_vector(n, rng);
  Vector assembled = Vector::Zero(n);
  for (int l = 0; l < s.od.count(); ++l) {
    const Vector local = s.bundle.neumann_part[l].transpose() * v;
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      assembled[sd.interior_dofs[i]] += local[i];
  }
  const Vector au = s.bundle.a_sparse * v;
  CHECK((assembled - au).cwiseAbs().maxCoeff() < 1e-10 * (1 + au.cwiseAbs().maxCoeff()));
}

TEST_CASE("extensions: partition of unity and the stable right inverse") {
  for (auto [dim, cells, blocks, layers] :
       {std::array<int, 4>{1, 32, 4, 2}, std::array<int, 4>{2, 16, 2, 1}}) {
    const auto s = make_stack(dim, cells, blocks, layers);
    std::mt19937_64 rng(53);
    const int n = s.bundle.free_dof_count();
    for (int trial = 0; trial < 5; ++trial) {
      const Vector u = random_vector(n, rng);
      const Vector via_chi = ops::apply_extension(
          s.bundle, ops::ExtensionKind::kZero,
          weighted_hat(s.bundle, s.cuts.chi, u));
      CHECK((via_chi - u).cwiseAbs().maxCoeff() < 1e-12 * (1 + u.cwiseAbs().maxCoeff()));

      const Vector via_eta = ops::apply_extension(
          s.bundle, ops::ExtensionKind::kHarmonic,
          weighted_hat(s.bundle, s.cuts.eta, u));
      const double ua = std::sqrt(u.dot(s.bundle.a_sparse * u));
      const Vector diff = via_eta - u;
      CHECK(std::sqrt(diff.dot(s.bundle.a_sparse * diff)) <= 1e-10 * ua);
    }
  }
}

TEST_CASE("harmonic extension is nonexpansive from the product norm") {
  const auto s = make_stack(1, 32, 4, 2);
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector vhat = random_g_vector(s.bundle, rng);
    const Vector fv =
        ops::apply_extension(s.bundle, ops::ExtensionKind::kHarmonic, vhat);
    const double lhs = std::sqrt(fv.dot(s.bundle.a_sparse * fv));
    const double rhs = std::sqrt(s.bundle.b_form.dot(vhat, vhat));
    CHECK(lhs <= rhs * (1 + 1e-10));
  }
}

TEST_CASE("apply_extension rejects vectors with boundary values") {
  const auto s = make_stack(1, 16, 4, 1);
  Vector vhat = Vector::Zero(s.bundle.ghat_layout.dim());
  // First closure dof of subdomain 1 is a region-boundary dof.
  const auto& sd = s.od.sub[1];
  std::set<int> interior(sd.interior_pos.begin(), sd.interior_pos.end());
  int pos = -1;
  for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
    if (!interior.count(int(i))) {
      pos = int(i);
      break;
    }
  REQUIRE(pos >= 0);
  vhat[s.bundle.ghat_layout.offset[1] + pos] = 1.0;
  CHECK_THROWS_AS(
      ops::apply_extension(s.bundle, ops::ExtensionKind::kZero, vhat), NotInG);
}

TEST_CASE("zero-extension wiring identity against the abstract transpose") {
  for (auto [dim, cells, blocks, layers] :
       {std::array<int, 4>{1, 16, 4, 1}, std::array<int, 4>{2, 8, 2, 1}}) {
    const auto s = make_stack(dim, cells, blocks, layers);
    const Matrix e = ops::extension_matrix(s.bundle);
    const Matrix j = ops::interior_injection(s.bundle);
    const Matrix bhat = s.bundle.b_form.assemble();
    Matrix rd = Matrix::Zero(s.bundle.ghat_layout.dim(), s.bundle.free_dof_count());
    for (int l = 0; l < s.od.count(); ++l) {
      const auto& sd = s.od.sub[l];
      for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
        rd(s.bundle.ghat_layout.offset[l] + i, sd.closure_dofs[i]) = 1.0;
    }
    const Matrix abstract =
        s.bundle.a_solver->solve((rd.transpose() * bhat * j).eval());
    CHECK((abstract - e).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("local transpose equals the projected restriction") {
  const auto s = make_stack(1, 16, 4, 1);
  const int n = s.bundle.free_dof_count();
  const Matrix proj = ops::projection_G_b(s.bundle);
  Matrix rd = Matrix::Zero(s.bundle.ghat_layout.dim(), n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
      rd(s.bundle.ghat_layout.offset[l] + i, sd.closure_dofs[i]) = 1.0;
  }
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector u = random_vector(n, rng);
    const Vector lhs = ops::apply_ET(s.bundle, u);
    const Vector rhs = proj * (rd * u);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9 * (1 + u.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("methods: symmetric method is nonnegative and a-self-adjoint") {
  const auto s = make_stack(1, 8, 2, 3);  // generous overlap
  const ops::Method as{ops::MethodKind::kAs, 0.0};
  std::mt19937_64 rng(67);
  const int n = s.bundle.free_dof_count();
  for (int trial = 0; trial < 10; ++trial) {
    const Vector u = random_vector(n, rng);
    const Vector pu = ops::apply_preconditioned(s.bundle, as, u);
    CHECK(u.dot(s.bundle.a_sparse * pu) >= -1e-12);
  }
  const Matrix t = ops::materialize(s.bundle, as);
  const Matrix at = s.bundle.a_dense * t;
  CHECK((at - at.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("methods: restricted equation operator matches the dense oracle") {
  const auto s = make_stack(1, 16, 4, 1);
  const int n = s.bundle.free_dof_count();
  Matrix oracle = Matrix::Zero(n, n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    Matrix e = Matrix::Zero(n, sd.interior_dofs.size());
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      e(sd.interior_dofs[i], i) = 1.0;
    oracle += Matrix(s.bundle.neumann_part[l]) *
              s.bundle.dirichlet_solver[l]->solve(
                  (e.transpose() * s.bundle.a_dense).eval());
  }
  const ops::Method fet{ops::MethodKind::kFeT, 0.0};
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = random_vector(n, rng);
    const Vector got = ops::apply_equation(s.bundle, fet, u);
    CHECK((got - oracle * u).cwiseAbs().maxCoeff() <
          1e-10 * (1 + (oracle * u).cwiseAbs().maxCoeff()));
  }
  // Two-route construction of the method operator itself.
  const Matrix t = ops::materialize(s.bundle, fet);
  const Matrix route2 = s.bundle.a_solver->solve(oracle);
  CHECK((t - route2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("methods: cut-multiplied variants") {
  const auto s = make_stack(1, 16, 4, 1);
  const int n = s.bundle.free_dof_count();
  std::mt19937_64 rng(73);

  // The two local solve routes for the cut-residual method agree.
  const ops::Method obdd{ops::MethodKind::kObddCut, 0.0};
  for (int trial = 0; trial < 10; ++trial) {
    const Vector u = random_vector(n, rng);
    const Vector got = ops::apply_preconditioned(s.bundle, obdd, u);
    Vector expect = Vector::Zero(n);
    const Vector au = s.bundle.a_sparse * u;
    for (int l = 0; l < s.od.count(); ++l) {
      const auto& sd = s.od.sub[l];
      Vector rhs(sd.interior_dofs.size());
      for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
        rhs[i] = s.bundle.eta_interior[l][i] * au[sd.interior_dofs[i]];
      const Vector z = s.bundle.dirichlet_solver[l]->solve(rhs);
      for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
        expect[sd.interior_dofs[i]] += z[i];
    }
    CHECK((got - expect).cwiseAbs().maxCoeff() <
          1e-10 * (1 + expect.cwiseAbs().maxCoeff()));
  }

  // The cut-multiplication method is the a-adjoint of the cut-residual one.
  const ops::Method ras{ops::MethodKind::kRasCut, 0.0};
  const Matrix t_ras = ops::materialize(s.bundle, ras);
  const Matrix t_obdd = ops::materialize(s.bundle, obdd);
  const Matrix lhs = s.bundle.a_dense * t_ras;
  const Matrix rhs = (s.bundle.a_dense * t_obdd).transpose();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);

  // With the partition of unity as multiplier, applying the assembly to
  // blockwise constants reproduces the constant.
  auto cuts_chi = s.cuts;
  cuts_chi.eta = cuts_chi.chi;
  const auto bundle_chi = ops::build_bundle(s.od, cuts_chi);
  Vector ones_hat = Vector::Zero(bundle_chi.ghat_layout.dim());
  for (int l = 0; l < s.od.count(); ++l)
    for (int p : s.od.sub[l].interior_pos)
      ones_hat[bundle_chi.ghat_layout.offset[l] + p] = 1.0;
  Vector assembled = Vector::Zero(n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      assembled[sd.interior_dofs[i]] +=
          bundle_chi.eta_interior[l][i] *
          ones_hat[bundle_chi.ghat_layout.offset[l] + sd.interior_pos[i]];
  }
  CHECK((assembled - Vector::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("methods: epsilon-perturbed operator pairs with the c form") {
  const auto s = make_stack(1, 32, 4, 2);
  const int n = s.bundle.free_dof_count();
  const double eps = 0.1;
  const auto c = ops::build_c_form(s.od, eps);
  const Matrix proj = ops::projection_G_b(s.bundle);
  Matrix rd = Matrix::Zero(s.bundle.ghat_layout.dim(), n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.closure_dofs.size(); ++i)
      rd(s.bundle.ghat_layout.offset[l] + i, sd.closure_dofs[i]) = 1.0;
  }
  const ops::Method feps{ops::MethodKind::kFepsT, eps};
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector u = random_vector(n, rng);
    const double lhs =
        u.dot(s.bundle.a_sparse * ops::apply_preconditioned(s.bundle, feps, u));
    const Vector ru = rd * u;
    const double rhs = (proj * ru).dot(c.apply(ru));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("materialize: linearity, projector identity, stable inverses") {
  const auto s = make_stack(1, 32, 4, 2);
  const int n = s.bundle.free_dof_count();
  std::mt19937_64 rng(83);

  const ops::Method ras{ops::MethodKind::kRasCut, 0.0};
  const Matrix t = ops::materialize(s.bundle, ras);
  const Vector u = random_vector(n, rng), v = random_vector(n, rng);
  const Vector lin = ops::apply_preconditioned(s.bundle, ras, (2.0 * u - 3.0 * v).eval());
  CHECK((lin - (2.0 * t * u - 3.0 * t * v)).cwiseAbs().maxCoeff() < 1e-12 * lin.cwiseAbs().maxCoeff() + 1e-12);

  // Q_E = Ehat E is a projection.
  const Matrix e = ops::extension_matrix(s.bundle);
  Matrix ehat = Matrix::Zero(s.bundle.g_layout.dim(), n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      ehat(s.bundle.g_layout.offset[l] + i, sd.interior_dofs[i]) =
          s.bundle.chi_interior[l][i];
  }
  const Matrix qe = ehat * e;
  CHECK((qe * qe - qe).cwiseAbs().maxCoeff() < 1e-10);

  // F Fhat = I and the eps-perturbed right inverse for small eps.
  Matrix fhat = Matrix::Zero(s.bundle.g_layout.dim(), n);
  for (int l = 0; l < s.od.count(); ++l) {
    const auto& sd = s.od.sub[l];
    for (size_t i = 0; i < sd.interior_dofs.size(); ++i)
      fhat(s.bundle.g_layout.offset[l] + i, sd.interior_dofs[i]) =
          s.bundle.eta_interior[l][i];
  }
  Matrix k_part = Matrix::Zero(n, s.bundle.g_layout.dim());
  Matrix k_over = Matrix::Zero(n, s.bundle.g_layout.dim());
  for (int l = 0; l < s.od.count(); ++l) {
    k_part.middleCols(s.bundle.g_layout.offset[l],
                      s.bundle.neumann_part[l].cols()) =
        Matrix(s.bundle.neumann_part[l]);
    k_over.middleCols(s.bundle.g_layout.offset[l],
                      s.bundle.neumann_overlap[l].cols()) =
        Matrix(s.bundle.neumann_overlap[l]);
  }
  const Matrix f0 = s.bundle.a_solver->solve(k_part);
  CHECK((f0 * fhat - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  for (double eps : {0.1, 0.02}) {
    const Matrix feps = s.bundle.a_solver->solve((k_part + eps * k_over).eval());
    const Matrix twist = feps * fhat;
    const Matrix fhat_eps = fhat * twist.partialPivLu().inverse();
    CHECK((feps * fhat_eps - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("materialize respects the dense cap") {
  const auto s = make_stack(1, 16, 4, 1);
  CHECK_THROWS_AS(
      ops::materialize(s.bundle, ops::Method{ops::MethodKind::kAs, 0.0}, 4),
      DenseCapExceeded);
}

TEST_CASE("equation forms are consistent with the direct solution") {
  const auto s = make_stack(1, 32, 4, 2);
  const Vector load = fem::load_vector(s.grid, 1.0, s.od.dofs);
  const Vector direct = s.bundle.a_solver->solve(load);
  for (auto kind :
       {ops::MethodKind::kAs, ops::MethodKind::kFeT, ops::MethodKind::kEfT,
        ops::MethodKind::kRasCut, ops::MethodKind::kObddCut,
        ops::MethodKind::kFepsT}) {
    ops::Method m{kind, kind == ops::MethodKind::kFepsT ? 0.1 : 0.0};
    // The Krylov unknown w solves equation(w) = rhs; for the direct route,
    // w is the direct solution itself unless a recovery step is involved.
    Vector w = direct;
    if (kind == ops::MethodKind::kEfT || kind == ops::MethodKind::kObddCut) {
      // w solves T w = direct; build it densely.
      const Matrix t = ops::materialize(s.bundle, m);
      w = t.partialPivLu().solve(direct);
    }
    const Vector lhs = ops::apply_equation(s.bundle, m, w);
    const Vector rhs = ops::equation_rhs(s.bundle, m, load);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <
          1e-9 * (1 + rhs.cwiseAbs().maxCoeff()));
    const Vector u = ops::equation_solution(s.bundle, m, w);
    CHECK((u - direct).cwiseAbs().maxCoeff() <
          1e-8 * (1 + direct.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("gmres residuals match a dense Arnoldi oracle on the symmetric method") {
  const auto s = make_stack(1, 32, 4, 2);
  const int n = s.bundle.free_dof_count();
  const ops::Method as{ops::MethodKind::kAs, 0.0};
  const Matrix t = ops::materialize(s.bundle, as);
  const Vector rhs = ops::equation_rhs(s.bundle, as,
                                       fem::load_vector(s.grid, 1.0, s.od.dofs));

  const auto apply = [&](const Vector& v) { return Vector(t * v); };
  const auto rep = linalg::gmres(apply, rhs, 1e-12, 60, 60);
  REQUIRE(rep.converged);

  // Independent dense Arnoldi oracle with per-step least squares.
  const double beta = rhs.norm();
  std::vector<Vector> basis{rhs / beta};
  Matrix hess = Matrix::Zero(rep.iterations + 1, rep.iterations);
  for (int j = 0; j < rep.iterations; ++j) {
    Vector w = t * basis[j];
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const double hij = basis[i].dot(w);
        hess(i, j) += hij;
        w -= hij * basis[i];
      }
    hess(j + 1, j) = w.norm();
    Vector g = Vector::Zero(j + 2);
    g[0] = beta;
    const Matrix hj = hess.topLeftCorner(j + 2, j + 1);
    const Vector y = hj.colPivHouseholderQr().solve(g);
    const double oracle_res = (g - hj * y).norm();
    CHECK(std::abs(rep.residual_history[j] - oracle_res) < 1e-8 * beta);
    if (hess(j + 1, j) <= 1e-14 * beta) break;
    basis.push_back(w / hess(j + 1, j));
  }
}
