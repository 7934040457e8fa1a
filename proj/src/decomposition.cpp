#include "schwarzlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace schwarzlab::decomp {

namespace {

bool boxes_intersect(const Subdomain& a, const Subdomain& b, int dim) {
  for (int ax = 0; ax < dim; ++ax) {
    if (a.overlap_hi[ax] < b.overlap_lo[ax] ||
        b.overlap_hi[ax] < a.overlap_lo[ax])
      return false;
  }
  return true;
}

// Chebyshev distance, in element layers, from a node to the closed node box
// of the nonoverlapping part.
int layer_distance(const Subdomain& s, std::array<int, 2> nc, int dim) {
  int d = 0;
  for (int ax = 0; ax < dim; ++ax) {
    const int lo = s.part_lo[ax];
    const int hi = s.part_hi[ax] + 1;
    if (nc[ax] < lo) d = std::max(d, lo - nc[ax]);
    if (nc[ax] > hi) d = std::max(d, nc[ax] - hi);
  }
  return d;
}

}  // namespace

OverlapDecomposition build_decomposition(const fem::StructuredGrid& grid,
                                         int blocks_per_side,
                                         int overlap_layers) {
  if (blocks_per_side < 1 || grid.cells_per_side % blocks_per_side != 0)
    throw IndivisibleBlocks(
        "build_decomposition: blocks_per_side must divide cells_per_side");
  if (overlap_layers < 1)
    throw Error("build_decomposition: overlap_layers must be at least 1");

  OverlapDecomposition od;
  od.grid = grid;
  od.dofs = fem::free_dofs(grid);
  od.blocks_per_side = blocks_per_side;
  od.overlap_layers = overlap_layers;
  od.overlap_width = overlap_layers * grid.h;

  const int s = grid.cells_per_side / blocks_per_side;
  const int nblocks_y = grid.dim == 2 ? blocks_per_side : 1;

  for (int by = 0; by < nblocks_y; ++by) {
    for (int bx = 0; bx < blocks_per_side; ++bx) {
      Subdomain sd;
      sd.part_lo = {bx * s, by * s};
      sd.part_hi = {bx * s + s - 1, by * s + s - 1};
      for (int ax = 0; ax < grid.dim; ++ax) {
        sd.overlap_lo[ax] = std::max(0, sd.part_lo[ax] - overlap_layers);
        sd.overlap_hi[ax] =
            std::min(grid.cells_per_side - 1, sd.part_hi[ax] + overlap_layers);
      }
      if (grid.dim == 1) {
        sd.part_lo[1] = sd.part_hi[1] = 0;
        sd.overlap_lo[1] = sd.overlap_hi[1] = 0;
      }
      sd.part_elements = grid.elements_in_box(sd.part_lo, sd.part_hi);
      sd.overlap_elements = grid.elements_in_box(sd.overlap_lo, sd.overlap_hi);
      if (static_cast<int>(sd.overlap_elements.size()) == grid.element_count())
        throw OverlapTooLarge(
            "build_decomposition: an overlapped region covers the whole domain");

      // Node bookkeeping over the closed overlap box.
      const int ny_hi = grid.dim == 2 ? sd.overlap_hi[1] + 1 : 0;
      for (int ny = sd.overlap_lo[1]; ny <= ny_hi; ++ny) {
        for (int nx = sd.overlap_lo[0]; nx <= sd.overlap_hi[0] + 1; ++nx) {
          const int node = grid.node_index(nx, ny);
          sd.closure_nodes.push_back(node);
          const int dof = od.dofs.dof_of(node);
          if (dof < 0) continue;  // domain boundary carries no dof
          sd.closure_dofs.push_back(dof);
          bool on_region_boundary = nx == sd.overlap_lo[0] ||
                                    nx == sd.overlap_hi[0] + 1;
          if (grid.dim == 2)
            on_region_boundary = on_region_boundary ||
                                 ny == sd.overlap_lo[1] ||
                                 ny == sd.overlap_hi[1] + 1;
          if (on_region_boundary) {
            sd.boundary_dofs.push_back(dof);
          } else {
            sd.interior_dofs.push_back(dof);
            sd.interior_pos.push_back(
                static_cast<int>(sd.closure_dofs.size()) - 1);
          }
        }
      }
      od.sub.push_back(std::move(sd));
    }
  }

  // Neighbors: regions that share at least one element (self included).
  for (int l = 0; l < od.count(); ++l) {
    for (int k = 0; k < od.count(); ++k)
      if (boxes_intersect(od.sub[l], od.sub[k], grid.dim))
        od.sub[l].neighbors.push_back(k);
    od.nu = std::max(od.nu, static_cast<int>(od.sub[l].neighbors.size()));
  }
  return od;
}

CutFunctions build_cut_functions(const OverlapDecomposition& od) {
  CutFunctions cf;
  const auto& grid = od.grid;
  const int n_nodes = grid.node_count();
  Vector eta_sum = Vector::Zero(n_nodes);
  for (const auto& sd : od.sub) {
    Vector eta = Vector::Zero(n_nodes);
    for (int node = 0; node < n_nodes; ++node) {
      const int d = layer_distance(sd, grid.node_coords(node), grid.dim);
      eta[node] = std::max(0.0, 1.0 - double(d) / od.overlap_layers);
    }
    eta_sum += eta;
    cf.eta.push_back(std::move(eta));
  }
  for (const auto& eta : cf.eta) {
    Vector chi(n_nodes);
    for (int node = 0; node < n_nodes; ++node) chi[node] = eta[node] / eta_sum[node];
    cf.chi.push_back(std::move(chi));
  }
  return cf;
}

double max_gradient(const fem::StructuredGrid& grid, const Vector& nodal) {
  double worst = 0.0;
  for (int e = 0; e < grid.element_count(); ++e) {
    const auto nodes = grid.element_nodes(e);
    if (grid.dim == 1) {
      worst = std::max(worst,
                       std::abs(nodal[nodes[1]] - nodal[nodes[0]]) / grid.h);
      continue;
    }
    const auto p0 = grid.node_position(nodes[0]);
    const auto p1 = grid.node_position(nodes[1]);
    const auto p2 = grid.node_position(nodes[2]);
    const double x1 = p1[0] - p0[0], y1 = p1[1] - p0[1];
    const double x2 = p2[0] - p0[0], y2 = p2[1] - p0[1];
    const double det = x1 * y2 - x2 * y1;
    const double v1 = nodal[nodes[1]] - nodal[nodes[0]];
    const double v2 = nodal[nodes[2]] - nodal[nodes[0]];
    const double gx = (v1 * y2 - v2 * y1) / det;
    const double gy = (v2 * x1 - v1 * x2) / det;
    worst = std::max(worst, std::hypot(gx, gy));
  }
  return worst;
}

RestrictionOps restriction_ops(const OverlapDecomposition& od) {
  RestrictionOps ops;
  const int n = od.dofs.size();
  std::vector<Eigen::Triplet<double>> stacked;
  int offset = 0;
  for (const auto& sd : od.sub) {
    std::vector<Eigen::Triplet<double>> tr, te;
    for (int i = 0; i < static_cast<int>(sd.closure_dofs.size()); ++i) {
      tr.emplace_back(i, sd.closure_dofs[i], 1.0);
      stacked.emplace_back(offset + i, sd.closure_dofs[i], 1.0);
    }
    for (int i = 0; i < static_cast<int>(sd.interior_dofs.size()); ++i)
      te.emplace_back(sd.interior_dofs[i], i, 1.0);
    SparseMatrix r(sd.closure_dofs.size(), n);
    r.setFromTriplets(tr.begin(), tr.end());
    SparseMatrix e(n, sd.interior_dofs.size());
    e.setFromTriplets(te.begin(), te.end());
    ops.restrict_closure.push_back(std::move(r));
    ops.extend_interior.push_back(std::move(e));
    offset += static_cast<int>(sd.closure_dofs.size());
  }
  ops.stacked_restriction.resize(offset, n);
  ops.stacked_restriction.setFromTriplets(stacked.begin(), stacked.end());
  return ops;
}

}  // namespace schwarzlab::decomp
