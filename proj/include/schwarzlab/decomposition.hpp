#pragma once

#include <array>
#include <vector>

#include "schwarzlab/fem.hpp"
#include "schwarzlab/types.hpp"

namespace schwarzlab::decomp {

/// One subdomain of a box decomposition: the nonoverlapping part D and the
/// overlapped region O obtained by growing D a fixed number of element
/// layers (clipped to the domain). Dof lists are indices into the global
/// free-dof map; nodes on the domain boundary never carry dofs.
struct Subdomain {
  std::array<int, 2> part_lo{}, part_hi{};        // cell box of D (inclusive)
  std::array<int, 2> overlap_lo{}, overlap_hi{};  // cell box of O
  std::vector<int> part_elements;
  std::vector<int> overlap_elements;
  std::vector<int> closure_nodes;  // all nodes of O's elements
  std::vector<int> closure_dofs;   // closure nodes that are free dofs
  std::vector<int> interior_dofs;  // closure minus region boundary
  std::vector<int> boundary_dofs;  // region boundary inside the domain
  std::vector<int> interior_pos;   // position of each interior dof in closure_dofs
  std::vector<int> neighbors;      // subdomain ids, self included
};

struct OverlapDecomposition {
  fem::StructuredGrid grid;
  fem::DofMap dofs;  // global free dofs
  int blocks_per_side = 0;
  int overlap_layers = 0;
  double overlap_width = 0.0;  // layers * h
  int nu = 0;                  // max neighbor count
  std::vector<Subdomain> sub;

  int count() const { return static_cast<int>(sub.size()); }
};

/// Splits the grid into equal blocks per side and grows each by
/// `overlap_layers` element layers. Throws IndivisibleBlocks when the block
/// count does not divide the cell count, OverlapTooLarge when some
/// overlapped region swallows the whole domain.
OverlapDecomposition build_decomposition(const fem::StructuredGrid& grid,
                                         int blocks_per_side,
                                         int overlap_layers);

/// Cut functions eta (1 on the closed part, linear decay to 0 over the
/// overlap layers, 0 outside the region) and the partition of unity
/// chi = eta / sum(eta), both as nodal vectors over all grid nodes.
struct CutFunctions {
  std::vector<Vector> eta;
  std::vector<Vector> chi;
};

CutFunctions build_cut_functions(const OverlapDecomposition& od);

/// Max P1 gradient magnitude of a nodal function over all elements.
double max_gradient(const fem::StructuredGrid& grid, const Vector& nodal);

/// 0/1 selection and injection matrices over the global free dofs.
struct RestrictionOps {
  std::vector<SparseMatrix> restrict_closure;  // global -> local closure values
  std::vector<SparseMatrix> extend_interior;   // local interior -> global, zero outside
  SparseMatrix stacked_restriction;            // all closures stacked
};

RestrictionOps restriction_ops(const OverlapDecomposition& od);

}  // namespace schwarzlab::decomp
