#pragma once

#include <array>
#include <functional>
#include <vector>

#include "schwarzlab/types.hpp"

namespace schwarzlab::fem {

/// Uniform P1 mesh of the unit interval or unit square. In 2D every cell is
/// split into two triangles along the same diagonal (lower-left to
/// upper-right).
struct StructuredGrid {
  int dim = 1;
  int cells_per_side = 0;
  double h = 0.0;

  int nodes_per_side() const { return cells_per_side + 1; }
  int node_count() const;
  int element_count() const;

  /// Vertex node ids of an element; in 1D the third entry is -1.
  std::array<int, 3> element_nodes(int element) const;
  /// Area (2D) or length (1D) of an element.
  double element_measure() const;

  int node_index(int nx, int ny = 0) const;
  std::array<int, 2> node_coords(int node) const;
  std::array<double, 2> node_position(int node) const;
  bool node_on_boundary(int node) const;
  std::vector<int> boundary_nodes() const;

  /// Element ids of all elements whose cells lie in the inclusive cell box
  /// [lo, hi] per axis (1D ignores the second axis).
  std::vector<int> elements_in_box(std::array<int, 2> lo,
                                   std::array<int, 2> hi) const;
};

StructuredGrid build_grid(int dim, int cells_per_side);

/// Ordered subset of grid nodes acting as degrees of freedom.
struct DofMap {
  std::vector<int> nodes;        // dof -> node
  std::vector<int> node_to_dof;  // node -> dof, -1 when absent

  int size() const { return static_cast<int>(nodes.size()); }
  int dof_of(int node) const { return node_to_dof[node]; }
};

/// All nodes not on the domain boundary.
DofMap free_dofs(const StructuredGrid& grid);
DofMap dofs_for_nodes(const StructuredGrid& grid, const std::vector<int>& nodes);

std::vector<int> all_elements(const StructuredGrid& grid);

/// Stiffness of the gradient form integrated over `elements` only, with P1
/// hat functions, between the two dof sets. Restricting the element set
/// restricts the integration region exactly.
SparseMatrix assemble_stiffness(const StructuredGrid& grid,
                                const std::vector<int>& elements,
                                const DofMap& rows, const DofMap& cols);

/// Nodes on the topological boundary of the region spanned by `elements`.
std::vector<int> region_boundary_nodes(const StructuredGrid& grid,
                                       const std::vector<int>& elements);

/// Lumped (diagonal) boundary mass for the region boundary: weight 1 per
/// point in 1D, half the total length of incident boundary edges in 2D.
/// Rows for dofs outside `mass_nodes` stay zero. Every node in `mass_nodes`
/// must lie on the region boundary.
SparseMatrix boundary_mass(const StructuredGrid& grid,
                           const std::vector<int>& region_elements,
                           const std::vector<int>& mass_nodes,
                           const DofMap& dofs);

/// Load vector of a constant right-hand side f over the whole domain.
Vector load_vector(const StructuredGrid& grid, double f, const DofMap& dofs);

/// Nodal interpolation of a callable (x, y) -> value onto a dof set.
Vector interpolate(const StructuredGrid& grid, const DofMap& dofs,
                   const std::function<double(double, double)>& fn);

}  // namespace schwarzlab::fem
