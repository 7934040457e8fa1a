#include "schwarzlab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace schwarzlab::fem {

int StructuredGrid::node_count() const {
  const int nps = nodes_per_side();
  return dim == 1 ? nps : nps * nps;
}

int StructuredGrid::element_count() const {
  return dim == 1 ? cells_per_side : 2 * cells_per_side * cells_per_side;
}

std::array<int, 3> StructuredGrid::element_nodes(int element) const {
  if (dim == 1) return {element, element + 1, -1};
  const int cell = element / 2;
  const int cx = cell % cells_per_side;
  const int cy = cell / cells_per_side;
  const int a = node_index(cx, cy);
  const int b = node_index(cx + 1, cy);
  const int c = node_index(cx, cy + 1);
  const int d = node_index(cx + 1, cy + 1);
  // Split along the a-d diagonal.
  if (element % 2 == 0) return {a, b, d};
  return {a, d, c};
}

double StructuredGrid::element_measure() const {
  return dim == 1 ? h : 0.5 * h * h;
}

int StructuredGrid::node_index(int nx, int ny) const {
  return dim == 1 ? nx : ny * nodes_per_side() + nx;
}

std::array<int, 2> StructuredGrid::node_coords(int node) const {
  if (dim == 1) return {node, 0};
  return {node % nodes_per_side(), node / nodes_per_side()};
}

std::array<double, 2> StructuredGrid::node_position(int node) const {
  const auto c = node_coords(node);
  return {c[0] * h, c[1] * h};
}

bool StructuredGrid::node_on_boundary(int node) const {
  const auto c = node_coords(node);
  if (c[0] == 0 || c[0] == cells_per_side) return true;
  return dim == 2 && (c[1] == 0 || c[1] == cells_per_side);
}

std::vector<int> StructuredGrid::boundary_nodes() const {
  std::vector<int> out;
  for (int n = 0; n < node_count(); ++n)
    if (node_on_boundary(n)) out.push_back(n);
  return out;
}

std::vector<int> StructuredGrid::elements_in_box(std::array<int, 2> lo,
                                                 std::array<int, 2> hi) const {
  std::vector<int> out;
  if (dim == 1) {
    for (int cx = lo[0]; cx <= hi[0]; ++cx) out.push_back(cx);
    return out;
  }
  for (int cy = lo[1]; cy <= hi[1]; ++cy)
    for (int cx = lo[0]; cx <= hi[0]; ++cx) {
      const int cell = cy * cells_per_side + cx;
      out.push_back(2 * cell);
      out.push_back(2 * cell + 1);
    }
  return out;
}

StructuredGrid build_grid(int dim, int cells_per_side) {
  if (dim != 1 && dim != 2) throw Error("build_grid: dim must be 1 or 2");
  if (cells_per_side < 4)
    throw TooCoarse("build_grid: need at least 4 cells per side");
  StructuredGrid g;
  g.dim = dim;
  g.cells_per_side = cells_per_side;
  g.h = 1.0 / cells_per_side;
  return g;
}

DofMap free_dofs(const StructuredGrid& grid) {
  std::vector<int> nodes;
  for (int n = 0; n < grid.node_count(); ++n)
    if (!grid.node_on_boundary(n)) nodes.push_back(n);
  return dofs_for_nodes(grid, nodes);
}

DofMap dofs_for_nodes(const StructuredGrid& grid, const std::vector<int>& nodes) {
  DofMap m;
  m.nodes = nodes;
  m.node_to_dof.assign(grid.node_count(), -1);
  for (int d = 0; d < static_cast<int>(nodes.size()); ++d) {
    if (nodes[d] < 0 || nodes[d] >= grid.node_count())
      throw DimensionMismatch("dofs_for_nodes: node out of range");
    m.node_to_dof[nodes[d]] = d;
  }
  return m;
}

std::vector<int> all_elements(const StructuredGrid& grid) {
  std::vector<int> out(grid.element_count());
  for (int e = 0; e < grid.element_count(); ++e) out[e] = e;
  return out;
}

namespace {

// P1 element stiffness from vertex positions; k(i,j) = measure * grad_i . grad_j.
void local_stiffness(const StructuredGrid& grid, int element, double k[3][3],
                     int* nv) {
  const auto nodes = grid.element_nodes(element);
  if (grid.dim == 1) {
    *nv = 2;
    const double w = 1.0 / grid.h;
    k[0][0] = w;
    k[0][1] = -w;
    k[1][0] = -w;
    k[1][1] = w;
    return;
  }
  *nv = 3;
  std::array<std::array<double, 2>, 3> p;
  for (int i = 0; i < 3; ++i) p[i] = grid.node_position(nodes[i]);
  const double x1 = p[1][0] - p[0][0], y1 = p[1][1] - p[0][1];
  const double x2 = p[2][0] - p[0][0], y2 = p[2][1] - p[0][1];
  const double det = x1 * y2 - x2 * y1;
  const double area = 0.5 * std::abs(det);
  // Gradients of the three hat functions.
  const double g[3][2] = {{(y1 - y2) / det, (x2 - x1) / det},
                          {y2 / det, -x2 / det},
                          {-y1 / det, x1 / det}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
}

}  // namespace

SparseMatrix assemble_stiffness(const StructuredGrid& grid,
                                const std::vector<int>& elements,
                                const DofMap& rows, const DofMap& cols) {
  if (elements.empty())
    throw EmptyElementSet("assemble_stiffness: empty element set");
  std::vector<Eigen::Triplet<double>> trip;
  double k[3][3];
  int nv = 0;
  for (int e : elements) {
    if (e < 0 || e >= grid.element_count())
      throw DimensionMismatch("assemble_stiffness: element out of range");
    const auto nodes = grid.element_nodes(e);
    local_stiffness(grid, e, k, &nv);
    for (int i = 0; i < nv; ++i) {
      const int r = rows.dof_of(nodes[i]);
      if (r < 0) continue;
      for (int j = 0; j < nv; ++j) {
        const int c = cols.dof_of(nodes[j]);
        if (c < 0) continue;
        trip.emplace_back(r, c, k[i][j]);
      }
    }
  }
  SparseMatrix m(rows.size(), cols.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

std::vector<int> region_boundary_nodes(const StructuredGrid& grid,
                                       const std::vector<int>& elements) {
  std::vector<int> out;
  if (grid.dim == 1) {
    std::map<int, int> count;  // node -> incident region elements
    for (int e : elements) {
      ++count[e];
      ++count[e + 1];
    }
    for (const auto& [node, c] : count)
      if (c == 1) out.push_back(node);
    return out;
  }
  // An edge on the region boundary belongs to exactly one region triangle.
  std::map<std::pair<int, int>, int> edges;
  for (int e : elements) {
    const auto n = grid.element_nodes(e);
    for (int i = 0; i < 3; ++i) {
      const int a = std::min(n[i], n[(i + 1) % 3]);
      const int b = std::max(n[i], n[(i + 1) % 3]);
      ++edges[{a, b}];
    }
  }
  std::vector<bool> on(grid.node_count(), false);
  for (const auto& [edge, c] : edges)
    if (c == 1) on[edge.first] = on[edge.second] = true;
  for (int n = 0; n < grid.node_count(); ++n)
    if (on[n]) out.push_back(n);
  return out;
}

SparseMatrix boundary_mass(const StructuredGrid& grid,
                           const std::vector<int>& region_elements,
                           const std::vector<int>& mass_nodes,
                           const DofMap& dofs) {
  if (region_elements.empty())
    throw EmptyElementSet("boundary_mass: empty element set");

  std::vector<double> weight(grid.node_count(), 0.0);
  std::vector<bool> on_boundary(grid.node_count(), false);

  if (grid.dim == 1) {
    std::map<int, int> count;
    for (int e : region_elements) {
      ++count[e];
      ++count[e + 1];
    }
    for (const auto& [node, c] : count)
      if (c == 1) {
        on_boundary[node] = true;
        weight[node] = 1.0;  // point evaluation measure
      }
  } else {
    std::map<std::pair<int, int>, int> edges;
    for (int e : region_elements) {
      const auto n = grid.element_nodes(e);
      for (int i = 0; i < 3; ++i) {
        const int a = std::min(n[i], n[(i + 1) % 3]);
        const int b = std::max(n[i], n[(i + 1) % 3]);
        ++edges[{a, b}];
      }
    }
    for (const auto& [edge, c] : edges) {
      if (c != 1) continue;
      const auto pa = grid.node_position(edge.first);
      const auto pb = grid.node_position(edge.second);
      const double len =
          std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
      on_boundary[edge.first] = true;
      on_boundary[edge.second] = true;
      weight[edge.first] += 0.5 * len;
      weight[edge.second] += 0.5 * len;
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (int node : mass_nodes) {
    if (node < 0 || node >= grid.node_count() || !on_boundary[node])
      throw NotOnBoundary("boundary_mass: node not on claimed boundary");
    const int d = dofs.dof_of(node);
    if (d >= 0) trip.emplace_back(d, d, weight[node]);
  }
  SparseMatrix m(dofs.size(), dofs.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Vector load_vector(const StructuredGrid& grid, double f, const DofMap& dofs) {
  Vector out = Vector::Zero(dofs.size());
  const double per_vertex = grid.element_measure() / (grid.dim + 1);
  for (int e = 0; e < grid.element_count(); ++e) {
    const auto nodes = grid.element_nodes(e);
    for (int i = 0; i < grid.dim + 1; ++i) {
      const int d = dofs.dof_of(nodes[i]);
      if (d >= 0) out[d] += f * per_vertex;
    }
  }
  return out;
}

Vector interpolate(const StructuredGrid& grid, const DofMap& dofs,
                   const std::function<double(double, double)>& fn) {
  Vector out(dofs.size());
  for (int d = 0; d < dofs.size(); ++d) {
    const auto p = grid.node_position(dofs.nodes[d]);
    out[d] = fn(p[0], p[1]);
  }
  return out;
}

}  // namespace schwarzlab::fem
