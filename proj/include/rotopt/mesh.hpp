#pragma once

#include <nlohmann/json_fwd.hpp>

#include <vector>

#include "rotopt/common.hpp"

namespace rotopt {

/// Boundary facet of a simplicial mesh: a segment (n = 2) or triangle (n = 3)
/// with its outward unit normal. In 2D the unit tangent points
/// counterclockwise along the boundary.
struct BoundaryFacet {
  std::vector<int> nodes;
  Vector normal;
  Vector tangent;  // 2D only; empty in 3D
  double measure = 0.0;
};

/// Simplicial mesh of a domain in R^n, n in {2, 3}. Vertices are rows of an
/// (nv x n) matrix; cells are (n+1)-tuples of vertex indices with positive
/// measure. Immutable after construction.
class Mesh {
 public:
  Mesh(int dim, Matrix vertices, std::vector<std::vector<int>> cells,
       std::vector<BoundaryFacet> boundary);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  const Matrix& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<BoundaryFacet>& boundary() const { return boundary_; }

  double cell_measure(int c) const { return cell_measures_[c]; }
  double total_volume() const { return total_volume_; }
  double boundary_area() const { return boundary_area_; }

  /// Rows a = 0..n give the P1 shape-function gradients of cell c.
  const Matrix& shape_gradients(int c) const { return shape_gradients_[c]; }

  /// Piecewise-constant gradient of a nodal field (nv x m) on cell c,
  /// with (grad u)_{ij} = du_i/dx_j; returns an (m x n) matrix.
  Matrix field_gradient(const Matrix& nodal, int c) const;

  /// Lumped vertex weights w_v = sum_c |c|/(n+1); sums to the total volume.
  const Vector& lumped_mass() const { return lumped_mass_; }

  /// Volume-weighted mean of a nodal field (exact for P1 fields).
  Vector mean_value(const Matrix& nodal) const;

  /// Exact second moment \int x x^T dx.
  Matrix coordinate_second_moment() const;

  static Mesh unit_square(int subdivisions);
  static Mesh unit_disk(int boundary_segments);
  static Mesh unit_ball(int refinement_level);

  static Mesh from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  int dim_;
  Matrix vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<BoundaryFacet> boundary_;
  std::vector<double> cell_measures_;
  std::vector<Matrix> shape_gradients_;
  Vector lumped_mass_;
  double total_volume_ = 0.0;
  double boundary_area_ = 0.0;
};

/// P1 mass matrix of a cell or facet simplex with k nodes and given measure:
/// measure / (k (k + 1)) * (1 + delta_ab).
Matrix simplex_mass_matrix(int node_count, double measure);

}  // namespace rotopt
