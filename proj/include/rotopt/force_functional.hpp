#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

#include "rotopt/mesh.hpp"

namespace rotopt {

/// Traction and body forces on a mesh, interpreted piecewise-linear. Traction
/// values are stored per facet node so that analytic fields which jump across
/// facet corners (f = nu on a polygon) are represented exactly; a continuous
/// nodal field is simply copied onto its facets.
struct ForceField {
  std::vector<std::vector<Vector>> traction;  // [facet][local node]
  Matrix body;                                // nv x n

  static ForceField zero(const Mesh& mesh);
  static ForceField from_nodal(const Mesh& mesh, const Matrix& traction_nodal,
                               const Matrix& body_nodal);
  /// Named analytic fields: uniform-tension, uniform-compression,
  /// tangential-2d (n = 2), radial-ball, gravity (n = 3).
  static ForceField builtin(const Mesh& mesh, const std::string& name,
                            const nlohmann::json& params);

  static ForceField from_json(const Mesh& mesh, const nlohmann::json& j);

  /// Discrete L2 norms (traction over the boundary, body over the volume).
  double traction_norm(const Mesh& mesh) const;
  double body_norm(const Mesh& mesh) const;
};

/// The force functional as a matrix under the Frobenius pairing:
/// F(A) = <entries, A> reproduces the quadrature value of
/// \int_dOmega f . A x + \int_Omega g . A x for the discrete field.
struct ForceMatrix {
  Matrix entries;
  Vector equilibration_residual;
  double torque_residual = 0.0;  // |M - M^T|_F
  std::vector<std::string> warnings;

  double evaluate(const Matrix& a) const { return entries.cwiseProduct(a).sum(); }
};

/// Nodal load vectors L (nv x n): sum_v L_v . w_v equals
/// \int f . w + \int g . w exactly for every nodal field w.
Matrix nodal_load(const Mesh& mesh, const ForceField& field);

/// Total force residual \int f dH + \int g dx; zero for equilibrated fields.
Vector check_equilibrated(const Mesh& mesh, const ForceField& field);

ForceMatrix assemble_force_matrix(const Mesh& mesh, const ForceField& field);

/// Relative skew defect |M - M^T| / max(1, |M|); zero exactly when the load
/// balances all infinitesimal rotations about the origin.
double balance_residuals(const ForceMatrix& m);

}  // namespace rotopt
