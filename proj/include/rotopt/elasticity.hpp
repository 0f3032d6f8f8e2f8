#pragma once

#include <memory>
#include <utility>

#include "rotopt/force_functional.hpp"
#include "rotopt/optimal_rotations.hpp"

namespace rotopt {

/// Quartic frame-indifferent density
///   W(A) = (mu/4) |A^T A - I|^2 + (lambda/8) tr(A^T A - I)^2,
/// which linearizes at the identity to Q(B) = mu |sym B|^2 + (lambda/2) tr(B)^2.
struct DensityParams {
  double mu = 1.0;
  double lambda = 1.0;

  void validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("density: mu must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("density: lambda must be >= 0");
  }
};

double density_value(const DensityParams& params, const Matrix& a);
Matrix density_gradient(const DensityParams& params, const Matrix& a);
/// The quadratic form Q of the linearized problem.
double density_quadratic(const DensityParams& params, const Matrix& b);

/// J = elastic - traction_work - body_work, all relative to the identity
/// configuration (J(id) = 0 exactly).
struct EnergyBreakdown {
  double elastic = 0.0;
  double traction_work = 0.0;
  double body_work = 0.0;
  double total = 0.0;
  double epsilon = 0.0;
};

/// Deformations and displacements are nodal fields, one row per mesh vertex.
EnergyBreakdown total_energy(const Mesh& mesh, const ForceField& field,
                             const DensityParams& params, const Matrix& deformation,
                             double epsilon);

/// The identity configuration y = x.
Matrix identity_configuration(const Mesh& mesh);

struct MinimizeOptions {
  double gtol = 1e-8;
  int max_iters = 5000;
  int memory = 10;
};

struct MinimizeResult {
  Matrix deformation;
  EnergyBreakdown energy;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Limited-memory quasi-Newton minimization of the traction energy with a
/// backtracking line search. The translation gauge is re-centered every
/// iteration; the rotation gauge is intentionally left free.
MinimizeResult minimize_nonlinear(const Mesh& mesh, const ForceField& field,
                                  const DensityParams& params, double epsilon,
                                  const Matrix& init, const MinimizeOptions& opts);

/// Rigid motion R x + c closest to a deformation in the W^{1,2} sense.
struct ReferenceConfiguration {
  RotationMatrix rotation;
  Vector translation;
  bool unique = true;
};

ReferenceConfiguration reference_configuration(const Mesh& mesh, const Matrix& deformation);

/// u = (1/epsilon) R^T (y - (R x + c)) nodally.
Matrix rescaled_displacement(const Mesh& mesh, const Matrix& deformation,
                             const ReferenceConfiguration& ref, double epsilon);

/// Gauge-fixed linear elasticity: minimizes \int Q(e(u)) - load(R0 u) over
/// the subspace with zero mean displacement and zero mean skew gradient.
/// Assembles and factors the saddle-point system once; solves per rotation.
class LinearSolver {
 public:
  LinearSolver(const Mesh& mesh, const ForceField& field, const DensityParams& params);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Returns (u, J(u, R0)) with the discrete stationarity residual checked.
  std::pair<Matrix, double> solve(const RotationMatrix& r0) const;
  double last_stationarity_residual() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper that verifies R0 is an optimal rotation first
/// (throws IllPosedLoad otherwise, since the quadratic is then unbounded
/// below along infinitesimal rigid motions).
std::pair<Matrix, double> solve_linear(const Mesh& mesh, const ForceField& field,
                                       const DensityParams& params, const RotationMatrix& r0);

/// The quadratic functional J(u, R0) evaluated at an arbitrary nodal field.
double linear_energy(const Mesh& mesh, const ForceField& field, const DensityParams& params,
                     const Matrix& u, const RotationMatrix& r0);

struct MinOverRotationsResult {
  Matrix displacement;
  RotationMatrix rotation;  // original frame
  double value = 0.0;
};

/// Minimizes J(u, R) jointly over u and the classified optimal-rotation set:
/// direct solve for a Singleton, seeded golden-section over the circle angle,
/// seeded Nelder-Mead over the projective/full-group charts.
MinOverRotationsResult minimize_over_rotations(const Mesh& mesh, const ForceField& field,
                                               const DensityParams& params,
                                               const OptimalRotationSet& set);

/// y = R0 exp(sqrt(eps) W0) (x + eps u0). W0 must lie in the normal space of
/// the set at R0 (checked; throws std::invalid_argument otherwise).
Matrix recovery_sequence(const Mesh& mesh, const OptimalRotationSet& set, const Matrix& u0,
                         const RotationMatrix& r0, const SkewMatrix& w0, double epsilon);

/// Limit functional: \int Q(e(u0)) - load(R0 u0) - (1/2) <M, R0 W0^2>.
double limit_energy(const Mesh& mesh, const ForceField& field, const DensityParams& params,
                    const Matrix& u0, const RotationMatrix& r0, const SkewMatrix& w0);

/// Exact L2 inner product of nodal fields.
double l2_inner(const Mesh& mesh, const Matrix& u, const Matrix& v);
double l2_norm(const Mesh& mesh, const Matrix& u);
double h1_seminorm(const Mesh& mesh, const Matrix& u);

/// Subtracts the L2-best-fit infinitesimal rigid motion A x + b (A skew).
Matrix project_out_rigid_motion(const Mesh& mesh, const Matrix& u);

}  // namespace rotopt
