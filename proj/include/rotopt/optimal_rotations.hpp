#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

#include "rotopt/force_functional.hpp"
#include "rotopt/son_geometry.hpp"

namespace rotopt {

/// Force matrix brought to the frame in which the identity is an optimal
/// rotation: m_tilde = rotation_to_frame^T * M is symmetric, the maximum of
/// <M, R> over SO(n) equals max_value = <m_tilde, I>, and every eigenvalue
/// pair sum of m_tilde is nonnegative.
struct NormalizedForce {
  RotationMatrix rotation_to_frame;
  Matrix m_tilde;
  double max_value = 0.0;
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, det +1
  bool maximizer_unique = true;

  int dim() const { return rotation_to_frame.dim(); }
  /// Scale-aware classification tolerance: 1e-8 * max(1, |M|).
  double default_tolerance() const;
};

enum class SetKind { Singleton, Circle, ProjectivePlane, FullGroup };

std::string to_string(SetKind kind);

/// The set of maximizers of the force functional over SO(n), expressed in the
/// normalized frame (the identity is always a member). Members in the
/// original frame are rotation_to_frame * X.
struct OptimalRotationSet {
  SetKind kind = SetKind::Singleton;
  int n = 2;
  RotationMatrix rotation_to_frame;  // maps normalized-frame members back
  RotationMatrix base;               // the identity member
  RotationMatrix frame;              // eigenframe of m_tilde, det +1
  Vector axis;                       // Circle only: rotation axis (n = 3)
  Matrix m_tilde;
  double max_value = 0.0;
  double tolerance = 0.0;
  double spectral_gap = 0.0;
  std::vector<std::string> warnings;

  int dimension() const;  // manifold dimension: 0, 1, 2, or n(n-1)/2

  /// Chart members in the normalized frame.
  RotationMatrix circle_member(double angle) const;
  RotationMatrix projective_member(double polar, double azimuth) const;
  RotationMatrix full_group_member(const std::vector<double>& chart) const;
  RotationMatrix random_member(Rng& rng) const;

  RotationMatrix to_original_frame(const RotationMatrix& member) const;
  RotationMatrix from_original_frame(const RotationMatrix& rotation) const;

  nlohmann::json report() const;
};

NormalizedForce normalize_force(const Matrix& force_matrix);
inline NormalizedForce normalize_force(const ForceMatrix& m) {
  return normalize_force(m.entries);
}

/// Classification by the eigenvalue pattern of the normalized force:
/// n = 2: FullGroup iff tr = 0, else Singleton. n = 3: FullGroup iff M = 0;
/// ProjectivePlane iff eigenvalues (a, a, -a), a > 0; Circle iff (b, a, -a),
/// b > a >= 0; Singleton otherwise. Gaps within 10x tolerance classify to the
/// lower-dimensional set and attach a warning.
OptimalRotationSet classify(const NormalizedForce& nf, double tolerance);
OptimalRotationSet classify(const NormalizedForce& nf);

/// True iff <m_tilde, R> >= max_value - tolerance (R in the normalized frame).
bool is_optimal(const NormalizedForce& nf, const RotationMatrix& r, double tolerance);
bool is_optimal(const OptimalRotationSet& set, const RotationMatrix& r, double tolerance);

/// Nearest member of the set in geodesic distance (normalized frame).
/// Throws AmbiguousProjection at cut-locus inputs.
RotationMatrix project(const OptimalRotationSet& set, const RotationMatrix& q);

/// Orthonormal split of the skew matrices at a member R0 into the kernel of
/// the quadratic form W -> <m_tilde, R0 W^2> (tangent directions of the set)
/// and its complement (normal directions).
struct TangentNormalBasis {
  std::vector<SkewMatrix> tangent;
  std::vector<SkewMatrix> normal;
  double spectral_gap = 0.0;  // smallest |eigenvalue| outside the kernel
};

TangentNormalBasis tangent_normal(const OptimalRotationSet& set, const RotationMatrix& r0);

}  // namespace rotopt
