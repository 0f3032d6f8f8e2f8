#pragma once

#include <vector>

#include "rotopt/common.hpp"

namespace rotopt {

/// Skew-symmetric n x n matrix, n in {2, 3, 4}. The constructor checks
/// |W + W^T|_max <= 1e-12 and then symmetrizes exactly.
class SkewMatrix {
 public:
  explicit SkewMatrix(Matrix entries);

  static SkewMatrix zero(int n);
  /// 2x2 block [[0, angle], [-angle, 0]].
  static SkewMatrix planar(double angle);
  /// n = 3 generator with W x = axis cross x after scaling; the canonical
  /// angle equals |axis| * angle when axis is unit.
  static SkewMatrix from_axis_angle(const Vector& axis, double angle);

  const Matrix& entries() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  double norm() const { return entries_.norm(); }

 private:
  Matrix entries_;
};

/// Element of SO(n), n in {2, 3, 4}. The constructor checks
/// |R^T R - I| <= 1e-10 and det R = 1 to 1e-10.
class RotationMatrix {
 public:
  explicit RotationMatrix(Matrix entries);

  static RotationMatrix identity(int n);
  /// 2D rotation by `angle` with the same sign convention as exp(planar(angle)).
  static RotationMatrix planar(double angle);

  const Matrix& entries() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  RotationMatrix transposed() const;
  RotationMatrix operator*(const RotationMatrix& other) const;

 private:
  Matrix entries_;
};

/// Block-planar decomposition W = frame^T * Sigma(angles) * frame with
/// Sigma = blockdiag(A(angle_1), ..., A(angle_k), 0, ..., 0) and
/// A(a) = [[0, a], [-a, 0]]. Angles are sorted by descending magnitude and
/// positive, except that when n = 2k (no zero column available) the smallest
/// block may carry a negative sign to keep det(frame) = +1.
struct SkewCanonicalForm {
  RotationMatrix frame;
  std::vector<double> angles;

  int block_count() const { return static_cast<int>(angles.size()); }
  /// frame^T * Sigma(angles) * frame.
  Matrix reconstruct() const;
};

/// Principal curvatures of SO(n) at the identity in a symmetric direction S,
/// i.e. the multiset {-(s_i + s_j)/4 : i < j} over the eigenvalues of S.
/// Sorted ascending.
struct CurvatureSpectrum {
  std::vector<double> values;
};

struct LogResult {
  SkewMatrix skew;
  /// Set when some canonical angle lies within tolerance of pi, where the
  /// principal branch is not unique; the principal branch is still returned.
  bool degenerate = false;
};

struct MaxTraceResult {
  RotationMatrix rotation;
  double value = 0.0;
  /// False when the maximizer of <M, R> over SO(n) is not unique
  /// (degenerate small singular values of M).
  bool unique = true;
};

/// Scale-aware cutoff below which canonical angles are treated as zero blocks.
double angle_zero_cutoff(const Matrix& w);

SkewCanonicalForm skew_canonical_form(const SkewMatrix& w);

/// Matrix exponential of a skew matrix, evaluated through the canonical form
/// (exact planar rotations on each block).
RotationMatrix exp_skew(const SkewMatrix& w);

/// Principal logarithm: the skew W with to = from * exp(W) and every
/// canonical angle in (-pi, pi].
LogResult log_principal(const RotationMatrix& from, const RotationMatrix& to);

/// Intrinsic (geodesic) distance on SO(n): Frobenius norm of the principal
/// logarithm. Bi-invariant and symmetric.
double geodesic_distance(const RotationMatrix& q, const RotationMatrix& r);

CurvatureSpectrum second_form_curvatures(const Matrix& symmetric_direction);

/// Closed-form maximizer of R -> <M, R> over SO(n): SVD with a determinant
/// sign correction on the smallest singular value.
MaxTraceResult max_trace_rotation(const Matrix& m);

/// Haar-uniform rotation: QR of a Gaussian matrix with sign and determinant
/// corrections.
RotationMatrix haar_rotation(int n, Rng& rng);

/// Random skew matrix whose canonical angles are uniform in
/// (-max_angle, max_angle), conjugated by a Haar rotation.
SkewMatrix random_skew(int n, Rng& rng, double max_angle);

}  // namespace rotopt
