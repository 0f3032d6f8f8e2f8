#include "rotopt/son_geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace rotopt {

namespace {

constexpr double kSkewTol = 1e-12;
constexpr double kRotationTol = 1e-10;

Matrix planar_block(double angle) {
  Matrix a(2, 2);
  a << 0.0, angle, -angle, 0.0;
  return a;
}

Matrix planar_rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix r(2, 2);
  r << c, s, -s, c;
  return r;
}

// One planar block of a quasi-diagonal Schur factor, or a 1x1 entry.
struct SchurBlock {
  int start = 0;
  int size = 1;
  double angle = 0.0;   // skew case
  double value = 0.0;   // 1x1 rotation case (+1 or -1)
};

std::vector<SchurBlock> split_blocks(const Matrix& t, double subdiag_tol) {
  std::vector<SchurBlock> blocks;
  const int n = static_cast<int>(t.rows());
  int i = 0;
  while (i < n) {
    SchurBlock b;
    b.start = i;
    if (i + 1 < n && std::abs(t(i + 1, i)) > subdiag_tol) {
      b.size = 2;
      b.angle = 0.5 * (t(i, i + 1) - t(i + 1, i));
      i += 2;
    } else {
      b.value = t(i, i);
      i += 1;
    }
    blocks.push_back(b);
  }
  return blocks;
}

}  // namespace

SkewMatrix::SkewMatrix(Matrix entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("skew matrix must be square");
  }
  require_dimension(static_cast<int>(entries.rows()));
  const double defect = (entries + entries.transpose()).cwiseAbs().maxCoeff();
  if (defect > kSkewTol) {
    throw std::invalid_argument("matrix is not skew-symmetric (defect " +
                                std::to_string(defect) + ")");
  }
  entries_ = 0.5 * (entries - entries.transpose().eval());
}

SkewMatrix SkewMatrix::zero(int n) {
  require_dimension(n);
  return SkewMatrix(Matrix::Zero(n, n));
}

SkewMatrix SkewMatrix::planar(double angle) {
  return SkewMatrix(planar_block(angle));
}

SkewMatrix SkewMatrix::from_axis_angle(const Vector& axis, double angle) {
  if (axis.size() != 3) {
    throw std::invalid_argument("from_axis_angle requires a 3-vector axis");
  }
  Matrix w = Matrix::Zero(3, 3);
  const Vector v = angle * axis;
  w(0, 1) = -v(2);
  w(1, 0) = v(2);
  w(0, 2) = v(1);
  w(2, 0) = -v(1);
  w(1, 2) = -v(0);
  w(2, 1) = v(0);
  return SkewMatrix(w);
}

RotationMatrix::RotationMatrix(Matrix entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("rotation matrix must be square");
  }
  const int n = static_cast<int>(entries.rows());
  require_dimension(n);
  const double ortho =
      (entries.transpose() * entries - Matrix::Identity(n, n)).norm();
  if (ortho > kRotationTol) {
    throw std::invalid_argument("matrix is not orthogonal (defect " +
                                std::to_string(ortho) + ")");
  }
  if (std::abs(entries.determinant() - 1.0) > kRotationTol) {
    throw std::invalid_argument("matrix has determinant != +1");
  }
  entries_ = std::move(entries);
}

RotationMatrix RotationMatrix::identity(int n) {
  require_dimension(n);
  return RotationMatrix(Matrix::Identity(n, n));
}

RotationMatrix RotationMatrix::planar(double angle) {
  return RotationMatrix(planar_rotation(angle));
}

RotationMatrix RotationMatrix::transposed() const {
  return RotationMatrix(entries_.transpose());
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& other) const {
  return RotationMatrix(entries_ * other.entries());
}

Matrix SkewCanonicalForm::reconstruct() const {
  const int n = frame.dim();
  Matrix sigma = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const int p = static_cast<int>(2 * i);
    sigma.block<2, 2>(p, p) = planar_block(angles[i]);
  }
  return frame.entries().transpose() * sigma * frame.entries();
}

double angle_zero_cutoff(const Matrix& w) {
  return 1e-9 * std::max(1.0, w.norm());
}

SkewCanonicalForm skew_canonical_form(const SkewMatrix& w) {
  const int n = w.dim();
  const Matrix& m = w.entries();
  const double tau = angle_zero_cutoff(m);

  if (n == 2) {
    // Already block form; any SO(2) frame fixes the block, so use identity.
    std::vector<double> angles;
    if (std::abs(m(0, 1)) > tau) angles.push_back(m(0, 1));
    return SkewCanonicalForm{RotationMatrix::identity(2), std::move(angles)};
  }

  Eigen::RealSchur<Matrix> schur(m);
  if (schur.info() != Eigen::Success) {
    throw NumericalInconsistency("Schur decomposition failed");
  }
  Matrix u = schur.matrixU();
  const auto blocks = split_blocks(schur.matrixT(), 0.5 * tau);

  struct Pair {
    int col0, col1;
    double angle;
  };
  std::vector<Pair> planes;
  std::vector<int> kernel;
  for (const auto& b : blocks) {
    if (b.size == 2 && std::abs(b.angle) > tau) {
      planes.push_back({b.start, b.start + 1, b.angle});
    } else {
      kernel.push_back(b.start);
      if (b.size == 2) kernel.push_back(b.start + 1);
    }
  }
  std::stable_sort(planes.begin(), planes.end(), [](const Pair& a, const Pair& b) {
    return std::abs(a.angle) > std::abs(b.angle);
  });

  // Re-assemble the orthogonal factor with positive block orientation:
  // swapping a block's two columns flips its angle.
  Matrix v(n, n);
  std::vector<double> angles;
  int col = 0;
  for (const auto& p : planes) {
    if (p.angle >= 0.0) {
      v.col(col) = u.col(p.col0);
      v.col(col + 1) = u.col(p.col1);
      angles.push_back(p.angle);
    } else {
      v.col(col) = u.col(p.col1);
      v.col(col + 1) = u.col(p.col0);
      angles.push_back(-p.angle);
    }
    col += 2;
  }
  for (int k : kernel) {
    v.col(col++) = u.col(k);
  }

  if (v.determinant() < 0.0) {
    if (!kernel.empty()) {
      v.col(n - 1) *= -1.0;
    } else {
      // No zero column to absorb the sign; flip the smallest block instead.
      const int p = 2 * (static_cast<int>(angles.size()) - 1);
      v.col(p).swap(v.col(p + 1));
      angles.back() = -angles.back();
    }
  }

  SkewCanonicalForm form{RotationMatrix(v.transpose()), std::move(angles)};
  if ((form.reconstruct() - m).norm() > 1e-10 * std::max(1.0, m.norm())) {
    throw NumericalInconsistency("canonical form reconstruction failed");
  }
  return form;
}

RotationMatrix exp_skew(const SkewMatrix& w) {
  const SkewCanonicalForm form = skew_canonical_form(w);
  const int n = w.dim();
  Matrix core = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < form.angles.size(); ++i) {
    const int p = static_cast<int>(2 * i);
    core.block<2, 2>(p, p) = planar_rotation(form.angles[i]);
  }
  const Matrix& f = form.frame.entries();
  return RotationMatrix(f.transpose() * core * f);
}

LogResult log_principal(const RotationMatrix& from, const RotationMatrix& to) {
  if (from.dim() != to.dim()) {
    throw std::invalid_argument("log_principal: dimension mismatch");
  }
  const int n = from.dim();
  const Matrix q = from.entries().transpose() * to.entries();
  constexpr double pi = std::numbers::pi;
  const double flag_tol = 1e-9;

  Matrix w = Matrix::Zero(n, n);
  bool degenerate = false;

  Eigen::RealSchur<Matrix> schur(q);
  if (schur.info() != Eigen::Success) {
    throw NumericalInconsistency("Schur decomposition failed");
  }
  const Matrix& u = schur.matrixU();
  const Matrix& t = schur.matrixT();

  std::vector<int> flipped;  // 1x1 blocks with value -1: plane rotations by pi
  for (const auto& b : split_blocks(t, 1e-12)) {
    if (b.size == 2) {
      const double c = 0.5 * (t(b.start, b.start) + t(b.start + 1, b.start + 1));
      const double s = 0.5 * (t(b.start, b.start + 1) - t(b.start + 1, b.start));
      double theta = std::atan2(s, c);
      if (theta <= -pi + flag_tol) theta = pi;  // half-open branch (-pi, pi]
      if (std::abs(theta) >= pi - flag_tol) degenerate = true;
      const Vector a = u.col(b.start);
      const Vector c2 = u.col(b.start + 1);
      w += theta * (a * c2.transpose() - c2 * a.transpose());
    } else if (b.value < 0.0) {
      flipped.push_back(b.start);
    }
  }
  // -1 eigenvalues come in pairs (det = +1); each pair is a rotation by pi in
  // the spanned plane, with a non-unique orientation.
  if (flipped.size() % 2 != 0) {
    throw NumericalInconsistency("unpaired -1 eigenvalue in rotation log");
  }
  for (std::size_t i = 0; i + 1 < flipped.size(); i += 2) {
    degenerate = true;
    const Vector a = u.col(flipped[i]);
    const Vector c2 = u.col(flipped[i + 1]);
    w += pi * (a * c2.transpose() - c2 * a.transpose());
  }

  SkewMatrix result(w);
  if ((from.entries() * exp_skew(result).entries() - to.entries()).norm() >
      1e-9 * std::sqrt(static_cast<double>(n))) {
    throw NumericalInconsistency("rotation logarithm verification failed");
  }
  return LogResult{std::move(result), degenerate};
}

double geodesic_distance(const RotationMatrix& q, const RotationMatrix& r) {
  return log_principal(r, q).skew.norm();
}

CurvatureSpectrum second_form_curvatures(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw std::invalid_argument("curvature direction must be square");
  }
  const int n = static_cast<int>(s.rows());
  require_dimension(n);
  if ((s - s.transpose()).norm() > 1e-9 * std::max(1.0, s.norm())) {
    throw std::invalid_argument("curvature direction must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  const Vector eig = es.eigenvalues();
  CurvatureSpectrum spectrum;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      spectrum.values.push_back(-0.25 * (eig(i) + eig(j)));
    }
  }
  std::sort(spectrum.values.begin(), spectrum.values.end());
  return spectrum;
}

MaxTraceResult max_trace_rotation(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("max_trace_rotation: matrix must be square");
  }
  const int n = static_cast<int>(m.rows());
  require_dimension(n);

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Vector s = svd.singularValues();

  const double det_sign =
      (u.determinant() * v.determinant() > 0.0) ? 1.0 : -1.0;
  Vector d = Vector::Ones(n);
  d(n - 1) = det_sign;

  MaxTraceResult result{RotationMatrix(u * d.asDiagonal() * v.transpose()),
                        s.head(n - 1).sum() + det_sign * s(n - 1), true};

  const double tau = 1e-9 * std::max(1.0, s(0));
  result.unique = (det_sign > 0.0) ? (s(n - 2) + s(n - 1) > tau)
                                   : (s(n - 2) - s(n - 1) > tau);
  return result;
}

RotationMatrix haar_rotation(int n, Rng& rng) {
  require_dimension(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (q.determinant() < 0.0) q.col(n - 1) *= -1.0;
  return RotationMatrix(std::move(q));
}

SkewMatrix random_skew(int n, Rng& rng, double max_angle) {
  require_dimension(n);
  std::uniform_real_distribution<double> uni(-max_angle, max_angle);
  const RotationMatrix frame = haar_rotation(n, rng);
  Matrix sigma = Matrix::Zero(n, n);
  for (int p = 0; p + 1 < n; p += 2) {
    sigma.block<2, 2>(p, p) = planar_block(uni(rng));
  }
  return SkewMatrix(frame.entries().transpose() * sigma * frame.entries());
}

}  // namespace rotopt
