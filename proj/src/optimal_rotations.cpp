#include "rotopt/optimal_rotations.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rotopt {

namespace {

Matrix axis_rotation(double angle) {
  // Rotation about the first coordinate axis (n = 3).
  Matrix r = Matrix::Identity(3, 3);
  r(1, 1) = std::cos(angle);
  r(1, 2) = -std::sin(angle);
  r(2, 1) = std::sin(angle);
  r(2, 2) = std::cos(angle);
  return r;
}

Matrix quaternion_rotation(double w, double x, double y, double z) {
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

std::vector<Matrix> orthonormal_skew_basis(int n) {
  std::vector<Matrix> basis;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Matrix w = Matrix::Zero(n, n);
      w(i, j) = inv_sqrt2;
      w(j, i) = -inv_sqrt2;
      basis.push_back(std::move(w));
    }
  }
  return basis;
}

// Tracks how far each executed threshold comparison was from flipping.
struct GapTracker {
  double gap = std::numeric_limits<double>::infinity();
  void note(double statistic, double threshold) {
    gap = std::min(gap, std::abs(std::abs(statistic) - threshold));
  }
};

}  // namespace

double NormalizedForce::default_tolerance() const {
  return 1e-8 * std::max(1.0, m_tilde.norm());
}

std::string to_string(SetKind kind) {
  switch (kind) {
    case SetKind::Singleton: return "Singleton";
    case SetKind::Circle: return "Circle";
    case SetKind::ProjectivePlane: return "ProjectivePlane";
    case SetKind::FullGroup: return "FullGroup";
  }
  return "?";
}

NormalizedForce normalize_force(const Matrix& force_matrix) {
  const int n = static_cast<int>(force_matrix.rows());
  require_dimension(n);
  const MaxTraceResult best = max_trace_rotation(force_matrix);

  NormalizedForce nf{best.rotation, Matrix(), best.value, Vector(), Matrix(), best.unique};
  nf.m_tilde = best.rotation.entries().transpose() * force_matrix;

  const double scale = std::max(1.0, force_matrix.norm());
  const double symmetry_defect = (nf.m_tilde - nf.m_tilde.transpose()).norm();
  if (symmetry_defect > 1e-9 * scale) {
    throw NumericalInconsistency(
        "normalized force matrix is not symmetric (defect " +
        std::to_string(symmetry_defect) + "); the rotation is not a maximizer");
  }
  nf.m_tilde = 0.5 * (nf.m_tilde + nf.m_tilde.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Matrix> es(nf.m_tilde);
  nf.eigenvalues = es.eigenvalues().reverse();
  nf.eigenvectors = es.eigenvectors().rowwise().reverse();
  if (nf.eigenvectors.determinant() < 0.0) nf.eigenvectors.col(n - 1) *= -1.0;

  const double tau = nf.default_tolerance();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (nf.eigenvalues(i) + nf.eigenvalues(j) < -tau) {
        throw NumericalInconsistency(
            "eigenvalue pair sum " + std::to_string(nf.eigenvalues(i) + nf.eigenvalues(j)) +
            " is negative; the normalized frame is not optimal");
      }
    }
  }
  return nf;
}

OptimalRotationSet classify(const NormalizedForce& nf) {
  return classify(nf, nf.default_tolerance());
}

OptimalRotationSet classify(const NormalizedForce& nf, double tolerance) {
  const int n = nf.dim();
  OptimalRotationSet set{SetKind::Singleton,
                         n,
                         nf.rotation_to_frame,
                         RotationMatrix::identity(n),
                         RotationMatrix(nf.eigenvectors),
                         Vector(),
                         nf.m_tilde,
                         nf.max_value,
                         tolerance,
                         0.0,
                         {}};
  GapTracker gaps;
  const double warn_band = 10.0 * tolerance;

  if (n == 2) {
    const double trace = nf.m_tilde.trace();
    gaps.note(trace, tolerance);
    if (std::abs(trace) <= tolerance) {
      set.kind = SetKind::FullGroup;
    } else {
      set.kind = SetKind::Singleton;
      if (std::abs(trace) <= warn_band) {
        set.warnings.push_back(
            "trace within 10x tolerance of zero; classified Singleton rather than FullGroup");
      }
    }
  } else {
    const double norm = nf.m_tilde.norm();
    gaps.note(norm, tolerance);
    if (norm <= tolerance) {
      set.kind = SetKind::FullGroup;
    } else {
      if (norm <= warn_band) {
        set.warnings.push_back("force matrix norm within 10x tolerance of zero");
      }
      const double pair_sum = nf.eigenvalues(1) + nf.eigenvalues(2);
      gaps.note(pair_sum, tolerance);
      if (std::abs(pair_sum) <= tolerance) {
        const double top_gap = nf.eigenvalues(0) - nf.eigenvalues(1);
        gaps.note(top_gap, tolerance);
        if (top_gap <= tolerance) {
          set.kind = SetKind::ProjectivePlane;
        } else {
          set.kind = SetKind::Circle;
          set.axis = set.frame.entries().col(0);
          if (top_gap <= warn_band) {
            set.warnings.push_back(
                "leading eigenvalue gap within 10x tolerance; classified Circle rather than "
                "ProjectivePlane");
          }
        }
      } else {
        set.kind = SetKind::Singleton;
        if (std::abs(pair_sum) <= warn_band) {
          set.warnings.push_back(
              "eigenvalue pair sum within 10x tolerance of zero; classified Singleton");
        }
      }
    }
  }
  set.spectral_gap = gaps.gap;
  return set;
}

int OptimalRotationSet::dimension() const {
  switch (kind) {
    case SetKind::Singleton: return 0;
    case SetKind::Circle: return 1;
    case SetKind::ProjectivePlane: return 2;
    case SetKind::FullGroup: return n * (n - 1) / 2;
  }
  return 0;
}

RotationMatrix OptimalRotationSet::circle_member(double angle) const {
  if (kind != SetKind::Circle) throw std::invalid_argument("not a Circle set");
  const Matrix& f = frame.entries();
  return RotationMatrix(f * axis_rotation(angle) * f.transpose());
}

RotationMatrix OptimalRotationSet::projective_member(double polar, double azimuth) const {
  if (kind != SetKind::ProjectivePlane) throw std::invalid_argument("not a ProjectivePlane set");
  const Matrix& f = frame.entries();
  const Matrix r = quaternion_rotation(std::cos(polar), std::sin(polar) * std::cos(azimuth),
                                       std::sin(polar) * std::sin(azimuth), 0.0);
  return RotationMatrix(f * r * f.transpose());
}

RotationMatrix OptimalRotationSet::full_group_member(const std::vector<double>& chart) const {
  if (kind != SetKind::FullGroup) throw std::invalid_argument("not a FullGroup set");
  if (n == 2) {
    if (chart.size() != 1) throw std::invalid_argument("SO(2) chart needs 1 parameter");
    return RotationMatrix::planar(chart[0]);
  }
  if (chart.size() != 3) throw std::invalid_argument("SO(3) chart needs 3 parameters");
  const double w = std::cos(chart[0]);
  const double s = std::sin(chart[0]);
  return RotationMatrix(quaternion_rotation(w, s * std::cos(chart[1]),
                                            s * std::sin(chart[1]) * std::cos(chart[2]),
                                            s * std::sin(chart[1]) * std::sin(chart[2])));
}

RotationMatrix OptimalRotationSet::random_member(Rng& rng) const {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (kind) {
    case SetKind::Singleton:
      return base;
    case SetKind::Circle:
      return circle_member(angle(rng));
    case SetKind::ProjectivePlane: {
      Eigen::Vector3d p(gauss(rng), gauss(rng), gauss(rng));
      p.normalize();
      const Matrix& f = frame.entries();
      return RotationMatrix(f * quaternion_rotation(p(0), p(1), p(2), 0.0) * f.transpose());
    }
    case SetKind::FullGroup:
      return haar_rotation(n, rng);
  }
  return base;
}

RotationMatrix OptimalRotationSet::to_original_frame(const RotationMatrix& member) const {
  return rotation_to_frame * member;
}

RotationMatrix OptimalRotationSet::from_original_frame(const RotationMatrix& rotation) const {
  return rotation_to_frame.transposed() * rotation;
}

nlohmann::json OptimalRotationSet::report() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  std::vector<double> eig;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_tilde);
    for (int i = n - 1; i >= 0; --i) eig.push_back(es.eigenvalues()(i));
  }
  j["eigenvalues"] = eig;
  nlohmann::json jf = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(frame.entries().row(i).data(),
                            frame.entries().row(i).data() + n);
    jf.push_back(row);
  }
  j["frame"] = std::move(jf);
  j["max_value"] = max_value;
  j["spectral_gap"] = spectral_gap;
  j["warnings"] = warnings;
  return j;
}

bool is_optimal(const NormalizedForce& nf, const RotationMatrix& r, double tolerance) {
  return nf.m_tilde.cwiseProduct(r.entries()).sum() >= nf.max_value - tolerance;
}

bool is_optimal(const OptimalRotationSet& set, const RotationMatrix& r, double tolerance) {
  return set.m_tilde.cwiseProduct(r.entries()).sum() >= set.max_value - tolerance;
}

RotationMatrix project(const OptimalRotationSet& set, const RotationMatrix& q) {
  if (q.dim() != set.n) throw std::invalid_argument("project: dimension mismatch");
  constexpr double cut_locus_tol = 1e-9;

  switch (set.kind) {
    case SetKind::FullGroup:
      return q;
    case SetKind::Singleton:
      return set.base;
    case SetKind::Circle: {
      // Maximize tr(q^T member(theta)) = c0 + a cos(theta) + b sin(theta).
      const Matrix& f = set.frame.entries();
      const Matrix y = f.transpose() * q.entries() * f;
      const double a = y(1, 1) + y(2, 2);
      const double b = y(2, 1) - y(1, 2);
      if (std::hypot(a, b) <= cut_locus_tol) {
        throw AmbiguousProjection("projection onto the circle is not unique (cut locus)");
      }
      return set.circle_member(std::atan2(b, a));
    }
    case SetKind::ProjectivePlane: {
      // Members have zero quaternion component along the negative eigenvalue
      // axis; the nearest member drops that component and renormalizes.
      const Matrix& f = set.frame.entries();
      const Matrix y = f.transpose() * q.entries() * f;
      const Eigen::Quaterniond p{Eigen::Matrix3d(y)};
      const double plane_norm =
          std::sqrt(p.w() * p.w() + p.x() * p.x() + p.y() * p.y());
      if (plane_norm <= cut_locus_tol) {
        throw AmbiguousProjection(
            "projection onto the projective plane is not unique (cut locus)");
      }
      const Matrix member = quaternion_rotation(p.w(), p.x(), p.y(), 0.0);
      return RotationMatrix(f * member * f.transpose());
    }
  }
  return set.base;
}

TangentNormalBasis tangent_normal(const OptimalRotationSet& set, const RotationMatrix& r0) {
  if (r0.dim() != set.n) throw std::invalid_argument("tangent_normal: dimension mismatch");
  if (!is_optimal(set, r0, set.tolerance)) {
    throw std::invalid_argument("tangent_normal: base rotation is not a member of the set");
  }
  const auto basis = orthonormal_skew_basis(set.n);
  const int m = static_cast<int>(basis.size());
  const Matrix core = set.m_tilde.transpose() * r0.entries();
  Matrix form(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      const double value =
          0.5 * (core * (basis[a] * basis[b] + basis[b] * basis[a])).trace();
      form(a, b) = value;
      form(b, a) = value;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(form);

  TangentNormalBasis result;
  result.spectral_gap = 0.0;
  for (int i = 0; i < m; ++i) {
    Matrix w = Matrix::Zero(set.n, set.n);
    for (int a = 0; a < m; ++a) w += es.eigenvectors()(a, i) * basis[a];
    if (std::abs(es.eigenvalues()(i)) <= set.tolerance) {
      result.tangent.emplace_back(std::move(w));
    } else {
      result.normal.emplace_back(std::move(w));
      const double mag = std::abs(es.eigenvalues()(i));
      result.spectral_gap =
          (result.spectral_gap == 0.0) ? mag : std::min(result.spectral_gap, mag);
    }
  }
  if (static_cast<int>(result.tangent.size()) != set.dimension()) {
    throw NumericalInconsistency(
        "tangent dimension " + std::to_string(result.tangent.size()) +
        " does not match the classified set dimension " + std::to_string(set.dimension()) +
        " (spectral gap " + std::to_string(result.spectral_gap) + ")");
  }
  return result;
}

}  // namespace rotopt
