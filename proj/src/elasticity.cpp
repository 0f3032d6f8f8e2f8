#include "rotopt/elasticity.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>

namespace rotopt {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

Vector flatten(const Matrix& nodal) {
  Vector v(nodal.size());
  const int n = static_cast<int>(nodal.cols());
  for (int row = 0; row < nodal.rows(); ++row) {
    v.segment(row * n, n) = nodal.row(row).transpose();
  }
  return v;
}

Matrix unflatten(const Vector& v, int nv, int n) {
  Matrix nodal(nv, n);
  for (int row = 0; row < nv; ++row) {
    nodal.row(row) = v.segment(row * n, n).transpose();
  }
  return nodal;
}

double load_pairing(const Matrix& load, const Matrix& nodal) {
  return load.cwiseProduct(nodal).sum();
}

}  // namespace

double density_value(const DensityParams& params, const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const Matrix strain = a.transpose() * a - Matrix::Identity(n, n);
  const double trace = strain.trace();
  return 0.25 * params.mu * strain.squaredNorm() + 0.125 * params.lambda * trace * trace;
}

Matrix density_gradient(const DensityParams& params, const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const Matrix strain = a.transpose() * a - Matrix::Identity(n, n);
  return params.mu * a * strain + 0.5 * params.lambda * strain.trace() * a;
}

double density_quadratic(const DensityParams& params, const Matrix& b) {
  const Matrix sym = 0.5 * (b + b.transpose());
  const double trace = b.trace();
  return params.mu * sym.squaredNorm() + 0.5 * params.lambda * trace * trace;
}

Matrix identity_configuration(const Mesh& mesh) { return mesh.vertices(); }

EnergyBreakdown total_energy(const Mesh& mesh, const ForceField& field,
                             const DensityParams& params, const Matrix& deformation,
                             double epsilon) {
  params.validate();
  if (deformation.rows() != mesh.num_vertices() || deformation.cols() != mesh.dim()) {
    throw std::invalid_argument("deformation does not match the mesh");
  }
  EnergyBreakdown breakdown;
  breakdown.epsilon = epsilon;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    breakdown.elastic += mesh.cell_measure(c) *
                         density_value(params, mesh.field_gradient(deformation, c));
  }
  const Matrix displacement = deformation - mesh.vertices();
  const ForceField traction_only{field.traction,
                                 Matrix::Zero(mesh.num_vertices(), mesh.dim())};
  ForceField body_only = ForceField::zero(mesh);
  body_only.body = field.body;
  breakdown.traction_work =
      epsilon * load_pairing(nodal_load(mesh, traction_only), displacement);
  breakdown.body_work = epsilon * load_pairing(nodal_load(mesh, body_only), displacement);
  breakdown.total = breakdown.elastic - breakdown.traction_work - breakdown.body_work;
  return breakdown;
}

MinimizeResult minimize_nonlinear(const Mesh& mesh, const ForceField& field,
                                  const DensityParams& params, double epsilon,
                                  const Matrix& init, const MinimizeOptions& opts) {
  params.validate();
  if (init.rows() != mesh.num_vertices() || init.cols() != mesh.dim() || !init.allFinite()) {
    throw std::invalid_argument("initial deformation does not match the mesh");
  }
  const int nv = mesh.num_vertices();
  const int n = mesh.dim();
  const Matrix load = nodal_load(mesh, field);

  auto energy = [&](const Matrix& y) {
    double elastic = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      elastic += mesh.cell_measure(c) * density_value(params, mesh.field_gradient(y, c));
    }
    return elastic - epsilon * load_pairing(load, y - mesh.vertices());
  };
  auto gradient = [&](const Matrix& y) {
    Matrix g = -epsilon * load;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& cell = mesh.cells()[c];
      const Matrix& shape = mesh.shape_gradients(c);
      const Matrix piola = density_gradient(params, mesh.field_gradient(y, c));
      const Matrix local = mesh.cell_measure(c) * shape * piola.transpose();
      for (int a = 0; a <= n; ++a) g.row(cell[a]) += local.row(a);
    }
    return g;
  };
  auto recenter = [&](Matrix& y) {
    const Vector mean = mesh.mean_value(y - mesh.vertices());
    y.rowwise() -= mean.transpose();
  };

  Matrix y = init;
  recenter(y);
  double value = energy(y);
  Matrix grad = gradient(y);

  MinimizeResult best;
  best.deformation = y;
  best.gradient_norm = grad.norm();

  const double gtol = opts.gtol * std::max(1.0, epsilon);
  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  Vector g_flat = flatten(grad);

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const double gnorm = g_flat.norm();
    if (gnorm <= gtol) break;

    // Two-loop recursion.
    Vector q = g_flat;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Vector direction = -q;
    if (direction.dot(g_flat) >= 0.0) direction = -g_flat;

    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(gnorm, 1e-30)) : 1.0;
    const double slope = direction.dot(g_flat);
    Matrix y_new;
    double value_new = value;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      y_new = y + unflatten(step * direction, nv, n);
      recenter(y_new);
      value_new = energy(y_new);
      if (value_new <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Matrix grad_new = gradient(y_new);
    const Vector g_new_flat = flatten(grad_new);
    const Vector s = flatten(y_new - y);
    const Vector dy = g_new_flat - g_flat;
    const double sy = s.dot(dy);
    if (sy > 1e-12 * s.norm() * dy.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(dy);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    y = std::move(y_new);
    value = value_new;
    grad = grad_new;
    g_flat = g_new_flat;
  }

  MinimizeResult result;
  result.deformation = y;
  result.iterations = iter;
  result.gradient_norm = g_flat.norm();
  result.converged = result.gradient_norm <= gtol;
  result.energy = total_energy(mesh, field, params, y, epsilon);
  return result;
}

ReferenceConfiguration reference_configuration(const Mesh& mesh, const Matrix& deformation) {
  if (deformation.rows() != mesh.num_vertices() || deformation.cols() != mesh.dim() ||
      !deformation.allFinite()) {
    throw std::invalid_argument("deformation does not match the mesh");
  }
  const int n = mesh.dim();
  const Vector y_mean = mesh.mean_value(deformation);
  const Vector x_mean = mesh.mean_value(mesh.vertices());

  // K = \int (y - y_mean)(x - x_mean)^T dx + \int grad y dx, both exact.
  Matrix correlation = Matrix::Zero(n, n);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    const Matrix mass = simplex_mass_matrix(n + 1, mesh.cell_measure(c));
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; b <= n; ++b) {
        correlation += mass(a, b) * deformation.row(cell[a]).transpose() *
                       mesh.vertices().row(cell[b]);
      }
    }
    correlation += mesh.cell_measure(c) * mesh.field_gradient(deformation, c);
  }
  correlation -= mesh.total_volume() * y_mean * x_mean.transpose();

  const MaxTraceResult best = max_trace_rotation(correlation);
  ReferenceConfiguration ref{best.rotation,
                             y_mean - best.rotation.entries() * x_mean, best.unique};
  return ref;
}

Matrix rescaled_displacement(const Mesh& mesh, const Matrix& deformation,
                             const ReferenceConfiguration& ref, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const Matrix rigid = mesh.vertices() * ref.rotation.entries().transpose() +
                       Vector::Ones(mesh.num_vertices()) * ref.translation.transpose();
  return (deformation - rigid) * ref.rotation.entries() / epsilon;
}

// ---------------------------------------------------------------------------
// Linear solver

struct LinearSolver::Impl {
  const Mesh& mesh;
  Matrix load;  // nv x n nodal load vectors
  SparseMatrix stiffness;
  Matrix constraints;  // nc x ndof, dense rows (few)
  Eigen::SparseLU<SparseMatrix> factorization;
  int ndof = 0;
  int nc = 0;
  mutable double stationarity_residual = 0.0;

  Impl(const Mesh& mesh_in, const ForceField& field, const DensityParams& params)
      : mesh(mesh_in) {
    const int n = mesh.dim();
    const int nv = mesh.num_vertices();
    ndof = nv * n;
    load = nodal_load(mesh, field);

    std::vector<Triplet> triplets;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& cell = mesh.cells()[c];
      const Matrix& shape = mesh.shape_gradients(c);
      const double measure = mesh.cell_measure(c);
      for (int a = 0; a <= n; ++a) {
        for (int b = 0; b <= n; ++b) {
          const double dot = shape.row(a).dot(shape.row(b));
          for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
              double value = params.mu * shape(a, k) * shape(b, i) +
                             params.lambda * shape(a, i) * shape(b, k);
              if (i == k) value += params.mu * dot;
              value *= measure;
              triplets.emplace_back(cell[a] * n + i, cell[b] * n + k, value);
            }
          }
        }
      }
    }
    stiffness.resize(ndof, ndof);
    stiffness.setFromTriplets(triplets.begin(), triplets.end());

    // Gauge constraints: zero mean displacement, zero mean skew gradient.
    nc = n + n * (n - 1) / 2;
    constraints = Matrix::Zero(nc, ndof);
    for (int i = 0; i < n; ++i) {
      for (int v = 0; v < nv; ++v) constraints(i, v * n + i) = mesh.lumped_mass()(v);
    }
    int row = n;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++row) {
        for (int c = 0; c < mesh.num_cells(); ++c) {
          const auto& cell = mesh.cells()[c];
          const Matrix& shape = mesh.shape_gradients(c);
          const double measure = mesh.cell_measure(c);
          for (int a = 0; a <= n; ++a) {
            constraints(row, cell[a] * n + i) += measure * shape(a, j);
            constraints(row, cell[a] * n + j) -= measure * shape(a, i);
          }
        }
      }
    }
    for (int r = 0; r < nc; ++r) constraints.row(r) /= constraints.row(r).norm();

    std::vector<Triplet> kkt_triplets = std::move(triplets);
    kkt_triplets.clear();
    for (int outer = 0; outer < stiffness.outerSize(); ++outer) {
      for (SparseMatrix::InnerIterator it(stiffness, outer); it; ++it) {
        kkt_triplets.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int r = 0; r < nc; ++r) {
      for (int d = 0; d < ndof; ++d) {
        if (constraints(r, d) != 0.0) {
          kkt_triplets.emplace_back(ndof + r, d, constraints(r, d));
          kkt_triplets.emplace_back(d, ndof + r, constraints(r, d));
        }
      }
    }
    SparseMatrix kkt(ndof + nc, ndof + nc);
    kkt.setFromTriplets(kkt_triplets.begin(), kkt_triplets.end());
    factorization.compute(kkt);
    if (factorization.info() != Eigen::Success) {
      throw NumericalInconsistency("linear elasticity saddle-point factorization failed");
    }
  }
};

LinearSolver::LinearSolver(const Mesh& mesh, const ForceField& field,
                           const DensityParams& params)
    : impl_(std::make_unique<Impl>(mesh, field, params)) {
  params.validate();
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::pair<Matrix, double> LinearSolver::solve(const RotationMatrix& r0) const {
  const int n = impl_->mesh.dim();
  const int nv = impl_->mesh.num_vertices();
  if (r0.dim() != n) throw std::invalid_argument("solve: rotation dimension mismatch");

  const Matrix b_nodal = impl_->load * r0.entries();
  Vector rhs = Vector::Zero(impl_->ndof + impl_->nc);
  rhs.head(impl_->ndof) = flatten(b_nodal);

  const Vector solution = impl_->factorization.solve(rhs);
  if (impl_->factorization.info() != Eigen::Success) {
    throw NumericalInconsistency("linear elasticity solve failed");
  }
  const Vector u = solution.head(impl_->ndof);
  const Vector multipliers = solution.tail(impl_->nc);

  const Vector residual = impl_->stiffness * u +
                          impl_->constraints.transpose() * multipliers -
                          rhs.head(impl_->ndof);
  impl_->stationarity_residual =
      residual.norm() / std::max(1e-30, rhs.head(impl_->ndof).norm());
  if (impl_->stationarity_residual > 1e-10) {
    throw NumericalInconsistency("stationarity residual " +
                                 std::to_string(impl_->stationarity_residual) +
                                 " exceeds 1e-10");
  }

  const double value = 0.5 * u.dot(impl_->stiffness * u) - u.dot(rhs.head(impl_->ndof));
  return {unflatten(u, nv, n), value};
}

double LinearSolver::last_stationarity_residual() const {
  return impl_->stationarity_residual;
}

std::pair<Matrix, double> solve_linear(const Mesh& mesh, const ForceField& field,
                                       const DensityParams& params,
                                       const RotationMatrix& r0) {
  const ForceMatrix fm = assemble_force_matrix(mesh, field);
  const NormalizedForce nf = normalize_force(fm);
  const double pairing = fm.entries.cwiseProduct(r0.entries()).sum();
  const double tolerance = 1e-6 * std::max(1.0, fm.entries.norm());
  if (pairing < nf.max_value - tolerance) {
    throw IllPosedLoad("rotation is not optimal for the load (deficit " +
                       std::to_string(nf.max_value - pairing) +
                       "); the quadratic problem is unbounded below");
  }
  return LinearSolver(mesh, field, params).solve(r0);
}

double linear_energy(const Mesh& mesh, const ForceField& field, const DensityParams& params,
                     const Matrix& u, const RotationMatrix& r0) {
  double quad = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    quad += mesh.cell_measure(c) * density_quadratic(params, mesh.field_gradient(u, c));
  }
  return quad - load_pairing(nodal_load(mesh, field) * r0.entries(), u);
}

namespace {

// Compact Nelder-Mead on a low-dimensional chart; deterministic.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, double step, int max_iters) {
  const int d = static_cast<int>(start.size());
  std::vector<std::vector<double>> simplex{start};
  for (int i = 0; i < d; ++i) {
    auto vertex = start;
    vertex[i] += step;
    simplex.push_back(std::move(vertex));
  }
  std::vector<double> values;
  for (const auto& v : simplex) values.push_back(f(v));

  auto order = [&]() {
    std::vector<int> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> v2;
    for (int i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    order();
    if (std::abs(values.back() - values.front()) < 1e-13 * (1.0 + std::abs(values.front()))) {
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) centroid[j] += simplex[i][j] / d;
    }
    auto blend = [&](double t) {
      std::vector<double> p(d);
      for (int j = 0; j < d; ++j) p[j] = centroid[j] + t * (simplex[d][j] - centroid[j]);
      return p;
    };
    const auto reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < values[0]) {
      const auto expanded = blend(-2.0);
      const double fe = f(expanded);
      simplex[d] = (fe < fr) ? expanded : reflected;
      values[d] = std::min(fe, fr);
    } else if (fr < values[d - 1]) {
      simplex[d] = reflected;
      values[d] = fr;
    } else {
      const auto contracted = blend(0.5);
      const double fc = f(contracted);
      if (fc < values[d]) {
        simplex[d] = contracted;
        values[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          for (int j = 0; j < d; ++j) {
            simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
          }
          values[i] = f(simplex[i]);
        }
      }
    }
  }
  order();
  return simplex[0];
}

double golden_section(const std::function<double(double)>& f, double lo, double hi,
                      double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

MinOverRotationsResult minimize_over_rotations(const Mesh& mesh, const ForceField& field,
                                               const DensityParams& params,
                                               const OptimalRotationSet& set) {
  const LinearSolver solver(mesh, field, params);
  constexpr double pi = std::numbers::pi;

  auto value_at = [&](const RotationMatrix& member) {
    return solver.solve(set.to_original_frame(member)).second;
  };
  auto finish = [&](const RotationMatrix& member) {
    const RotationMatrix original = set.to_original_frame(member);
    auto [u, value] = solver.solve(original);
    return MinOverRotationsResult{std::move(u), original, value};
  };

  switch (set.kind) {
    case SetKind::Singleton:
      return finish(set.base);
    case SetKind::Circle: {
      auto f = [&](double theta) { return value_at(set.circle_member(theta)); };
      double best_theta = 0.0, best = f(0.0);
      for (int k = 1; k < 32; ++k) {
        const double theta = -pi + 2.0 * pi * k / 32;
        const double v = f(theta);
        if (v < best) {
          best = v;
          best_theta = theta;
        }
      }
      const double width = 2.0 * pi / 32;
      const double theta =
          golden_section(f, best_theta - width, best_theta + width, 1e-10);
      if (f(theta) <= best) best_theta = theta;
      return finish(set.circle_member(best_theta));
    }
    case SetKind::ProjectivePlane: {
      auto f = [&](const std::vector<double>& p) {
        return value_at(set.projective_member(p[0], p[1]));
      };
      std::vector<double> best_chart{0.0, 0.0};
      double best = f(best_chart);
      for (int i = 0; i <= 8; ++i) {
        for (int j = 0; j < 16; ++j) {
          const std::vector<double> chart{0.5 * pi * i / 8, 2.0 * pi * j / 16};
          const double v = f(chart);
          if (v < best) {
            best = v;
            best_chart = chart;
          }
        }
      }
      const auto chart = nelder_mead(f, best_chart, 0.1, 200);
      if (f(chart) <= best) best_chart = chart;
      return finish(set.projective_member(best_chart[0], best_chart[1]));
    }
    case SetKind::FullGroup: {
      if (set.n == 2) {
        auto f = [&](double theta) { return value_at(set.full_group_member({theta})); };
        double best_theta = 0.0, best = f(0.0);
        for (int k = 1; k < 32; ++k) {
          const double theta = -pi + 2.0 * pi * k / 32;
          const double v = f(theta);
          if (v < best) {
            best = v;
            best_theta = theta;
          }
        }
        const double width = 2.0 * pi / 32;
        const double theta =
            golden_section(f, best_theta - width, best_theta + width, 1e-10);
        if (f(theta) <= best) best_theta = theta;
        return finish(set.full_group_member({best_theta}));
      }
      auto f = [&](const std::vector<double>& p) {
        return value_at(set.full_group_member(p));
      };
      std::vector<double> best_chart{0.0, 0.0, 0.0};
      double best = f(best_chart);
      for (int i = 0; i <= 4; ++i) {
        for (int j = 0; j < 6; ++j) {
          for (int k = 0; k < 6; ++k) {
            const std::vector<double> chart{0.5 * pi * i / 4, pi * j / 6, 2.0 * pi * k / 6};
            const double v = f(chart);
            if (v < best) {
              best = v;
              best_chart = chart;
            }
          }
        }
      }
      const auto chart = nelder_mead(f, best_chart, 0.1, 300);
      if (f(chart) <= best) best_chart = chart;
      return finish(set.full_group_member(best_chart));
    }
  }
  return finish(set.base);
}

Matrix recovery_sequence(const Mesh& mesh, const OptimalRotationSet& set, const Matrix& u0,
                         const RotationMatrix& r0, const SkewMatrix& w0, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (u0.rows() != mesh.num_vertices() || u0.cols() != mesh.dim()) {
    throw std::invalid_argument("displacement does not match the mesh");
  }
  const RotationMatrix member = set.from_original_frame(r0);
  if (!is_optimal(set, member, 10.0 * set.tolerance)) {
    throw std::invalid_argument("recovery_sequence: base rotation is not a member of the set");
  }
  const auto basis = tangent_normal(set, member);
  double tangent_component = 0.0;
  for (const auto& t : basis.tangent) {
    tangent_component += square(t.entries().cwiseProduct(w0.entries()).sum());
  }
  if (std::sqrt(tangent_component) > 1e-8 * std::max(1.0, w0.norm())) {
    throw std::invalid_argument(
        "recovery_sequence: the fluctuation direction must lie in the normal space of the "
        "set at the base rotation");
  }
  const Matrix q =
      r0.entries() * exp_skew(SkewMatrix(std::sqrt(epsilon) * w0.entries())).entries();
  return (mesh.vertices() + epsilon * u0) * q.transpose();
}

double limit_energy(const Mesh& mesh, const ForceField& field, const DensityParams& params,
                    const Matrix& u0, const RotationMatrix& r0, const SkewMatrix& w0) {
  const ForceMatrix fm = assemble_force_matrix(mesh, field);
  const Matrix fluctuation = r0.entries() * w0.entries() * w0.entries();
  return linear_energy(mesh, field, params, u0, r0) - 0.5 * fm.evaluate(fluctuation);
}

double l2_inner(const Mesh& mesh, const Matrix& u, const Matrix& v) {
  double sum = 0.0;
  const int n = mesh.dim();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    const Matrix mass = simplex_mass_matrix(n + 1, mesh.cell_measure(c));
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; b <= n; ++b) {
        sum += mass(a, b) * u.row(cell[a]).dot(v.row(cell[b]));
      }
    }
  }
  return sum;
}

double l2_norm(const Mesh& mesh, const Matrix& u) { return std::sqrt(l2_inner(mesh, u, u)); }

double h1_seminorm(const Mesh& mesh, const Matrix& u) {
  double sum = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    sum += mesh.cell_measure(c) * mesh.field_gradient(u, c).squaredNorm();
  }
  return std::sqrt(sum);
}

Matrix project_out_rigid_motion(const Mesh& mesh, const Matrix& u) {
  const int n = mesh.dim();
  const int m = n * (n - 1) / 2;
  std::vector<Matrix> generators;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Matrix k = Matrix::Zero(n, n);
      k(i, j) = 1.0;
      k(j, i) = -1.0;
      generators.push_back(std::move(k));
    }
  }
  const Matrix second_moment = mesh.coordinate_second_moment();
  const Vector x_mean = mesh.mean_value(mesh.vertices());
  const double volume = mesh.total_volume();

  Matrix gram = Matrix::Zero(m + n, m + n);
  Vector rhs = Vector::Zero(m + n);
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      gram(p, q) = (generators[p].transpose() * generators[q])
                       .cwiseProduct(second_moment)
                       .sum();
    }
    const Vector kx_mean = generators[p] * x_mean * volume;
    for (int i = 0; i < n; ++i) {
      gram(p, m + i) = kx_mean(i);
      gram(m + i, p) = kx_mean(i);
    }
    rhs(p) = l2_inner(mesh, u, mesh.vertices() * generators[p].transpose());
  }
  for (int i = 0; i < n; ++i) gram(m + i, m + i) = volume;
  const Vector u_mean = mesh.mean_value(u);
  for (int i = 0; i < n; ++i) rhs(m + i) = u_mean(i) * volume;

  const Vector coeffs = gram.ldlt().solve(rhs);
  Matrix skew = Matrix::Zero(n, n);
  for (int p = 0; p < m; ++p) skew += coeffs(p) * generators[p];
  const Vector shift = coeffs.tail(n);
  return u - mesh.vertices() * skew.transpose() -
         Vector::Ones(mesh.num_vertices()) * shift.transpose();
}

}  // namespace rotopt
