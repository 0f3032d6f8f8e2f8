#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

#include "rotopt/elasticity.hpp"
#include "support/oracles.hpp"

using namespace rotopt;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix random_square_matrix(int n, Rng& rng, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
  return m;
}

// Distance to SO(n) via singular values; valid for det > 0.
double dist_to_rotations(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return (svd.singularValues().array() - 1.0).matrix().norm();
}

// Newton solve of 2 alpha (alpha^2 - 1) = eps: the homogeneous critical
// point of the uniform-tension problem with mu = lambda = 1.
double tension_alpha(double eps) {
  double alpha = 1.0 + eps / 4.0;
  for (int k = 0; k < 60; ++k) {
    const double f = 2.0 * alpha * (alpha * alpha - 1.0) - eps;
    const double df = 6.0 * alpha * alpha - 2.0;
    alpha -= f / df;
  }
  return alpha;
}

double tension_energy(double eps) {
  const double alpha = tension_alpha(eps);
  return square(alpha * alpha - 1.0) - 2.0 * eps * (alpha - 1.0);
}

}  // namespace

TEST_CASE("density: zero on the identity, quartic away from it") {
  DensityParams params{1.0, 0.0};
  CHECK(density_value(params, Matrix::Identity(2, 2)) == doctest::Approx(0.0));
  CHECK(density_gradient(params, Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
  CHECK(density_value(params, 2.0 * Matrix::Identity(2, 2)) ==
        doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("density: frame indifference and the zero set") {
  DensityParams params{1.3, 0.7};
  for (int n : {2, 3}) {
    Rng rng(800 + n);
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix a = random_square_matrix(n, rng, 1.0);
      const RotationMatrix r = haar_rotation(n, rng);
      const double direct = density_value(params, a);
      const double rotated = density_value(params, r.entries() * a);
      CHECK(std::abs(direct - rotated) <= 1e-10 * std::max(1.0, std::abs(direct)));
    }
    for (int trial = 0; trial < 100; ++trial) {
      CHECK(density_value(params, haar_rotation(n, rng).entries()) <= 1e-25);
    }
  }
}

TEST_CASE("density: positivity and coercivity near the rotations") {
  DensityParams params{1.0, 0.5};
  for (int n : {2, 3}) {
    Rng rng(900 + n);
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::uniform_real_distribution<double> small(0.05, 0.5);
    for (int trial = 0; trial < 1000; ++trial) {
      // A = R (I + S) with S symmetric and I + S positive definite, so that
      // dist(A, SO(n)) = |S|.
      const bool near = trial % 2 == 0;
      const double target = near ? small(rng) : mag(rng);
      Matrix s = random_square_matrix(n, rng, 1.0);
      s = (0.5 * (s + s.transpose())).eval();
      s *= target / s.norm();
      Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      if (es.eigenvalues().minCoeff() <= -0.95) continue;
      const Matrix a = haar_rotation(n, rng).entries() * (Matrix::Identity(n, n) + s);
      const double dist = dist_to_rotations(a);
      CHECK(density_value(params, a) > 0.0);
      if (dist <= 0.5) {
        CHECK(density_value(params, a) >= 0.2 * params.mu * dist * dist);
      }
    }
  }
}

TEST_CASE("density: gradient matches central finite differences") {
  DensityParams params{1.7, 0.4};
  Rng rng(77);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a =
          Matrix::Identity(n, n) + random_square_matrix(n, rng, 0.3);
      const Matrix grad = density_gradient(params, a);
      const double h = 1e-5;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Matrix ap = a, am = a;
          ap(i, j) += h;
          am(i, j) -= h;
          const double fd =
              (density_value(params, ap) - density_value(params, am)) / (2.0 * h);
          CHECK(std::abs(grad(i, j) - fd) <= 1e-6 * std::max(1.0, grad.norm()));
        }
      }
    }
  }
}

TEST_CASE("density: Hessian at the identity is twice the quadratic form") {
  DensityParams params{2.0, 1.5};
  Rng rng(78);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix b = random_square_matrix(n, rng, 1.0);
      const double h = 1e-4;
      const double fd = (density_value(params, Matrix::Identity(n, n) + h * b) +
                         density_value(params, Matrix::Identity(n, n) - h * b)) /
                        (h * h);
      const double q = density_quadratic(params, b);
      CHECK(std::abs(fd - 2.0 * q) <= 1e-5 * std::max(1.0, q));
    }
  }
}

TEST_CASE("quadratic form: symmetric part only, bounded below by mu") {
  DensityParams params{1.1, 0.9};
  Rng rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix b = random_square_matrix(3, rng, 1.0);
    const Matrix sym = 0.5 * (b + b.transpose());
    CHECK(density_quadratic(params, b) ==
          doctest::Approx(density_quadratic(params, sym)).epsilon(1e-14));
    CHECK(density_quadratic(params, b) >= params.mu * sym.squaredNorm() - 1e-14);
  }
}

TEST_CASE("total energy: identity deformation costs nothing") {
  const Mesh mesh = Mesh::unit_square(6);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const auto breakdown =
      total_energy(mesh, field, DensityParams{1, 1}, identity_configuration(mesh), 0.05);
  CHECK(breakdown.elastic == doctest::Approx(0.0));
  CHECK(breakdown.total == doctest::Approx(0.0));
}

TEST_CASE("total energy: rigid rotations cost exactly the force deficit") {
  const Mesh mesh = Mesh::unit_square(6);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const auto fm = assemble_force_matrix(mesh, field);
  const DensityParams params{1, 1};
  const double eps = 0.01;
  Rng rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const RotationMatrix r = haar_rotation(2, rng);
    const Matrix y = mesh.vertices() * r.entries().transpose();
    const auto breakdown = total_energy(mesh, field, params, y, eps);
    CHECK(breakdown.elastic <= 1e-24);
    const double expected = -eps * fm.evaluate(r.entries() - Matrix::Identity(2, 2));
    CHECK(breakdown.total == doctest::Approx(expected).epsilon(1e-10));
    CHECK(breakdown.total >= -1e-12);  // equality only at optimal rotations
  }
  // theta = 0.1 closed form: J = -eps * 2 (cos 0.1 - 1).
  const Matrix y = mesh.vertices() * RotationMatrix::planar(0.1).entries().transpose();
  CHECK(total_energy(mesh, field, params, y, eps).total ==
        doctest::Approx(-eps * 2.0 * (std::cos(0.1) - 1.0)).epsilon(1e-12));
}

TEST_CASE("minimize: zero forces keep the identity") {
  const Mesh mesh = Mesh::unit_square(4);
  const auto result = minimize_nonlinear(mesh, ForceField::zero(mesh), DensityParams{1, 1},
                                         0.1, identity_configuration(mesh), {});
  CHECK(result.converged);
  CHECK(result.iterations == 0);
  CHECK(result.energy.total == doctest::Approx(0.0));
}

TEST_CASE("minimize: uniform tension reaches the homogeneous optimum") {
  const Mesh mesh = Mesh::unit_square(16);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const double eps = 0.05;
  MinimizeOptions opts;
  opts.gtol = 1e-10;
  opts.max_iters = 2000;
  const auto result = minimize_nonlinear(mesh, field, DensityParams{1, 1}, eps,
                                         identity_configuration(mesh), opts);
  CHECK(result.converged);
  const double scaled = result.energy.total / (eps * eps);
  CHECK(scaled <= 0.0);
  CHECK(scaled >= -0.2505);
  CHECK(std::abs(result.energy.total - tension_energy(eps)) <= 1e-8);
}

TEST_CASE("minimize: descends from a rotated start") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const DensityParams params{1, 1};
  const double eps = 0.02;
  const Matrix init = mesh.vertices() * RotationMatrix::planar(0.3).entries().transpose();
  const double initial_energy = total_energy(mesh, field, params, init, eps).total;
  MinimizeOptions opts;
  opts.max_iters = 3000;
  const auto result = minimize_nonlinear(mesh, field, params, eps, init, opts);
  CHECK(result.energy.total < initial_energy);
  CHECK(result.converged);
}

TEST_CASE("reference configuration: exact rigid motions are recovered") {
  const Mesh mesh = Mesh::unit_square(5);
  Rng rng(91);
  const RotationMatrix q = haar_rotation(2, rng);
  Vector d(2);
  d << 0.3, -1.2;
  const Matrix y = mesh.vertices() * q.entries().transpose() +
                   Vector::Ones(mesh.num_vertices()) * d.transpose();
  const auto ref = reference_configuration(mesh, y);
  CHECK((ref.rotation.entries() - q.entries()).norm() <= 1e-12);
  CHECK((ref.translation - d).norm() <= 1e-12);

  const auto id_ref = reference_configuration(mesh, identity_configuration(mesh));
  CHECK((id_ref.rotation.entries() - Matrix::Identity(2, 2)).norm() <= 1e-13);
  CHECK(id_ref.translation.norm() <= 1e-13);
}

TEST_CASE("reference configuration: perturbation stays near the rotation") {
  const Mesh mesh = Mesh::unit_square(8);
  const double eps = 1e-3;
  const RotationMatrix q = RotationMatrix::planar(0.8);
  // Smooth displacement v(x).
  Matrix v(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const double x = mesh.vertices()(i, 0), y = mesh.vertices()(i, 1);
    v.row(i) << std::sin(x + y), x * y;
  }
  const Matrix y = (mesh.vertices() + eps * v) * q.entries().transpose();
  const auto ref = reference_configuration(mesh, y);
  CHECK((ref.rotation.entries() - q.entries()).norm() <= 5e-3);

  // Grid-search oracle over the rotation angle: the fitted angle minimizes
  // the W^{1,2} misfit.
  auto misfit = [&](double theta) {
    const RotationMatrix r = RotationMatrix::planar(theta);
    const Vector d = mesh.mean_value(y) - r.entries() * mesh.mean_value(mesh.vertices());
    const Matrix rigid = mesh.vertices() * r.entries().transpose() +
                         Vector::Ones(mesh.num_vertices()) * d.transpose();
    double grad_part = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      grad_part += mesh.cell_measure(c) *
                   (mesh.field_gradient(y, c) - r.entries()).squaredNorm();
    }
    return l2_inner(mesh, y - rigid, y - rigid) + grad_part;
  };
  const double fitted_angle =
      std::atan2(ref.rotation.entries()(0, 1), ref.rotation.entries()(0, 0));
  const double oracle_angle = oracles::golden_argmin(misfit, 0.8 - 0.2, 0.8 + 0.2, 1e-10);
  CHECK(std::abs(fitted_angle - oracle_angle) <= 1e-6);
  // Global minimality against perturbed rotations.
  for (double delta : {-0.05, -0.01, 0.01, 0.05}) {
    CHECK(misfit(fitted_angle + delta) >= misfit(fitted_angle));
  }
}

TEST_CASE("rescaled displacement identities") {
  const Mesh mesh = Mesh::unit_square(4);
  Rng rng(95);
  const RotationMatrix r = haar_rotation(2, rng);
  Vector c(2);
  c << 0.1, 0.2;
  const Matrix rigid = mesh.vertices() * r.entries().transpose() +
                       Vector::Ones(mesh.num_vertices()) * c.transpose();
  const ReferenceConfiguration ref{r, c, true};
  CHECK(rescaled_displacement(mesh, rigid, ref, 0.01).norm() <= 1e-12);

  Matrix v(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    v.row(i) << mesh.vertices()(i, 1), -mesh.vertices()(i, 0) * mesh.vertices()(i, 0);
  }
  const double eps = 0.05;
  const Matrix y = (mesh.vertices() + eps * v) * r.entries().transpose();
  const ReferenceConfiguration ref0{r, Vector::Zero(2), true};
  CHECK((rescaled_displacement(mesh, y, ref0, eps) - v).norm() <= 1e-12);
}

TEST_CASE("linear solve: zero forces give the zero displacement") {
  const Mesh mesh = Mesh::unit_square(4);
  const auto [u, value] = solve_linear(mesh, ForceField::zero(mesh), DensityParams{1, 1},
                                       RotationMatrix::identity(2));
  CHECK(u.norm() <= 1e-12);
  CHECK(value == doctest::Approx(0.0));
}

TEST_CASE("linear solve: uniform tension has the homogeneous-strain solution") {
  const Mesh mesh = Mesh::unit_square(12);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});

  for (DensityParams params : {DensityParams{1, 1}, DensityParams{2, 0}}) {
    const auto [u, value] = solve_linear(mesh, field, params, RotationMatrix::identity(2));
    const double s = 1.0 / (2.0 * (params.mu + params.lambda));
    CHECK(value == doctest::Approx(-s).epsilon(1e-10));
    // Gauge-aligned homogeneous strain: u = s (x - x_mean).
    const Vector x_mean = mesh.mean_value(mesh.vertices());
    const Matrix expected =
        s * (mesh.vertices() - Vector::Ones(mesh.num_vertices()) * x_mean.transpose());
    CHECK((u - expected).norm() <= 1e-10);
  }
}

TEST_CASE("linear solve: rejects non-optimal rotations") {
  const Mesh mesh = Mesh::unit_square(4);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  CHECK_THROWS_AS(solve_linear(mesh, field, DensityParams{1, 1}, RotationMatrix::planar(0.3)),
                  IllPosedLoad);
}

TEST_CASE("linear energy: invariant under infinitesimal rigid motions") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const DensityParams params{1, 1};
  const auto [u, value] = solve_linear(mesh, field, params, RotationMatrix::identity(2));
  CHECK(linear_energy(mesh, field, params, u, RotationMatrix::identity(2)) ==
        doctest::Approx(value).epsilon(1e-12));

  Rng rng(99);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double omega = uni(rng);
    Vector b(2);
    b << uni(rng), uni(rng);
    const Matrix rigid = mesh.vertices() * SkewMatrix::planar(omega).entries().transpose() +
                         Vector::Ones(mesh.num_vertices()) * b.transpose();
    const double shifted =
        linear_energy(mesh, field, params, u + rigid, RotationMatrix::identity(2));
    CHECK(std::abs(shifted - value) <= 1e-10 * std::max(1.0, std::abs(value)));
  }
}

TEST_CASE("minimize over rotations: singleton reduces to the direct solve") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const DensityParams params{1, 1};
  const auto set = classify(normalize_force(assemble_force_matrix(mesh, field)));
  REQUIRE(set.kind == SetKind::Singleton);
  const auto joint = minimize_over_rotations(mesh, field, params, set);
  const auto [u, value] = solve_linear(mesh, field, params, RotationMatrix::identity(2));
  CHECK(joint.value == doctest::Approx(value).epsilon(1e-12));
  CHECK((joint.displacement - u).norm() <= 1e-10);
}

TEST_CASE("minimize over rotations: zero forces are indifferent") {
  const Mesh mesh = Mesh::unit_square(4);
  const auto field = ForceField::zero(mesh);
  const auto set = classify(normalize_force(assemble_force_matrix(mesh, field)));
  REQUIRE(set.kind == SetKind::FullGroup);
  const auto joint = minimize_over_rotations(mesh, field, DensityParams{1, 1}, set);
  CHECK(std::abs(joint.value) <= 1e-12);
}

TEST_CASE("minimize over rotations: tangential field matches an exhaustive grid") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "tangential-2d", {});
  const DensityParams params{1, 1};
  const auto set = classify(normalize_force(assemble_force_matrix(mesh, field)));
  REQUIRE(set.kind == SetKind::FullGroup);

  const auto joint = minimize_over_rotations(mesh, field, params, set);

  const LinearSolver solver(mesh, field, params);
  double grid_best = 1e300;
  for (int k = 0; k < 4096; ++k) {
    const double theta = -kPi + 2.0 * kPi * k / 4096;
    const auto member = set.to_original_frame(set.full_group_member({theta}));
    grid_best = std::min(grid_best, solver.solve(member).second);
  }
  CHECK(joint.value <= grid_best + 1e-12);
  CHECK(std::abs(joint.value - grid_best) <= 1e-4 * std::max(1.0, std::abs(grid_best)));
}

TEST_CASE("recovery sequence: rigid base case and closed-form tension energy") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const auto set = classify(normalize_force(assemble_force_matrix(mesh, field)));
  const Matrix zero_u = Matrix::Zero(mesh.num_vertices(), 2);

  const Matrix y0 = recovery_sequence(mesh, set, zero_u, RotationMatrix::identity(2),
                                      SkewMatrix::zero(2), 0.01);
  CHECK((y0 - mesh.vertices()).norm() <= 1e-14);

  for (double eps : {0.1, 0.01}) {
    const Matrix y = recovery_sequence(mesh, set, zero_u, RotationMatrix::identity(2),
                                       SkewMatrix::planar(1.0), eps);
    const double j = total_energy(mesh, field, DensityParams{1, 1}, y, eps).total;
    CHECK(j == doctest::Approx(-2.0 * eps * (std::cos(std::sqrt(eps)) - 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("recovery sequence: rejects tangential fluctuation directions") {
  const Mesh mesh = Mesh::unit_square(4);
  const auto field = ForceField::builtin(mesh, "tangential-2d", {});
  const auto set = classify(normalize_force(assemble_force_matrix(mesh, field)));
  REQUIRE(set.kind == SetKind::FullGroup);
  const Matrix zero_u = Matrix::Zero(mesh.num_vertices(), 2);
  CHECK_THROWS_AS(recovery_sequence(mesh, set, zero_u, RotationMatrix::identity(2),
                                    SkewMatrix::planar(1.0), 0.01),
                  std::invalid_argument);
}

TEST_CASE("limit energy: named values for uniform tension") {
  const Mesh mesh = Mesh::unit_square(8);
  const auto field = ForceField::builtin(mesh, "uniform-tension", {});
  const DensityParams params{1, 1};
  const Matrix zero_u = Matrix::Zero(mesh.num_vertices(), 2);
  const auto id = RotationMatrix::identity(2);

  CHECK(limit_energy(mesh, field, params, zero_u, id, SkewMatrix::zero(2)) ==
        doctest::Approx(0.0));

  const auto [u, value] = solve_linear(mesh, field, params, id);
  CHECK(limit_energy(mesh, field, params, u, id, SkewMatrix::zero(2)) ==
        doctest::Approx(-0.25).epsilon(1e-10));

  CHECK(limit_energy(mesh, field, params, zero_u, id, SkewMatrix::planar(1.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rigid-motion projection annihilates rigid fields and is idempotent") {
  const Mesh mesh = Mesh::unit_square(6);
  Rng rng(101);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const Matrix rigid = mesh.vertices() * SkewMatrix::planar(uni(rng)).entries().transpose() +
                       Vector::Ones(mesh.num_vertices()) * Vector::Constant(2, uni(rng)).transpose();
  CHECK(l2_norm(mesh, project_out_rigid_motion(mesh, rigid)) <= 1e-12);

  Matrix u(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const double x = mesh.vertices()(i, 0), y = mesh.vertices()(i, 1);
    u.row(i) << x * x, std::sin(y);
  }
  const Matrix once = project_out_rigid_motion(mesh, u);
  const Matrix twice = project_out_rigid_motion(mesh, once);
  CHECK((once - twice).norm() <= 1e-10);
  // The projected field is L2-orthogonal to every infinitesimal rigid motion.
  const Matrix spin = mesh.vertices() * SkewMatrix::planar(1.0).entries().transpose();
  CHECK(std::abs(l2_inner(mesh, once, spin)) <= 1e-10);
  CHECK(mesh.mean_value(once).norm() <= 1e-12);
}
