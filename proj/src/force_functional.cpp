#include "rotopt/force_functional.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>

namespace rotopt {

namespace {

using nlohmann::json;

ForceField radial_body_field(const Mesh& mesh, const std::function<double(double)>& rho,
                             const Vector& direction) {
  ForceField field = ForceField::zero(mesh);
  const int nv = mesh.num_vertices();
  Vector density(nv);
  for (int v = 0; v < nv; ++v) {
    density(v) = rho(mesh.vertices().row(v).norm());
  }
  // Subtract the discrete mean so the assembled field is equilibrated exactly.
  const double mean = density.dot(mesh.lumped_mass()) / mesh.total_volume();
  density.array() -= mean;
  field.body = density * direction.transpose();
  return field;
}

}  // namespace

ForceField ForceField::zero(const Mesh& mesh) {
  ForceField field;
  field.traction.resize(mesh.boundary().size());
  for (std::size_t i = 0; i < field.traction.size(); ++i) {
    field.traction[i].assign(mesh.boundary()[i].nodes.size(), Vector::Zero(mesh.dim()));
  }
  field.body = Matrix::Zero(mesh.num_vertices(), mesh.dim());
  return field;
}

ForceField ForceField::from_nodal(const Mesh& mesh, const Matrix& traction_nodal,
                                  const Matrix& body_nodal) {
  ForceField field = zero(mesh);
  if (traction_nodal.rows() != mesh.num_vertices() || traction_nodal.cols() != mesh.dim() ||
      body_nodal.rows() != mesh.num_vertices() || body_nodal.cols() != mesh.dim()) {
    throw std::invalid_argument("force field dimensions do not match the mesh");
  }
  if (!traction_nodal.allFinite() || !body_nodal.allFinite()) {
    throw std::invalid_argument("force field contains non-finite values");
  }
  for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
    const auto& facet = mesh.boundary()[i];
    for (std::size_t a = 0; a < facet.nodes.size(); ++a) {
      field.traction[i][a] = traction_nodal.row(facet.nodes[a]).transpose();
    }
  }
  field.body = body_nodal;
  return field;
}

ForceField ForceField::builtin(const Mesh& mesh, const std::string& name, const json& params) {
  const int n = mesh.dim();
  if (name == "uniform-tension" || name == "uniform-compression") {
    const double sign = (name == "uniform-tension") ? 1.0 : -1.0;
    ForceField field = zero(mesh);
    for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
      const auto& facet = mesh.boundary()[i];
      for (std::size_t a = 0; a < facet.nodes.size(); ++a) {
        field.traction[i][a] = sign * facet.normal;
      }
    }
    return field;
  }
  if (name == "tangential-2d") {
    if (n != 2) throw std::invalid_argument("tangential-2d requires a 2D mesh");
    Matrix reflect(2, 2);  // reflection across the x2 axis
    reflect << -1.0, 0.0, 0.0, 1.0;
    ForceField field = zero(mesh);
    for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
      const auto& facet = mesh.boundary()[i];
      for (std::size_t a = 0; a < facet.nodes.size(); ++a) {
        field.traction[i][a] = reflect * facet.tangent;
      }
    }
    return field;
  }
  if (name == "radial-ball") {
    if (n != 3) throw std::invalid_argument("radial-ball requires a 3D mesh");
    const std::string profile = params.value("profile", "linear");
    Vector e1 = Vector::Zero(3);
    e1(0) = 1.0;
    if (profile == "linear") {
      return radial_body_field(mesh, [](double r) { return 1.0 - 4.0 * r / 3.0; }, e1);
    }
    if (profile == "inverse") {
      // rho(r) = 1/r^2 - 2/r, singular at the origin; clamp the center node.
      const double floor = 0.25 / (1 << 3);
      return radial_body_field(
          mesh,
          [floor](double r) {
            const double rc = std::max(r, floor);
            return 1.0 / (rc * rc) - 2.0 / rc;
          },
          e1);
    }
    throw std::invalid_argument("radial-ball: unknown profile '" + profile + "'");
  }
  if (name == "gravity") {
    if (n != 3) throw std::invalid_argument("gravity requires a 3D mesh");
    const double gbar = params.value("gbar", 1.0);
    const double rho0 = params.value("rho0", 1.0);
    Vector rho_grad = Vector::Zero(3);
    if (params.contains("rho_grad")) {
      const auto grad = params.at("rho_grad").get<std::vector<double>>();
      if (grad.size() != 3) throw std::invalid_argument("gravity: rho_grad must have 3 entries");
      rho_grad = Eigen::Map<const Vector>(grad.data(), 3);
    }
    ForceField field = zero(mesh);
    const int nv = mesh.num_vertices();
    Vector density(nv);
    for (int v = 0; v < nv; ++v) {
      density(v) = rho0 + rho_grad.dot(mesh.vertices().row(v).transpose());
    }
    const double mean = density.dot(mesh.lumped_mass()) / mesh.total_volume();
    density.array() -= mean;
    Vector e3 = Vector::Zero(3);
    e3(2) = 1.0;
    field.body = -gbar * density * e3.transpose();
    return field;
  }
  throw std::invalid_argument("unknown builtin field '" + name + "'");
}

ForceField ForceField::from_json(const Mesh& mesh, const json& j) {
  if (!j.is_object()) throw ConfigError("field: expected a JSON object");
  if (j.contains("builtin")) {
    try {
      return builtin(mesh, j.at("builtin").get<std::string>(),
                     j.value("params", json::object()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("field/builtin: ") + e.what());
    }
  }
  Matrix traction = Matrix::Zero(mesh.num_vertices(), mesh.dim());
  Matrix body = Matrix::Zero(mesh.num_vertices(), mesh.dim());
  auto fill = [&](const char* key, Matrix& target) {
    if (!j.contains(key)) return;
    const auto& map = j.at(key);
    if (!map.is_object()) throw ConfigError(std::string("field/") + key + ": expected an object");
    for (const auto& [node_str, value] : map.items()) {
      int node = -1;
      try {
        node = std::stoi(node_str);
      } catch (...) {
        throw ConfigError(std::string("field/") + key + ": key '" + node_str +
                          "' is not a node index");
      }
      if (node < 0 || node >= mesh.num_vertices()) {
        throw ConfigError(std::string("field/") + key + ": node " + node_str + " out of range");
      }
      const auto vec = value.get<std::vector<double>>();
      if (static_cast<int>(vec.size()) != mesh.dim()) {
        throw ConfigError(std::string("field/") + key + "/" + node_str + ": expected " +
                          std::to_string(mesh.dim()) + " components");
      }
      for (int k = 0; k < mesh.dim(); ++k) target(node, k) = vec[k];
    }
  };
  fill("traction", traction);
  fill("body", body);
  if (!j.contains("traction") && !j.contains("body")) {
    throw ConfigError("field: expected 'builtin' or 'traction'/'body'");
  }
  return from_nodal(mesh, traction, body);
}

double ForceField::traction_norm(const Mesh& mesh) const {
  double sq_norm = 0.0;
  for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
    const auto& facet = mesh.boundary()[i];
    const Matrix mass = simplex_mass_matrix(static_cast<int>(facet.nodes.size()), facet.measure);
    for (std::size_t a = 0; a < facet.nodes.size(); ++a) {
      for (std::size_t b = 0; b < facet.nodes.size(); ++b) {
        sq_norm += mass(a, b) * traction[i][a].dot(traction[i][b]);
      }
    }
  }
  return std::sqrt(sq_norm);
}

double ForceField::body_norm(const Mesh& mesh) const {
  double sq_norm = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    const Matrix mass = simplex_mass_matrix(mesh.dim() + 1, mesh.cell_measure(c));
    for (std::size_t a = 0; a < cell.size(); ++a) {
      for (std::size_t b = 0; b < cell.size(); ++b) {
        sq_norm += mass(a, b) * body.row(cell[a]).dot(body.row(cell[b]));
      }
    }
  }
  return std::sqrt(sq_norm);
}

Matrix nodal_load(const Mesh& mesh, const ForceField& field) {
  Matrix load = Matrix::Zero(mesh.num_vertices(), mesh.dim());
  for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
    const auto& facet = mesh.boundary()[i];
    const Matrix mass = simplex_mass_matrix(static_cast<int>(facet.nodes.size()), facet.measure);
    for (std::size_t a = 0; a < facet.nodes.size(); ++a) {
      for (std::size_t b = 0; b < facet.nodes.size(); ++b) {
        load.row(facet.nodes[b]) += mass(a, b) * field.traction[i][a].transpose();
      }
    }
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells()[c];
    const Matrix mass = simplex_mass_matrix(mesh.dim() + 1, mesh.cell_measure(c));
    for (std::size_t a = 0; a < cell.size(); ++a) {
      for (std::size_t b = 0; b < cell.size(); ++b) {
        load.row(cell[b]) += mass(a, b) * field.body.row(cell[a]);
      }
    }
  }
  return load;
}

Vector check_equilibrated(const Mesh& mesh, const ForceField& field) {
  return nodal_load(mesh, field).colwise().sum().transpose();
}

ForceMatrix assemble_force_matrix(const Mesh& mesh, const ForceField& field) {
  const Matrix load = nodal_load(mesh, field);
  ForceMatrix result;
  result.entries = load.transpose() * mesh.vertices();
  result.equilibration_residual = load.colwise().sum().transpose();
  result.torque_residual = (result.entries - result.entries.transpose()).norm();

  const double scale = field.traction_norm(mesh) * std::sqrt(mesh.boundary_area()) +
                       field.body_norm(mesh) * std::sqrt(mesh.total_volume());
  if (result.equilibration_residual.norm() > 1e-8 * scale) {
    result.warnings.push_back(
        "forces are not equilibrated: |residual| = " +
        std::to_string(result.equilibration_residual.norm()) + " exceeds 1e-8 * " +
        std::to_string(scale));
  }
  return result;
}

double balance_residuals(const ForceMatrix& m) {
  return (m.entries - m.entries.transpose()).norm() / std::max(1.0, m.entries.norm());
}

}  // namespace rotopt
