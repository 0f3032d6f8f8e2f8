#include "rotopt/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

namespace rotopt {

namespace {

using nlohmann::json;

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Faces of a cell: edges of a triangle, triangles of a tet.
std::vector<std::vector<int>> cell_faces(const std::vector<int>& cell) {
  std::vector<std::vector<int>> faces;
  const int k = static_cast<int>(cell.size());
  for (int drop = 0; drop < k; ++drop) {
    std::vector<int> face;
    for (int i = 0; i < k; ++i) {
      if (i != drop) face.push_back(cell[i]);
    }
    faces.push_back(std::move(face));
  }
  return faces;
}

Vector facet_centroid(const Matrix& vertices, const std::vector<int>& nodes) {
  Vector c = Vector::Zero(vertices.cols());
  for (int v : nodes) c += vertices.row(v).transpose();
  return c / static_cast<double>(nodes.size());
}

}  // namespace

Matrix simplex_mass_matrix(int node_count, double measure) {
  const double scale = measure / (node_count * (node_count + 1));
  Matrix m = Matrix::Constant(node_count, node_count, scale);
  m.diagonal().array() *= 2.0;
  return m;
}

Mesh::Mesh(int dim, Matrix vertices, std::vector<std::vector<int>> cells,
           std::vector<BoundaryFacet> boundary)
    : dim_(dim),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      boundary_(std::move(boundary)) {
  if (dim_ != 2 && dim_ != 3) {
    throw std::invalid_argument("mesh dimension must be 2 or 3");
  }
  if (vertices_.cols() != dim_) {
    throw std::invalid_argument("vertex coordinate count does not match dimension");
  }
  if (!vertices_.allFinite()) {
    throw std::invalid_argument("mesh vertices contain non-finite values");
  }
  const int nv = num_vertices();

  cell_measures_.resize(cells_.size());
  shape_gradients_.resize(cells_.size());
  lumped_mass_ = Vector::Zero(nv);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cell = cells_[c];
    if (static_cast<int>(cell.size()) != dim_ + 1) {
      throw std::invalid_argument("cell has wrong number of vertices");
    }
    for (int v : cell) {
      if (v < 0 || v >= nv) throw std::invalid_argument("cell vertex index out of range");
    }
    Matrix edges(dim_, dim_);
    for (int a = 1; a <= dim_; ++a) {
      edges.col(a - 1) = (vertices_.row(cell[a]) - vertices_.row(cell[0])).transpose();
    }
    const double det = edges.determinant();
    const double measure = std::abs(det) / factorial(dim_);
    if (measure <= 0.0 || !std::isfinite(measure)) {
      throw std::invalid_argument("degenerate cell (zero measure)");
    }
    cell_measures_[c] = measure;
    total_volume_ += measure;

    Matrix grads(dim_ + 1, dim_);
    const Matrix inv = edges.inverse();
    for (int a = 1; a <= dim_; ++a) grads.row(a) = inv.row(a - 1);
    grads.row(0) = -grads.block(1, 0, dim_, dim_).colwise().sum();
    shape_gradients_[c] = std::move(grads);

    for (int v : cell) lumped_mass_(v) += measure / (dim_ + 1);
  }

  // Boundary facets must tile the set of once-used cell faces exactly.
  std::map<std::vector<int>, std::pair<int, int>> face_use;  // face -> (count, cell)
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (auto& face : cell_faces(cells_[c])) {
      auto [it, inserted] = face_use.try_emplace(sorted(face), 0, static_cast<int>(c));
      it->second.first += 1;
    }
  }
  std::set<std::vector<int>> exterior;
  for (const auto& [face, use] : face_use) {
    if (use.first == 1) exterior.insert(face);
  }
  if (exterior.size() != boundary_.size()) {
    throw std::invalid_argument("boundary facets do not tile the mesh boundary");
  }

  Vector normal_sum = Vector::Zero(dim_);
  std::set<std::vector<int>> claimed;
  for (auto& facet : boundary_) {
    if (static_cast<int>(facet.nodes.size()) != dim_) {
      throw std::invalid_argument("boundary facet has wrong number of nodes");
    }
    auto it = face_use.find(sorted(facet.nodes));
    if (it == face_use.end() || it->second.first != 1) {
      throw std::invalid_argument("boundary facet is not a once-used cell face");
    }
    if (!claimed.insert(sorted(facet.nodes)).second) {
      throw std::invalid_argument("duplicate boundary facet");
    }
    if (dim_ == 2) {
      const Vector edge = (vertices_.row(facet.nodes[1]) - vertices_.row(facet.nodes[0])).transpose();
      facet.measure = edge.norm();
    } else {
      const Vector e1 = (vertices_.row(facet.nodes[1]) - vertices_.row(facet.nodes[0])).transpose();
      const Vector e2 = (vertices_.row(facet.nodes[2]) - vertices_.row(facet.nodes[0])).transpose();
      facet.measure = 0.5 * Eigen::Vector3d(e1).cross(Eigen::Vector3d(e2)).norm();
    }
    if (facet.measure <= 0.0) {
      throw std::invalid_argument("degenerate boundary facet");
    }
    if (facet.normal.size() != dim_ || std::abs(facet.normal.norm() - 1.0) > 1e-8) {
      throw std::invalid_argument("boundary facet normal is not a unit vector");
    }
    const int cell = it->second.second;
    const Vector offset =
        facet_centroid(vertices_, facet.nodes) - facet_centroid(vertices_, cells_[cell]);
    if (facet.normal.dot(offset) <= 0.0) {
      throw std::invalid_argument("boundary facet normal points inward");
    }
    if (dim_ == 2 && facet.tangent.size() != 2) {
      facet.tangent = Vector(2);
      facet.tangent << -facet.normal(1), facet.normal(0);
    }
    boundary_area_ += facet.measure;
    normal_sum += facet.measure * facet.normal;
  }
  if (normal_sum.norm() > 1e-10 * std::max(1.0, boundary_area_)) {
    throw std::invalid_argument("boundary is not closed: sum of facet normals is nonzero");
  }
}

Matrix Mesh::field_gradient(const Matrix& nodal, int c) const {
  const auto& cell = cells_[c];
  const int m = static_cast<int>(nodal.cols());
  Matrix local(dim_ + 1, m);
  for (int a = 0; a <= dim_; ++a) local.row(a) = nodal.row(cell[a]);
  return local.transpose() * shape_gradients_[c];
}

Vector Mesh::mean_value(const Matrix& nodal) const {
  return (nodal.transpose() * lumped_mass_) / total_volume_;
}

Matrix Mesh::coordinate_second_moment() const {
  Matrix moment = Matrix::Zero(dim_, dim_);
  for (int c = 0; c < num_cells(); ++c) {
    const auto& cell = cells_[c];
    const Matrix mass = simplex_mass_matrix(dim_ + 1, cell_measures_[c]);
    for (int a = 0; a <= dim_; ++a) {
      for (int b = 0; b <= dim_; ++b) {
        moment += mass(a, b) * vertices_.row(cell[a]).transpose() * vertices_.row(cell[b]);
      }
    }
  }
  return moment;
}

Mesh Mesh::unit_square(int subdivisions) {
  if (subdivisions < 1) throw std::invalid_argument("unit_square: subdivisions must be >= 1");
  const int s = subdivisions;
  const int row = s + 1;
  Matrix vertices(row * row, 2);
  for (int iy = 0; iy <= s; ++iy) {
    for (int ix = 0; ix <= s; ++ix) {
      vertices.row(iy * row + ix) << static_cast<double>(ix) / s, static_cast<double>(iy) / s;
    }
  }
  std::vector<std::vector<int>> cells;
  cells.reserve(2 * s * s);
  for (int iy = 0; iy < s; ++iy) {
    for (int ix = 0; ix < s; ++ix) {
      const int v00 = iy * row + ix;
      const int v10 = v00 + 1;
      const int v01 = v00 + row;
      const int v11 = v01 + 1;
      cells.push_back({v00, v10, v11});
      cells.push_back({v00, v11, v01});
    }
  }
  std::vector<BoundaryFacet> boundary;
  auto add_edge = [&](int a, int b, double nx, double ny) {
    BoundaryFacet f;
    f.nodes = {a, b};
    f.normal = Vector(2);
    f.normal << nx, ny;
    boundary.push_back(std::move(f));
  };
  for (int ix = 0; ix < s; ++ix) add_edge(ix, ix + 1, 0.0, -1.0);
  for (int iy = 0; iy < s; ++iy) add_edge(iy * row + s, (iy + 1) * row + s, 1.0, 0.0);
  for (int ix = s; ix > 0; --ix) add_edge(s * row + ix, s * row + ix - 1, 0.0, 1.0);
  for (int iy = s; iy > 0; --iy) add_edge(iy * row, (iy - 1) * row, -1.0, 0.0);
  return Mesh(2, std::move(vertices), std::move(cells), std::move(boundary));
}

Mesh Mesh::unit_disk(int boundary_segments) {
  if (boundary_segments < 3) {
    throw std::invalid_argument("unit_disk: boundary_segments must be >= 3");
  }
  const int m = boundary_segments;
  const int rings = std::max(1, static_cast<int>(std::lround(m / (2.0 * std::numbers::pi))));
  Matrix vertices(1 + rings * m, 2);
  vertices.row(0).setZero();
  for (int j = 1; j <= rings; ++j) {
    const double r = static_cast<double>(j) / rings;
    for (int k = 0; k < m; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / m;
      vertices.row(1 + (j - 1) * m + k) << r * std::cos(phi), r * std::sin(phi);
    }
  }
  auto ring_vertex = [&](int j, int k) { return 1 + (j - 1) * m + (k % m); };
  std::vector<std::vector<int>> cells;
  for (int k = 0; k < m; ++k) {
    cells.push_back({0, ring_vertex(1, k), ring_vertex(1, k + 1)});
  }
  for (int j = 1; j < rings; ++j) {
    for (int k = 0; k < m; ++k) {
      cells.push_back({ring_vertex(j, k), ring_vertex(j + 1, k), ring_vertex(j + 1, k + 1)});
      cells.push_back({ring_vertex(j, k), ring_vertex(j + 1, k + 1), ring_vertex(j, k + 1)});
    }
  }
  std::vector<BoundaryFacet> boundary;
  for (int k = 0; k < m; ++k) {
    BoundaryFacet f;
    f.nodes = {ring_vertex(rings, k), ring_vertex(rings, k + 1)};
    const Vector a = vertices.row(f.nodes[0]).transpose();
    const Vector b = vertices.row(f.nodes[1]).transpose();
    Vector t = b - a;
    t.normalize();
    f.normal = Vector(2);
    f.normal << t(1), -t(0);
    boundary.push_back(std::move(f));
  }
  return Mesh(2, std::move(vertices), std::move(cells), std::move(boundary));
}

namespace {

struct Surface {
  std::vector<Eigen::Vector3d> verts;
  std::vector<std::array<int, 3>> faces;
};

Surface icosphere(int level) {
  Surface s;
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0},
                             {0, -1, p}, {0, 1, p},  {0, -1, -p}, {0, 1, -p},
                             {p, 0, -1}, {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  for (const auto& r : raw) {
    s.verts.push_back(Eigen::Vector3d(r[0], r[1], r[2]).normalized());
  }
  s.faces = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int pass = 0; pass < level; ++pass) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      // Exactly sign-symmetric: midpoint(-a,-b) is the bitwise negation.
      const Eigen::Vector3d m = (s.verts[a] + s.verts[b]).normalized();
      const int idx = static_cast<int>(s.verts.size());
      s.verts.push_back(m);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * s.faces.size());
    for (const auto& f : s.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.faces = std::move(next);
  }
  return s;
}

// Vertex ranks such that antipodal surface vertices get ranks 2k and 2k+1.
// Rank-based tie-breaking rules then commute with the antipodal map, which
// keeps the tetrahedral splitting centrally symmetric.
std::vector<int> antipodal_ranks(const Surface& s) {
  std::map<std::array<double, 3>, int> index;
  for (std::size_t i = 0; i < s.verts.size(); ++i) {
    index[{s.verts[i].x(), s.verts[i].y(), s.verts[i].z()}] = static_cast<int>(i);
  }
  std::vector<int> antipode(s.verts.size(), -1);
  for (std::size_t i = 0; i < s.verts.size(); ++i) {
    const Eigen::Vector3d n = -s.verts[i];
    auto it = index.find({n.x(), n.y(), n.z()});
    if (it == index.end()) {
      throw NumericalInconsistency("icosphere vertex set is not antipodally closed");
    }
    antipode[i] = it->second;
  }
  std::vector<int> rank(s.verts.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < s.verts.size(); ++i) {
    if (rank[i] >= 0) continue;
    rank[i] = next++;
    rank[antipode[i]] = next++;
  }
  return rank;
}

}  // namespace

Mesh Mesh::unit_ball(int refinement_level) {
  if (refinement_level < 0 || refinement_level > 5) {
    throw std::invalid_argument("unit_ball: refinement level must be in [0, 5]");
  }
  const Surface surf = icosphere(refinement_level);
  const std::vector<int> surf_rank = antipodal_ranks(surf);
  const int shells = std::max(1, 1 << refinement_level);
  const int ns = static_cast<int>(surf.verts.size());

  Matrix vertices(1 + shells * ns, 3);
  vertices.row(0).setZero();
  for (int j = 1; j <= shells; ++j) {
    const double r = static_cast<double>(j) / shells;
    for (int k = 0; k < ns; ++k) {
      vertices.row(1 + (j - 1) * ns + k) = (r * surf.verts[k]).transpose();
    }
  }
  auto shell_vertex = [&](int j, int k) { return 1 + (j - 1) * ns + k; };
  auto shell_rank = [&](int j, int k) { return (j - 1) * ns + surf_rank[k]; };

  std::vector<std::vector<int>> cells;
  for (const auto& f : surf.faces) {
    cells.push_back({0, shell_vertex(1, f[0]), shell_vertex(1, f[1]), shell_vertex(1, f[2])});
  }
  // Prisms between consecutive shells, split into three tets each. Diagonal
  // choices go through the smallest-ranked vertex (Dompierre), so shared quad
  // faces split consistently across neighbouring prisms.
  static const int relabel[6][6] = {{0, 1, 2, 3, 4, 5}, {1, 2, 0, 4, 5, 3},
                                    {2, 0, 1, 5, 3, 4}, {3, 4, 5, 0, 1, 2},
                                    {4, 5, 3, 1, 2, 0}, {5, 3, 4, 2, 0, 1}};
  for (int j = 1; j < shells; ++j) {
    for (const auto& f : surf.faces) {
      int prism[6] = {shell_vertex(j, f[0]),     shell_vertex(j, f[1]),
                      shell_vertex(j, f[2]),     shell_vertex(j + 1, f[0]),
                      shell_vertex(j + 1, f[1]), shell_vertex(j + 1, f[2])};
      int ranks[6] = {shell_rank(j, f[0]),     shell_rank(j, f[1]),
                      shell_rank(j, f[2]),     shell_rank(j + 1, f[0]),
                      shell_rank(j + 1, f[1]), shell_rank(j + 1, f[2])};
      int best = 0;
      for (int r = 1; r < 6; ++r) {
        if (ranks[relabel[r][0]] < ranks[relabel[best][0]]) best = r;
      }
      int w[6], rw[6];
      for (int i = 0; i < 6; ++i) {
        w[i] = prism[relabel[best][i]];
        rw[i] = ranks[relabel[best][i]];
      }
      if (std::min(rw[1], rw[5]) < std::min(rw[2], rw[4])) {
        cells.push_back({w[0], w[1], w[2], w[5]});
        cells.push_back({w[0], w[1], w[5], w[4]});
        cells.push_back({w[0], w[4], w[5], w[3]});
      } else {
        cells.push_back({w[0], w[1], w[2], w[4]});
        cells.push_back({w[0], w[4], w[2], w[5]});
        cells.push_back({w[0], w[4], w[5], w[3]});
      }
    }
  }

  std::vector<BoundaryFacet> boundary;
  for (const auto& f : surf.faces) {
    BoundaryFacet facet;
    facet.nodes = {shell_vertex(shells, f[0]), shell_vertex(shells, f[1]),
                   shell_vertex(shells, f[2])};
    const Eigen::Vector3d a = vertices.row(facet.nodes[0]).transpose();
    const Eigen::Vector3d b = vertices.row(facet.nodes[1]).transpose();
    const Eigen::Vector3d c = vertices.row(facet.nodes[2]).transpose();
    Eigen::Vector3d n = (b - a).cross(c - a);
    if (n.dot(a + b + c) < 0.0) {
      std::swap(facet.nodes[1], facet.nodes[2]);
      n = -n;
    }
    facet.normal = n.normalized();
    boundary.push_back(std::move(facet));
  }
  return Mesh(3, std::move(vertices), std::move(cells), std::move(boundary));
}

Mesh Mesh::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("mesh: expected a JSON object");
  for (const char* key : {"n", "vertices", "cells", "boundary"}) {
    if (!j.contains(key)) throw ConfigError(std::string("mesh: missing field '") + key + "'");
  }
  const int n = j.at("n").get<int>();
  if (n != 2 && n != 3) throw ConfigError("mesh/n: must be 2 or 3");
  const auto& jv = j.at("vertices");
  if (!jv.is_array() || jv.empty()) throw ConfigError("mesh/vertices: expected a non-empty array");
  Matrix vertices(jv.size(), n);
  for (std::size_t i = 0; i < jv.size(); ++i) {
    if (!jv[i].is_array() || static_cast<int>(jv[i].size()) != n) {
      throw ConfigError("mesh/vertices[" + std::to_string(i) + "]: expected " +
                        std::to_string(n) + " coordinates");
    }
    for (int k = 0; k < n; ++k) vertices(i, k) = jv[i][k].get<double>();
  }
  const auto& jc = j.at("cells");
  if (!jc.is_array() || jc.empty()) throw ConfigError("mesh/cells: expected a non-empty array");
  std::vector<std::vector<int>> cells;
  for (std::size_t i = 0; i < jc.size(); ++i) {
    if (!jc[i].is_array() || static_cast<int>(jc[i].size()) != n + 1) {
      throw ConfigError("mesh/cells[" + std::to_string(i) + "]: expected " +
                        std::to_string(n + 1) + " vertex indices");
    }
    cells.push_back(jc[i].get<std::vector<int>>());
  }
  const auto& jb = j.at("boundary");
  if (!jb.is_array()) throw ConfigError("mesh/boundary: expected an array");
  std::vector<BoundaryFacet> boundary;
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const auto& entry = jb[i];
    if (!entry.contains("nodes") || !entry.contains("normal")) {
      throw ConfigError("mesh/boundary[" + std::to_string(i) + "]: needs 'nodes' and 'normal'");
    }
    BoundaryFacet f;
    f.nodes = entry.at("nodes").get<std::vector<int>>();
    const auto jn = entry.at("normal").get<std::vector<double>>();
    if (static_cast<int>(jn.size()) != n) {
      throw ConfigError("mesh/boundary[" + std::to_string(i) + "]/normal: expected " +
                        std::to_string(n) + " components");
    }
    f.normal = Eigen::Map<const Vector>(jn.data(), n);
    boundary.push_back(std::move(f));
  }
  try {
    return Mesh(n, std::move(vertices), std::move(cells), std::move(boundary));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

nlohmann::json Mesh::to_json() const {
  json j;
  j["n"] = dim_;
  json jv = json::array();
  for (int i = 0; i < num_vertices(); ++i) {
    json row = json::array();
    for (int k = 0; k < dim_; ++k) row.push_back(vertices_(i, k));
    jv.push_back(std::move(row));
  }
  j["vertices"] = std::move(jv);
  j["cells"] = cells_;
  json jb = json::array();
  for (const auto& f : boundary_) {
    json entry;
    entry["nodes"] = f.nodes;
    entry["normal"] = std::vector<double>(f.normal.data(), f.normal.data() + dim_);
    jb.push_back(std::move(entry));
  }
  j["boundary"] = std::move(jb);
  return j;
}

}  // namespace rotopt
