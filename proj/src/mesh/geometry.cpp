#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include <Eigen/Geometry>

#include "mesh_builder.hpp"
#include "vemfeti/error.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::mesh {

namespace {

constexpr double kPlanarityTol = 1e-10;

std::string cell_name(int c) { return "cell " + std::to_string(c); }
std::string face_name(int f) { return "face " + std::to_string(f); }

// Orthonormal in-plane basis (t1, t2) with t1 x t2 = n.
std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 t1 = n.cross(seed).normalized();
  Vec3 t2 = n.cross(t1);
  return {t1, t2};
}

bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                        const Eigen::Vector2d& d, double eps) {
  auto orient = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
         ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

}  // namespace

std::vector<int> PolyMesh::cell_vertices(int cell) const {
  std::vector<int> out;
  for (const auto& cf : cells.at(cell)) out.insert(out.end(), faces[cf.face].begin(), faces[cf.face].end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> PolyMesh::outward_loop(int cell, int local_face) const {
  const CellFace& cf = cells.at(cell).at(local_face);
  std::vector<int> loop = faces[cf.face];
  if (!cf.outward) std::reverse(loop.begin(), loop.end());
  return loop;
}

std::vector<int> PolyMesh::face_cell_counts() const {
  std::vector<int> counts(faces.size(), 0);
  for (const auto& cell : cells)
    for (const auto& cf : cell)
      if (cf.face >= 0 && cf.face < num_faces()) ++counts[cf.face];
  return counts;
}

FaceGeometry face_geometry(const PolyMesh& mesh, int face) {
  const auto& loop = mesh.faces.at(face);
  const auto& X = mesh.vertices;
  const std::size_t k = loop.size();
  Vec3 mean = Vec3::Zero();
  for (int v : loop) mean += X[v];
  mean /= static_cast<double>(k);

  Vec3 area_vec = Vec3::Zero();
  for (std::size_t i = 0; i < k; ++i)
    area_vec += 0.5 * (X[loop[i]] - mean).cross(X[loop[(i + 1) % k]] - mean);

  FaceGeometry g;
  g.area = area_vec.norm();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) g.diameter = std::max(g.diameter, (X[loop[i]] - X[loop[j]]).norm());
  if (!(g.area > 0)) throw MeshError(face_name(face) + " is degenerate (zero area)");
  g.normal = area_vec / g.area;

  Vec3 first = Vec3::Zero();
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3& a = X[loop[i]];
    const Vec3& b = X[loop[(i + 1) % k]];
    const double tri = 0.5 * (a - mean).cross(b - mean).dot(g.normal);
    first += tri * (mean + a + b) / 3.0;
  }
  g.centroid = first / g.area;

  double off = 0;
  for (int v : loop) off = std::max(off, std::abs((X[v] - mean).dot(g.normal)));
  if (off > kPlanarityTol * g.diameter)
    throw MeshError(face_name(face) + " is not planar (deviation " + std::to_string(off) + ")");
  return g;
}

CellGeometry cell_geometry(const PolyMesh& mesh, int cell) {
  const auto& X = mesh.vertices;
  const auto verts = mesh.cell_vertices(cell);
  Vec3 ref = Vec3::Zero();
  for (int v : verts) ref += X[v];
  ref /= static_cast<double>(verts.size());

  CellGeometry g;
  Vec3 first = Vec3::Zero();
  for (std::size_t lf = 0; lf < mesh.cells[cell].size(); ++lf) {
    const auto loop = mesh.outward_loop(cell, static_cast<int>(lf));
    Vec3 mean = Vec3::Zero();
    for (int v : loop) mean += X[v];
    mean /= static_cast<double>(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec3& a = X[loop[i]];
      const Vec3& b = X[loop[(i + 1) % loop.size()]];
      const double vol = (mean - ref).dot((a - ref).cross(b - ref)) / 6.0;
      g.volume += vol;
      first += vol * (ref + mean + a + b) / 4.0;
    }
  }
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      g.diameter = std::max(g.diameter, (X[verts[i]] - X[verts[j]]).norm());
  if (!(g.volume > 0)) throw MeshError(cell_name(cell) + " has nonpositive volume");
  g.centroid = first / g.volume;
  return g;
}

void validate(const PolyMesh& mesh) {
  const int nv = mesh.num_vertices();
  const int nf = mesh.num_faces();
  if (static_cast<int>(mesh.on_boundary.size()) != nv)
    throw MeshError("boundary tag count does not match vertex count");

  for (int f = 0; f < nf; ++f) {
    const auto& loop = mesh.faces[f];
    if (loop.size() < 3) throw MeshError(face_name(f) + " has fewer than 3 vertices");
    std::set<int> seen;
    for (int v : loop) {
      if (v < 0 || v >= nv) throw MeshError(face_name(f) + " references invalid vertex " + std::to_string(v));
      if (!seen.insert(v).second) throw MeshError(face_name(f) + " repeats vertex " + std::to_string(v));
    }
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cells[c].size() < 4) throw MeshError(cell_name(c) + " has fewer than 4 faces");
    for (const auto& cf : mesh.cells[c])
      if (cf.face < 0 || cf.face >= nf)
        throw MeshError(cell_name(c) + " references invalid face " + std::to_string(cf.face));
  }

  // Face incidence: one cell on the boundary, two with opposite flags inside.
  std::vector<std::vector<CellFace>> incidence(nf);
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (const auto& cf : mesh.cells[c]) incidence[cf.face].push_back({c, cf.outward});
  for (int f = 0; f < nf; ++f) {
    const auto& inc = incidence[f];
    if (inc.empty()) throw MeshError(face_name(f) + " is not referenced by any cell");
    if (inc.size() > 2)
      throw MeshError(face_name(f) + " is referenced by " + std::to_string(inc.size()) + " cells (conformity)");
    if (inc.size() == 2 && inc[0].outward == inc[1].outward)
      throw MeshError(face_name(f) + " has equal orientation flags in cells " + std::to_string(inc[0].face) +
                      " and " + std::to_string(inc[1].face));
  }
  std::vector<char> expected(nv, 0);
  for (int f = 0; f < nf; ++f)
    if (incidence[f].size() == 1)
      for (int v : mesh.faces[f]) expected[v] = 1;
  for (int v = 0; v < nv; ++v)
    if ((expected[v] != 0) != (mesh.on_boundary[v] != 0))
      throw MeshError("vertex " + std::to_string(v) + " has an inconsistent boundary tag");

  // Geometry: planarity, simple loops.
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const auto& p : mesh.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = nv > 0 ? (hi - lo).norm() : 1.0;
  for (int f = 0; f < nf; ++f) {
    const FaceGeometry g = face_geometry(mesh, f);
    const auto [t1, t2] = plane_basis(g.normal);
    const auto& loop = mesh.faces[f];
    const std::size_t k = loop.size();
    std::vector<Eigen::Vector2d> q(k);
    for (std::size_t i = 0; i < k; ++i) {
      const Vec3 d = mesh.vertices[loop[i]] - g.centroid;
      q[i] = {d.dot(t1), d.dot(t2)};
    }
    const double eps = 1e-14 * g.diameter * g.diameter;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 2; j < k; ++j) {
        if (i == 0 && j == k - 1) continue;
        if (segments_intersect(q[i], q[(i + 1) % k], q[j], q[(j + 1) % k], eps))
          throw MeshError(face_name(f) + " is self-intersecting");
      }
  }

  // Duplicated coordinates break index-sharing conformity.
  detail::VertexMerger merger(1e-12 * scale);
  for (int v = 0; v < nv; ++v) {
    const int other = merger.find(mesh.vertices[v]);
    if (other >= 0)
      throw MeshError("vertices " + std::to_string(other) + " and " + std::to_string(v) +
                      " coincide (conformity)");
    merger.insert(mesh.vertices[v], v);
  }

  for (int c = 0; c < mesh.num_cells(); ++c) {
    // Closed surface: each directed edge is matched by its reverse exactly once.
    std::map<std::pair<int, int>, int> directed;
    Vec3 closure = Vec3::Zero();
    double total_area = 0;
    for (std::size_t lf = 0; lf < mesh.cells[c].size(); ++lf) {
      const auto loop = mesh.outward_loop(c, static_cast<int>(lf));
      for (std::size_t i = 0; i < loop.size(); ++i) ++directed[{loop[i], loop[(i + 1) % loop.size()]}];
      const FaceGeometry g = face_geometry(mesh, mesh.cells[c][lf].face);
      closure += (mesh.cells[c][lf].outward ? 1.0 : -1.0) * g.area * g.normal;
      total_area += g.area;
    }
    for (const auto& [edge, count] : directed) {
      auto rev = directed.find({edge.second, edge.first});
      if (count != 1 || rev == directed.end() || rev->second != 1)
        throw MeshError(cell_name(c) + " is not a closed conforming surface at edge (" +
                        std::to_string(edge.first) + "," + std::to_string(edge.second) + ")");
    }
    if (closure.norm() > 1e-10 * total_area) throw MeshError(cell_name(c) + " has inconsistent face orientation");
    cell_geometry(mesh, c);
  }
}

PolyMesh transformed(const PolyMesh& mesh, const Vec3& scale, const Vec3& shift) {
  PolyMesh out = mesh;
  for (auto& p : out.vertices) p = scale.cwiseProduct(p) + shift;
  if (scale.prod() < 0)
    for (auto& loop : out.faces) std::reverse(loop.begin(), loop.end());
  return out;
}

PolyMesh glue_reflected(const PolyMesh& reference, int N, std::vector<int>* cell_subdomain) {
  if (N < 1) throw UsageError("subdomains per axis must be >= 1");
  constexpr double kMergeTol = 1e-9;
  detail::MeshBuilder builder;
  detail::VertexMerger merger(kMergeTol);
  if (cell_subdomain) cell_subdomain->clear();

  std::vector<int> map(reference.vertices.size());
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) {
        const std::array<int, 3> idx{i, j, k};
        Vec3 scale, shift;
        for (int a = 0; a < 3; ++a) {
          const bool flip = idx[a] % 2 == 1;
          scale[a] = (flip ? -1.0 : 1.0) / N;
          shift[a] = static_cast<double>(idx[a] + (flip ? 1 : 0)) / N;
        }
        const bool reversed = scale.prod() < 0;
        for (std::size_t v = 0; v < reference.vertices.size(); ++v) {
          const Vec3 p = scale.cwiseProduct(reference.vertices[v]) + shift;
          int id = merger.find(p);
          if (id < 0) {
            id = builder.add_vertex(p);
            merger.insert(p, id);
          }
          map[v] = id;
        }
        const int sub = i + N * (j + N * k);
        for (int c = 0; c < reference.num_cells(); ++c) {
          std::vector<std::vector<int>> loops;
          for (std::size_t lf = 0; lf < reference.cells[c].size(); ++lf) {
            auto loop = reference.outward_loop(c, static_cast<int>(lf));
            for (int& v : loop) v = map[v];
            if (reversed) std::reverse(loop.begin(), loop.end());
            loops.push_back(std::move(loop));
          }
          builder.add_cell(loops);
          if (cell_subdomain) cell_subdomain->push_back(sub);
        }
      }

  PolyMesh glued = builder.finish(kMergeTol);
  const auto counts = glued.face_cell_counts();
  for (int f = 0; f < glued.num_faces(); ++f) {
    if (counts[f] != 1) continue;
    bool on_cube = false;
    for (int a = 0; a < 3 && !on_cube; ++a)
      for (double wall : {0.0, 1.0}) {
        bool all = true;
        for (int v : glued.faces[f]) all = all && std::abs(glued.vertices[v][a] - wall) <= kMergeTol;
        on_cube = on_cube || all;
      }
    if (!on_cube)
      throw MeshError("nonconforming glue: " + face_name(f) + " inside the domain has no matching neighbour");
  }
  validate(glued);
  return glued;
}

}  // namespace vemfeti::mesh
