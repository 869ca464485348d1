#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "vemfeti/decomp.hpp"
#include "vemfeti/error.hpp"

namespace vemfeti::decomp {

namespace {

constexpr double kTol = 1e-9;

/// Index k with |t - k| <= tol, or -1.
int lattice_plane(double t, int N) {
  const double s = t * N;
  const double k = std::round(s);
  return std::abs(s - k) <= kTol * N ? static_cast<int>(k) : -1;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::V: return "V";
    case Variant::E: return "E";
    case Variant::F: return "F";
    case Variant::VE: return "VE";
    case Variant::VF: return "VF";
    case Variant::EF: return "EF";
    case Variant::VEF: return "VEF";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : kAllVariants)
    if (to_string(v) == name) return v;
  throw UsageError("unknown variant '" + name + "' (expected V, E, F, VE, VF, EF or VEF)");
}

bool has_vertices(Variant v) { return v == Variant::V || v == Variant::VE || v == Variant::VF || v == Variant::VEF; }
bool has_edges(Variant v) { return v == Variant::E || v == Variant::VE || v == Variant::EF || v == Variant::VEF; }
bool has_faces(Variant v) { return v == Variant::F || v == Variant::VF || v == Variant::EF || v == Variant::VEF; }

Partition partition_box(const PolyMesh& mesh, int N) {
  if (N < 1) throw UsageError("number of subdomains per axis must be at least 1");
  Partition p;
  p.N = N;
  p.cell_subdomain.resize(mesh.num_cells());
  p.cells.assign(p.num_subdomains(), {});
  p.vertices.assign(p.num_subdomains(), {});
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto verts = mesh.cell_vertices(c);
    mesh::Vec3 centroid = mesh::Vec3::Zero();
    for (int v : verts) centroid += mesh.vertices[v];
    centroid /= static_cast<double>(verts.size());
    std::array<int, 3> box{};
    for (int a = 0; a < 3; ++a) box[a] = std::clamp(static_cast<int>(std::floor(centroid(a) * N)), 0, N - 1);
    for (int v : verts)
      for (int a = 0; a < 3; ++a) {
        const double t = mesh.vertices[v](a) * N;
        if (t < box[a] - kTol * N || t > box[a] + 1 + kTol * N)
          throw MeshError("cell " + std::to_string(c) + " straddles a subdomain boundary");
      }
    const int l = p.index(box[0], box[1], box[2]);
    p.cell_subdomain[c] = l;
    p.cells[l].push_back(c);
  }
  for (int l = 0; l < p.num_subdomains(); ++l) {
    std::set<int> vs;
    for (int c : p.cells[l])
      for (int v : mesh.cell_vertices(c))
        if (!mesh.on_boundary[v]) vs.insert(v);
    p.vertices[l].assign(vs.begin(), vs.end());
  }
  return p;
}

InterfaceIndex classify_interface(const PolyMesh& mesh, const Partition& part) {
  const int N = part.N;
  const int nv = mesh.num_vertices();
  InterfaceIndex idx;
  idx.kind.assign(nv, NodeKind::interior);
  idx.entity.assign(nv, -1);
  idx.neighbours.assign(nv, {});

  std::vector<std::set<int>> owners(nv);
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int v : mesh.cell_vertices(c)) owners[v].insert(part.cell_subdomain[c]);

  // Keys: faces (axis, plane, s1, s2), edges (axis, plane1, plane2, segment).
  std::map<std::array<int, 4>, std::vector<int>> face_nodes, edge_nodes;
  std::vector<std::array<int, 4>> vertex_key(nv);

  for (int v = 0; v < nv; ++v) {
    if (mesh.on_boundary[v]) {
      idx.kind[v] = NodeKind::dirichlet;
      continue;
    }
    const auto& x = mesh.vertices[v];
    std::array<int, 3> plane{}, cell{};
    int on_planes = 0;
    for (int a = 0; a < 3; ++a) {
      plane[a] = lattice_plane(x(a), N);
      if (plane[a] > 0 && plane[a] < N) ++on_planes;
      cell[a] = std::clamp(static_cast<int>(std::floor(x(a) * N)), 0, N - 1);
    }
    // Subdomains whose closed box contains the vertex.
    std::set<int> expected;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const std::array<int, 3> d{di, dj, dk};
          std::array<int, 3> b{};
          bool ok = true;
          for (int a = 0; a < 3; ++a) {
            if (plane[a] > 0 && plane[a] < N)
              b[a] = plane[a] - 1 + d[a];
            else if (d[a] == 0)
              b[a] = cell[a];
            else
              ok = false;
          }
          if (ok) expected.insert(part.index(b[0], b[1], b[2]));
        }
    if (expected != owners[v])
      throw MeshError("vertex " + std::to_string(v) + " is shared by subdomains inconsistent with its position");
    if (on_planes == 0) continue;
    idx.neighbours[v].assign(owners[v].begin(), owners[v].end());
    if (on_planes == 3) {
      idx.kind[v] = NodeKind::cross;
    } else if (on_planes == 2) {
      int free_axis = 0;
      while (plane[free_axis] > 0 && plane[free_axis] < N) ++free_axis;
      const int a1 = (free_axis + 1) % 3, a2 = (free_axis + 2) % 3;
      idx.kind[v] = NodeKind::edge;
      vertex_key[v] = {free_axis, plane[std::min(a1, a2)], plane[std::max(a1, a2)], cell[free_axis]};
      edge_nodes[vertex_key[v]].push_back(v);
    } else {
      int axis = 0;
      while (!(plane[axis] > 0 && plane[axis] < N)) ++axis;
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      idx.kind[v] = NodeKind::face;
      vertex_key[v] = {axis, plane[axis], cell[std::min(a1, a2)], cell[std::max(a1, a2)]};
      face_nodes[vertex_key[v]].push_back(v);
    }
  }

  for (int v = 0; v < nv; ++v)
    if (idx.kind[v] == NodeKind::cross) {
      idx.entity[v] = static_cast<int>(idx.cross_points.size());
      idx.cross_points.push_back(v);
    }

  // Every interior macro face/edge is registered even if it has no open nodes.
  std::map<std::array<int, 4>, int> face_id, edge_id;
  for (int axis = 0; axis < 3; ++axis)
    for (int k = 1; k < N; ++k)
      for (int s1 = 0; s1 < N; ++s1)
        for (int s2 = 0; s2 < N; ++s2) {
          const std::array<int, 4> key{axis, k, s1, s2};
          MacroFace F;
          F.axis = axis;
          std::array<int, 3> lo{}, hi{};
          const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
          lo[axis] = k - 1;
          hi[axis] = k;
          lo[std::min(a1, a2)] = hi[std::min(a1, a2)] = s1;
          lo[std::max(a1, a2)] = hi[std::max(a1, a2)] = s2;
          F.subdomains = {part.index(lo[0], lo[1], lo[2]), part.index(hi[0], hi[1], hi[2])};
          if (auto it = face_nodes.find(key); it != face_nodes.end()) F.nodes = it->second;
          face_id[key] = static_cast<int>(idx.faces.size());
          idx.faces.push_back(std::move(F));
        }
  for (int axis = 0; axis < 3; ++axis)
    for (int k1 = 1; k1 < N; ++k1)
      for (int k2 = 1; k2 < N; ++k2)
        for (int s = 0; s < N; ++s) {
          const std::array<int, 4> key{axis, k1, k2, s};
          MacroEdge E;
          E.axis = axis;
          const int a1 = std::min((axis + 1) % 3, (axis + 2) % 3), a2 = std::max((axis + 1) % 3, (axis + 2) % 3);
          std::set<int> subs;
          for (int d1 = 0; d1 < 2; ++d1)
            for (int d2 = 0; d2 < 2; ++d2) {
              std::array<int, 3> b{};
              b[axis] = s;
              b[a1] = k1 - 1 + d1;
              b[a2] = k2 - 1 + d2;
              subs.insert(part.index(b[0], b[1], b[2]));
            }
          E.subdomains.assign(subs.begin(), subs.end());
          if (auto it = edge_nodes.find(key); it != edge_nodes.end()) E.nodes = it->second;
          edge_id[key] = static_cast<int>(idx.edges.size());
          idx.edges.push_back(std::move(E));
        }
  for (int v = 0; v < nv; ++v) {
    if (idx.kind[v] == NodeKind::face) idx.entity[v] = face_id.at(vertex_key[v]);
    if (idx.kind[v] == NodeKind::edge) idx.entity[v] = edge_id.at(vertex_key[v]);
  }

  // Closed edges: all vertices on the line segment, Dirichlet ones included.
  for (int v = 0; v < nv; ++v) {
    const auto& x = mesh.vertices[v];
    std::array<int, 3> plane{};
    for (int a = 0; a < 3; ++a) plane[a] = lattice_plane(x(a), N);
    for (int axis = 0; axis < 3; ++axis) {
      const int a1 = std::min((axis + 1) % 3, (axis + 2) % 3), a2 = std::max((axis + 1) % 3, (axis + 2) % 3);
      if (!(plane[a1] > 0 && plane[a1] < N && plane[a2] > 0 && plane[a2] < N)) continue;
      const double t = x(axis) * N;
      for (int s = 0; s < N; ++s)
        if (t >= s - kTol * N && t <= s + 1 + kTol * N) idx.edges[edge_id.at({axis, plane[a1], plane[a2], s})].closure.push_back(v);
    }
  }
  for (auto& E : idx.edges)
    std::sort(E.closure.begin(), E.closure.end(),
              [&](int a, int b) { return mesh.vertices[a](E.axis) < mesh.vertices[b](E.axis); });

  // Mesh faces between cells of different subdomains.
  std::vector<std::vector<int>> face_cells(mesh.num_faces());
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (const auto& cf : mesh.cells[c]) face_cells[cf.face].push_back(c);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (face_cells[f].size() != 2) continue;
    const int l0 = part.cell_subdomain[face_cells[f][0]], l1 = part.cell_subdomain[face_cells[f][1]];
    if (l0 == l1) continue;
    const auto c0 = part.coords(l0), c1 = part.coords(l1);
    int axis = -1, diffs = 0;
    for (int a = 0; a < 3; ++a)
      if (c0[a] != c1[a]) {
        axis = a;
        ++diffs;
      }
    if (diffs != 1 || std::abs(c0[axis] - c1[axis]) != 1)
      throw MeshError("face " + std::to_string(f) + " joins non-adjacent subdomains");
    const int a1 = std::min((axis + 1) % 3, (axis + 2) % 3), a2 = std::max((axis + 1) % 3, (axis + 2) % 3);
    idx.faces[face_id.at({axis, std::max(c0[axis], c1[axis]), c0[a1], c0[a2]})].mesh_faces.push_back(f);
  }
  return idx;
}

}  // namespace vemfeti::decomp
