#include <algorithm>

#include "vemfeti/error.hpp"
#include "vemfeti/vem.hpp"

namespace vemfeti::vem {

namespace {

constexpr std::ptrdiff_t kChunk = 2048;

}  // namespace

krylov::SparseSym assemble_subset(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& rho,
                                  const std::vector<int>& vertex_index, int dim, Exec exec) {
  if (rho.size() != cells.size()) throw UsageError("assemble: one coefficient per cell required");
  for (double r : rho)
    if (!(r > 0)) throw UsageError("assemble: coefficients must be positive");

  std::vector<krylov::Triplet> entries;
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
  std::vector<ElementOps> chunk;
  for (std::ptrdiff_t start = 0; start < count; start += kChunk) {
    const std::ptrdiff_t len = std::min(kChunk, count - start);
    chunk.assign(static_cast<std::size_t>(len), ElementOps{});
    for_each_index(exec, len, [&](std::ptrdiff_t k) {
      chunk[k] = element_operators(mesh, cells[start + k], rho[start + k]);
    });
    // Scatter in cell order so the result does not depend on the schedule.
    for (const ElementOps& ops : chunk) {
      const int n = static_cast<int>(ops.vertices.size());
      for (int a = 0; a < n; ++a) {
        const int r = vertex_index[ops.vertices[a]];
        if (r < 0) continue;
        for (int b = 0; b < n; ++b) {
          const int c = vertex_index[ops.vertices[b]];
          if (c < 0 || c > r) continue;
          entries.emplace_back(r, c, ops.K_elem(a, b));
        }
      }
    }
  }
  return krylov::SparseSym::from_triplets(dim, entries);
}

krylov::SparseSym assemble_all(const PolyMesh& mesh, const std::vector<double>& rho, Exec exec) {
  std::vector<int> cells(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) cells[c] = c;
  std::vector<int> index(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) index[v] = v;
  return assemble_subset(mesh, cells, rho, index, mesh.num_vertices(), exec);
}

Vector assemble_load(const PolyMesh& mesh, const std::vector<int>& cells, const Source& g,
                     const std::vector<int>& vertex_index, int dim) {
  Vector f = Vector::Zero(dim);
  for (int c : cells) {
    const mesh::CellGeometry cg = mesh::cell_geometry(mesh, c);
    const auto verts = mesh.cell_vertices(c);
    const double w = g(cg.centroid) * cg.volume / static_cast<double>(verts.size());
    for (int v : verts)
      if (vertex_index[v] >= 0) f(vertex_index[v]) += w;
  }
  return f;
}

GlobalSystem assemble(const PolyMesh& mesh, const std::vector<double>& rho, const Source& g, Exec exec) {
  if (static_cast<int>(rho.size()) != mesh.num_cells()) throw UsageError("assemble: one coefficient per cell required");
  GlobalSystem sys;
  sys.dof.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.on_boundary[v]) {
      sys.dof[v] = static_cast<int>(sys.free_vertices.size());
      sys.free_vertices.push_back(v);
    }
  if (sys.free_vertices.empty()) throw UsageError("assemble: mesh has no interior vertices");
  const int n = static_cast<int>(sys.free_vertices.size());
  std::vector<int> cells(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) cells[c] = c;
  sys.K = assemble_subset(mesh, cells, rho, sys.dof, n, exec);
  sys.f = assemble_load(mesh, cells, g, sys.dof, n);
  return sys;
}

Vector to_vertices(const GlobalSystem& system, const Vector& free_values) {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(system.dof.size()));
  for (std::size_t k = 0; k < system.free_vertices.size(); ++k)
    u(system.free_vertices[k]) = free_values(static_cast<Eigen::Index>(k));
  return u;
}

Vector solve_direct(const GlobalSystem& system) {
  const krylov::CholFactor chol(system.K, "direct solve");
  return to_vertices(system, chol.solve(system.f));
}

Vector lifted_solve(const PolyMesh& mesh, const std::vector<double>& rho, const Source& boundary_value) {
  const krylov::CscMatrix A = assemble_all(mesh, rho).full();
  std::vector<int> dof(mesh.num_vertices(), -1);
  int n = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.on_boundary[v]) dof[v] = n++;

  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u(v) = mesh.on_boundary[v] ? boundary_value(mesh.vertices[v]) : 0.0;
  if (n == 0) return u;

  std::vector<krylov::Triplet> ff;
  Vector rhs = Vector::Zero(n);
  for (int j = 0; j < A.outerSize(); ++j)
    for (krylov::CscMatrix::InnerIterator it(A, j); it; ++it) {
      const int r = dof[it.row()];
      if (r < 0) continue;
      if (dof[j] >= 0) {
        if (dof[j] <= r) ff.emplace_back(r, dof[j], it.value());
      } else {
        rhs(r) -= it.value() * u(j);
      }
    }
  const krylov::CholFactor chol(krylov::SparseSym::from_triplets(n, ff), "lifted solve");
  const Vector uf = chol.solve(rhs);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (dof[v] >= 0) u(v) = uf(dof[v]);
  return u;
}

}  // namespace vemfeti::vem
