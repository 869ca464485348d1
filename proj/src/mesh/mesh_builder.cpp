#include "mesh_builder.hpp"

#include <algorithm>
#include <cmath>

#include "vemfeti/error.hpp"

namespace vemfeti::mesh::detail {

int MeshBuilder::add_vertex(const Vec3& p) {
  mesh_.vertices.push_back(p);
  return static_cast<int>(mesh_.vertices.size()) - 1;
}

void MeshBuilder::add_cell(const std::vector<std::vector<int>>& outward_loops) {
  std::vector<CellFace> cell;
  cell.reserve(outward_loops.size());
  for (const auto& loop : outward_loops) {
    std::vector<int> key = loop;
    std::sort(key.begin(), key.end());
    auto [it, inserted] = face_index_.try_emplace(key, mesh_.num_faces());
    if (inserted) {
      mesh_.faces.push_back(loop);
      cell.push_back({it->second, true});
    } else {
      cell.push_back({it->second, false});
    }
  }
  mesh_.cells.push_back(std::move(cell));
}

PolyMesh MeshBuilder::finish(double collinear_tol) {
  const auto& verts = mesh_.vertices;
  // Hash vertices on a grid sized by the mean edge length.
  double mean_edge = 0;
  std::size_t edge_count = 0;
  for (const auto& loop : mesh_.faces) {
    for (std::size_t k = 0; k < loop.size(); ++k) {
      mean_edge += (verts[loop[k]] - verts[loop[(k + 1) % loop.size()]]).norm();
      ++edge_count;
    }
  }
  if (edge_count > 0) {
    mean_edge /= static_cast<double>(edge_count);
    const double bucket = mean_edge;
    auto cell_of = [&](const Vec3& p) {
      return std::array<long long, 3>{std::llround(std::floor(p.x() / bucket)),
                                      std::llround(std::floor(p.y() / bucket)),
                                      std::llround(std::floor(p.z() / bucket))};
    };
    std::map<std::array<long long, 3>, std::vector<int>> grid;
    for (int v = 0; v < static_cast<int>(verts.size()); ++v) grid[cell_of(verts[v])].push_back(v);

    for (auto& loop : mesh_.faces) {
      std::vector<int> refined;
      for (std::size_t k = 0; k < loop.size(); ++k) {
        const int a = loop[k];
        const int b = loop[(k + 1) % loop.size()];
        refined.push_back(a);
        const Vec3 pa = verts[a];
        const Vec3 d = verts[b] - pa;
        const double len2 = d.squaredNorm();
        const auto lo = cell_of(pa.cwiseMin(verts[b]));
        const auto hi = cell_of(pa.cwiseMax(verts[b]));
        std::vector<std::pair<double, int>> inner;
        for (long long i = lo[0]; i <= hi[0]; ++i)
          for (long long j = lo[1]; j <= hi[1]; ++j)
            for (long long l = lo[2]; l <= hi[2]; ++l) {
              auto it = grid.find({i, j, l});
              if (it == grid.end()) continue;
              for (int v : it->second) {
                if (v == a || v == b) continue;
                const Vec3 w = verts[v] - pa;
                const double t = w.dot(d) / len2;
                if (t <= 0 || t >= 1) continue;
                if ((w - t * d).norm() <= collinear_tol) inner.emplace_back(t, v);
              }
            }
        std::sort(inner.begin(), inner.end());
        for (const auto& [t, v] : inner) refined.push_back(v);
      }
      loop = std::move(refined);
    }
  }

  const auto counts = mesh_.face_cell_counts();
  mesh_.on_boundary.assign(verts.size(), 0);
  for (int f = 0; f < mesh_.num_faces(); ++f) {
    if (counts[f] == 1)
      for (int v : mesh_.faces[f]) mesh_.on_boundary[v] = 1;
  }
  face_index_.clear();
  return std::move(mesh_);
}

VertexMerger::Key VertexMerger::key_of(const Vec3& p) const {
  return {std::llround(std::floor(p.x() / bucket_)), std::llround(std::floor(p.y() / bucket_)),
          std::llround(std::floor(p.z() / bucket_))};
}

int VertexMerger::find(const Vec3& p) const {
  const Key k = key_of(p);
  for (long long i = -1; i <= 1; ++i)
    for (long long j = -1; j <= 1; ++j)
      for (long long l = -1; l <= 1; ++l) {
        auto it = buckets_.find({k[0] + i, k[1] + j, k[2] + l});
        if (it == buckets_.end()) continue;
        for (const auto& [q, index] : it->second)
          if ((q - p).cwiseAbs().maxCoeff() <= tol_) return index;
      }
  return -1;
}

void VertexMerger::insert(const Vec3& p, int index) { buckets_[key_of(p)].emplace_back(p, index); }

}  // namespace vemfeti::mesh::detail
