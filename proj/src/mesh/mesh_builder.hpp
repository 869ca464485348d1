#pragma once

#include <map>
#include <vector>

#include "vemfeti/mesh.hpp"

namespace vemfeti::mesh::detail {

/// Incremental construction from per-cell outward face loops. Faces with the
/// same vertex set are shared; the first cell to reference a face owns its
/// orientation.
class MeshBuilder {
 public:
  int add_vertex(const Vec3& p);
  void add_cell(const std::vector<std::vector<int>>& outward_loops);

  /// Inserts vertices lying in the interior of face edges (T-junctions) into
  /// the face loops, tags boundary vertices and returns the mesh.
  PolyMesh finish(double collinear_tol);

 private:
  PolyMesh mesh_;
  std::map<std::vector<int>, int> face_index_;
};

/// Hash-grid vertex merger with absolute tolerance.
class VertexMerger {
 public:
  explicit VertexMerger(double tol) : tol_(tol), bucket_(tol * 1e3) {}
  /// Returns the index of an existing vertex within tolerance or -1.
  int find(const Vec3& p) const;
  void insert(const Vec3& p, int index);

 private:
  using Key = std::array<long long, 3>;
  Key key_of(const Vec3& p) const;
  double tol_;
  double bucket_;
  std::map<Key, std::vector<std::pair<Vec3, int>>> buckets_;
};

}  // namespace vemfeti::mesh::detail
