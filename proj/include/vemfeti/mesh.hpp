#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace vemfeti::mesh {

using Vec3 = Eigen::Vector3d;

/// Reference from a cell to one of its faces. `outward` is true when the
/// stored face normal (counter-clockwise loop) points out of the cell.
struct CellFace {
  int face = -1;
  bool outward = true;

  friend bool operator==(const CellFace&, const CellFace&) = default;
};

/// Conforming polyhedral tessellation. Immutable once validated.
struct PolyMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  std::vector<std::vector<CellFace>> cells;
  /// Per vertex: 1 when the vertex lies on a boundary face.
  std::vector<char> on_boundary;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  /// Vertex indices of a cell, sorted ascending and unique.
  std::vector<int> cell_vertices(int cell) const;
  /// Face loop as seen from `cell`: counter-clockwise about the cell's outward normal.
  std::vector<int> outward_loop(int cell, int local_face) const;
  /// Number of cells referencing each face (1 = boundary, 2 = interior).
  std::vector<int> face_cell_counts() const;

  friend bool operator==(const PolyMesh&, const PolyMesh&) = default;
};

struct CellGeometry {
  double volume = 0;
  Vec3 centroid = Vec3::Zero();
  double diameter = 0;
};

struct FaceGeometry {
  double area = 0;
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // unit, consistent with the stored loop
  double diameter = 0;
};

struct MeshQuality {
  double h = 0;
  double h_min = 0;
  double gamma_star = 0;
};

/// Shape-regularity terms of one cell; gamma() is their minimum.
struct CellShapeTerms {
  double volume = 0;         // |K| / h_K^3
  double face_area = 0;      // min_f |f| / h_K^2
  double edge_length = 0;    // min_e |e| / h_K
  double face_inradius = 0;  // min_f r(f) / h_K
  double cell_inradius = 0;  // r(K) / h_K
  double pyramid = 0;        // min_f pyramid height / h_K

  double gamma() const;
};

/// Body-centred-cubic truncated octahedra on the unit cube with lattice
/// constant a = 1/(2n). Seeds are every lattice-cube centre plus every
/// interior lattice point; cells are their Voronoi regions clipped to the cube.
PolyMesh generate_truncated_octahedra(int n);

/// n^3 axis-aligned hexahedra on the unit cube.
PolyMesh generate_cube_grid(int n);

PolyMesh read_polymesh(const std::filesystem::path& path);
PolyMesh parse_polymesh(std::istream& in);
void write_polymesh(const PolyMesh& mesh, const std::filesystem::path& path);
void write_polymesh(const PolyMesh& mesh, std::ostream& out);

/// Throws MeshError naming the first violated invariant.
void validate(const PolyMesh& mesh);

CellGeometry cell_geometry(const PolyMesh& mesh, int cell);
FaceGeometry face_geometry(const PolyMesh& mesh, int face);

/// Throws UnsupportedError for a nonconvex cell.
CellShapeTerms cell_shape_terms(const PolyMesh& mesh, int cell);
MeshQuality mesh_quality(const PolyMesh& mesh);

/// Affine image x -> scale * x + shift (uniform scale; reflections allowed
/// through negative scale entries). Face loops are reversed when the map
/// flips orientation so stored normals stay consistent.
PolyMesh transformed(const PolyMesh& mesh, const Vec3& scale, const Vec3& shift);

/// Glue N^3 copies of a unit-cube reference mesh into the unit cube. Copy
/// (i,j,k) is scaled by 1/N and reflected along each axis with odd index so
/// traces on shared subdomain faces coincide. Vertices are merged with an
/// absolute tolerance of 1e-9; an unmatched interface face raises MeshError.
/// `cell_subdomain` (optional) receives the lexicographic subdomain index of
/// each glued cell.
PolyMesh glue_reflected(const PolyMesh& reference, int N, std::vector<int>* cell_subdomain = nullptr);

}  // namespace vemfeti::mesh
