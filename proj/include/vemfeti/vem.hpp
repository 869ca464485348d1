#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "vemfeti/exec.hpp"
#include "vemfeti/krylov.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::vem {

using mesh::PolyMesh;
using mesh::Vec3;
using krylov::Vector;

/// Energy projection of the face space onto P1(f) in the basis {1, xi, eta},
/// xi = (x - c_f).t1 / d_f, eta = (x - c_f).t2 / d_f.
struct FaceProjector {
  std::vector<int> vertices;  // face loop, column order of `coeffs`
  Eigen::Matrix<double, 3, Eigen::Dynamic> coeffs;
  Vec3 centroid = Vec3::Zero();
  Vec3 t1 = Vec3::Zero();
  Vec3 t2 = Vec3::Zero();
  double diameter = 0;
  double area = 0;

  /// In-plane scaled coordinates (xi, eta) of a point.
  Eigen::Vector2d local(const Vec3& x) const;
};

FaceProjector face_projector(const PolyMesh& mesh, int face);

/// Weights of the face mean |f|^-1 int_f Pi_f v over the face loop vertices.
Eigen::RowVectorXd face_average_weights(const FaceProjector& proj);
/// Face mean of the VEM function with the given values at the loop vertices.
double face_average(const FaceProjector& proj, const Eigen::VectorXd& values);

/// Local operators of one cell. Rows/columns follow `vertices` (sorted).
struct ElementOps {
  std::vector<int> vertices;
  Eigen::MatrixXd Pi;  // 4 x n: dofs -> coefficients in {1, xbar, ybar, zbar}
  Eigen::MatrixXd D;   // n x 4: monomials at the vertices
  Eigen::MatrixXd K_cons;
  Eigen::MatrixXd K_stab;
  Eigen::MatrixXd K_elem;  // rho (K_cons + K_stab)
  Eigen::VectorXd load;    // per-vertex weights |K| / n_V; multiply by g(centroid)
  Vec3 centroid = Vec3::Zero();
  double volume = 0;
  double diameter = 0;
};

ElementOps element_operators(const PolyMesh& mesh, int cell, double rho = 1.0);

using Source = std::function<double(const Vec3&)>;

/// Stiffness over all vertices (no boundary conditions), rho per cell.
krylov::SparseSym assemble_all(const PolyMesh& mesh, const std::vector<double>& rho, Exec exec = Exec::parallel);

/// Stiffness of a cell subset with a caller-supplied vertex numbering;
/// vertices mapped to -1 are eliminated (homogeneous Dirichlet).
krylov::SparseSym assemble_subset(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& rho,
                                  const std::vector<int>& vertex_index, int dim, Exec exec = Exec::parallel);

/// Load vector int g v over the cells, numbered by vertex_index.
Vector assemble_load(const PolyMesh& mesh, const std::vector<int>& cells, const Source& g,
                     const std::vector<int>& vertex_index, int dim);

struct GlobalSystem {
  krylov::SparseSym K;
  Vector f;
  /// Per vertex: free-dof index or -1 on the Dirichlet boundary.
  std::vector<int> dof;
  std::vector<int> free_vertices;
};

/// Assembles with homogeneous Dirichlet conditions on all boundary vertices.
GlobalSystem assemble(const PolyMesh& mesh, const std::vector<double>& rho, const Source& g,
                      Exec exec = Exec::parallel);

/// Direct sparse Cholesky solve; returns values at all vertices (zero on the boundary).
Vector solve_direct(const GlobalSystem& system);
/// Scatter of a free-dof vector to all vertices.
Vector to_vertices(const GlobalSystem& system, const Vector& free_values);

/// Solves -div(rho grad u) = 0 with u = boundary_value on the boundary by lifting.
Vector lifted_solve(const PolyMesh& mesh, const std::vector<double>& rho, const Source& boundary_value);

}  // namespace vemfeti::vem
