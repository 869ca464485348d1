#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "vemfeti/error.hpp"
#include "vemfeti/vem.hpp"

namespace vemfeti::vem {

Eigen::Vector2d FaceProjector::local(const Vec3& x) const {
  const Vec3 d = (x - centroid) / diameter;
  return {d.dot(t1), d.dot(t2)};
}

FaceProjector face_projector(const PolyMesh& mesh, int face) {
  const mesh::FaceGeometry fg = mesh::face_geometry(mesh, face);
  const auto& loop = mesh.faces[face];
  const int n = static_cast<int>(loop.size());
  if (n < 3) throw MeshError("face " + std::to_string(face) + " has fewer than 3 vertices");

  FaceProjector p;
  p.vertices = loop;
  p.centroid = fg.centroid;
  p.diameter = fg.diameter;
  p.area = fg.area;
  const Vec3 seed = std::abs(fg.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  p.t1 = fg.normal.cross(seed).normalized();
  p.t2 = fg.normal.cross(p.t1);

  // Boundary integrals of v grad(m_a).n_e with the trace linear on each edge.
  Eigen::Matrix<double, 2, Eigen::Dynamic> B = Eigen::MatrixXd::Zero(2, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    const Vec3 scaled_normal = (mesh.vertices[loop[j]] - mesh.vertices[loop[i]]).cross(fg.normal);
    for (int a = 0; a < 2; ++a) {
      const double c = (a == 0 ? p.t1 : p.t2).dot(scaled_normal) / (2 * p.diameter);
      B(a, i) += c;
      B(a, j) += c;
    }
  }
  const double gram = p.area / (p.diameter * p.diameter);
  if (!(gram > 1e-14)) throw NumericalError("face " + std::to_string(face) + ": singular projector system");

  p.coeffs.resize(3, n);
  p.coeffs.bottomRows(2) = B / gram;
  Eigen::Vector2d msum = Eigen::Vector2d::Zero();
  for (int v : loop) msum += p.local(mesh.vertices[v]);
  for (int i = 0; i < n; ++i) p.coeffs(0, i) = (1.0 - msum.dot(p.coeffs.col(i).tail<2>())) / n;
  return p;
}

Eigen::RowVectorXd face_average_weights(const FaceProjector& proj) { return proj.coeffs.row(0); }

double face_average(const FaceProjector& proj, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(proj.vertices.size()))
    throw UsageError("face_average: expected one value per face vertex");
  return proj.coeffs.row(0).dot(values);
}

ElementOps element_operators(const PolyMesh& mesh, int cell, double rho) {
  const mesh::CellGeometry cg = mesh::cell_geometry(mesh, cell);
  ElementOps ops;
  ops.vertices = mesh.cell_vertices(cell);
  ops.centroid = cg.centroid;
  ops.volume = cg.volume;
  ops.diameter = cg.diameter;
  const int n = static_cast<int>(ops.vertices.size());
  const double d = cg.diameter;

  auto local_index = [&](int v) {
    return static_cast<int>(std::lower_bound(ops.vertices.begin(), ops.vertices.end(), v) - ops.vertices.begin());
  };

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, n);
  for (const auto& cf : mesh.cells[cell]) {
    const FaceProjector fp = face_projector(mesh, cf.face);
    const mesh::FaceGeometry fg = mesh::face_geometry(mesh, cf.face);
    const Vec3 normal = cf.outward ? fg.normal : Vec3(-fg.normal);
    for (std::size_t k = 0; k < fp.vertices.size(); ++k) {
      const int i = local_index(fp.vertices[k]);
      const double w = fp.coeffs(0, static_cast<Eigen::Index>(k)) * fp.area / d;
      for (int a = 0; a < 3; ++a) B(1 + a, i) += normal(a) * w;
    }
  }

  ops.D.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    ops.D(i, 0) = 1.0;
    ops.D.row(i).tail<3>() = ((mesh.vertices[ops.vertices[i]] - cg.centroid) / d).transpose();
  }

  const double gram = cg.volume / (d * d);
  ops.Pi.resize(4, n);
  ops.Pi.bottomRows(3) = B.bottomRows(3) / gram;
  const Eigen::Vector3d msum = ops.D.rightCols(3).colwise().sum().transpose();
  for (int i = 0; i < n; ++i) ops.Pi(0, i) = (1.0 - msum.dot(ops.Pi.col(i).tail<3>())) / n;

  Eigen::Vector4d G(0, gram, gram, gram);
  ops.K_cons = ops.Pi.transpose() * G.asDiagonal() * ops.Pi;
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n) - ops.D * ops.Pi;
  ops.K_stab = d * R.transpose() * R;
  ops.K_elem = rho * (ops.K_cons + ops.K_stab);
  ops.K_elem = 0.5 * (ops.K_elem + ops.K_elem.transpose()).eval();
  ops.load = Eigen::VectorXd::Constant(n, cg.volume / n);
  return ops;
}

}  // namespace vemfeti::vem
