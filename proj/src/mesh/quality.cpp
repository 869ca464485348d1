#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "vemfeti/error.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::mesh {

namespace {

/// Largest ball inside {x : n_i.x <= b_i} (unit normals n_i) when the origin is
/// strictly interior. Dense simplex with Bland's rule on
/// max r  s.t.  n_i.(x+ - x-) + r <= b_i,  x+, x-, r >= 0.
double chebyshev_ball(const Eigen::MatrixXd& normals, const Eigen::VectorXd& b, Eigen::VectorXd& center) {
  const int m = static_cast<int>(normals.rows());
  const int d = static_cast<int>(normals.cols());
  const int nvar = 2 * d + 1;
  const int ncol = nvar + m + 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, ncol);
  for (int i = 0; i < m; ++i) {
    T.block(i, 0, 1, d) = normals.row(i);
    T.block(i, d, 1, d) = -normals.row(i);
    T(i, 2 * d) = 1.0;
    T(i, nvar + i) = 1.0;
    T(i, ncol - 1) = b(i);
  }
  T(m, 2 * d) = -1.0;  // objective row holds -c
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = nvar + i;

  constexpr double eps = 1e-13;
  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int j = 0; j < ncol - 1; ++j)
      if (T(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) <= eps) continue;
      const double ratio = T(i, ncol - 1) / T(i, enter);
      if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave >= 0 && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) throw std::logic_error("chebyshev_ball: unbounded region");
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[leave] = enter;
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nvar);
  for (int i = 0; i < m; ++i)
    if (basis[i] < nvar) y(basis[i]) = T(i, ncol - 1);
  center = y.head(d) - y.segment(d, d);
  return y(2 * d);
}

}  // namespace

double CellShapeTerms::gamma() const {
  return std::min({volume, face_area, edge_length, face_inradius, cell_inradius, pyramid});
}

CellShapeTerms cell_shape_terms(const PolyMesh& mesh, int cell) {
  const auto& X = mesh.vertices;
  const CellGeometry cg = cell_geometry(mesh, cell);
  const double h = cg.diameter;
  const auto verts = mesh.cell_vertices(cell);
  const auto& faces = mesh.cells[cell];
  const int nf = static_cast<int>(faces.size());
  const double tol = 1e-10 * h;

  std::vector<FaceGeometry> fg(nf);
  std::vector<Vec3> outward(nf);
  for (int lf = 0; lf < nf; ++lf) {
    fg[lf] = face_geometry(mesh, faces[lf].face);
    outward[lf] = faces[lf].outward ? fg[lf].normal : Vec3(-fg[lf].normal);
    for (int v : verts)
      if ((X[v] - fg[lf].centroid).dot(outward[lf]) > tol)
        throw UnsupportedError("cell " + std::to_string(cell) + " is not convex");
  }

  CellShapeTerms t;
  t.volume = cg.volume / (h * h * h);
  t.face_area = t.edge_length = t.face_inradius = t.pyramid = std::numeric_limits<double>::infinity();

  // Cell inradius about the centroid.
  Eigen::MatrixXd N3(nf, 3);
  Eigen::VectorXd b3(nf);
  for (int lf = 0; lf < nf; ++lf) {
    N3.row(lf) = outward[lf].transpose();
    b3(lf) = (fg[lf].centroid - cg.centroid).dot(outward[lf]);
  }
  Eigen::VectorXd c3;
  t.cell_inradius = chebyshev_ball(N3, b3, c3) / h;

  for (int lf = 0; lf < nf; ++lf) {
    const auto loop = mesh.outward_loop(cell, lf);
    const Vec3& n = outward[lf];
    const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t1 = n.cross(seed).normalized();
    const Vec3 t2 = n.cross(t1);
    const int k = static_cast<int>(loop.size());
    std::vector<Eigen::Vector2d> q(k);
    for (int i = 0; i < k; ++i) {
      const Vec3 d = X[loop[i]] - fg[lf].centroid;
      q[i] = {d.dot(t1), d.dot(t2)};
    }
    Eigen::MatrixXd N2(k, 2);
    Eigen::VectorXd b2(k);
    for (int i = 0; i < k; ++i) {
      const Eigen::Vector2d e = q[(i + 1) % k] - q[i];
      t.edge_length = std::min(t.edge_length, e.norm() / h);
      const Eigen::Vector2d nrm = Eigen::Vector2d(e.y(), -e.x()).normalized();
      N2.row(i) = nrm.transpose();
      b2(i) = nrm.dot(q[i]);
      for (int j = 0; j < k; ++j)
        if (nrm.dot(q[j] - q[i]) > tol) throw UnsupportedError("cell " + std::to_string(cell) + " has a nonconvex face");
    }
    Eigen::VectorXd c2;
    const double r = chebyshev_ball(N2, b2, c2);
    t.face_inradius = std::min(t.face_inradius, r / h);
    t.face_area = std::min(t.face_area, fg[lf].area / (h * h));

    // Tallest pyramid on the face with apex above the face's inner centre.
    const Vec3 xf = fg[lf].centroid + c2(0) * t1 + c2(1) * t2;
    double height = std::numeric_limits<double>::infinity();
    for (int g = 0; g < nf; ++g) {
      const double slope = -n.dot(outward[g]);
      if (g == lf || slope <= 1e-12) continue;
      height = std::min(height, (fg[g].centroid - xf).dot(outward[g]) / slope);
    }
    t.pyramid = std::min(t.pyramid, height / h);
  }
  return t;
}

MeshQuality mesh_quality(const PolyMesh& mesh) {
  MeshQuality q;
  q.h_min = std::numeric_limits<double>::infinity();
  q.gamma_star = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto verts = mesh.cell_vertices(c);
    for (std::size_t i = 0; i < verts.size(); ++i)
      for (std::size_t j = i + 1; j < verts.size(); ++j) {
        const double d = (mesh.vertices[verts[i]] - mesh.vertices[verts[j]]).norm();
        q.h = std::max(q.h, d);
        q.h_min = std::min(q.h_min, d);
      }
    q.gamma_star = std::min(q.gamma_star, cell_shape_terms(mesh, c).gamma());
  }
  return q;
}

}  // namespace vemfeti::mesh
