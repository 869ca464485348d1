#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "vemfeti/decomp.hpp"
#include "vemfeti/error.hpp"
#include "vemfeti/vem.hpp"

namespace vemfeti::decomp {

PrimalSpec primal_constraints(const PolyMesh& mesh, const InterfaceIndex& index, Variant variant) {
  PrimalSpec spec;
  spec.variant = variant;
  using Kind = PrimalConstraint::Kind;

  if (has_vertices(variant))
    for (std::size_t k = 0; k < index.cross_points.size(); ++k) {
      const int v = index.cross_points[k];
      spec.constraints.push_back({Kind::vertex, static_cast<int>(k), index.neighbours[v], {v}, {1.0}});
    }

  if (has_edges(variant))
    for (std::size_t e = 0; e < index.edges.size(); ++e) {
      const MacroEdge& E = index.edges[e];
      const auto& pts = E.closure;
      if (pts.size() < 2) throw MeshError("macro edge " + std::to_string(e) + " has no mesh edges");
      std::vector<double> w(pts.size(), 0.0);
      double length = 0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double len = (mesh.vertices[pts[i + 1]] - mesh.vertices[pts[i]]).norm();
        w[i] += len / 2;
        w[i + 1] += len / 2;
        length += len;
      }
      for (double& x : w) x /= length;
      spec.constraints.push_back({Kind::edge, static_cast<int>(e), E.subdomains, pts, w});
    }

  if (has_faces(variant))
    for (std::size_t f = 0; f < index.faces.size(); ++f) {
      const MacroFace& F = index.faces[f];
      if (F.mesh_faces.empty()) throw MeshError("macro face " + std::to_string(f) + " has no mesh faces");
      std::map<int, double> acc;
      double area = 0;
      for (int mf : F.mesh_faces) {
        const vem::FaceProjector p = vem::face_projector(mesh, mf);
        const Eigen::RowVectorXd w = vem::face_average_weights(p);
        for (std::size_t i = 0; i < p.vertices.size(); ++i) acc[p.vertices[i]] += p.area * w(static_cast<Eigen::Index>(i));
        area += p.area;
      }
      PrimalConstraint c{Kind::face, static_cast<int>(f), {F.subdomains[0], F.subdomains[1]}, {}, {}};
      for (const auto& [v, w] : acc) {
        c.nodes.push_back(v);
        c.weights.push_back(w / area);
      }
      spec.constraints.push_back(std::move(c));
    }

  if (spec.constraints.empty())
    throw UsageError("variant " + to_string(variant) + " yields no primal constraints for this decomposition");
  return spec;
}

std::vector<double> scaling_coefficients(const std::vector<int>& neighbours, const std::vector<double>& rho,
                                         double gamma) {
  if (!(gamma >= 0.5)) throw UsageError("scaling exponent gamma must be at least 1/2");
  std::vector<double> d(neighbours.size());
  double sum = 0;
  for (std::size_t k = 0; k < neighbours.size(); ++k) {
    const double r = rho.at(neighbours[k]);
    if (!(r > 0)) throw UsageError("coefficients must be positive");
    d[k] = std::pow(r, gamma);
    sum += d[k];
  }
  for (double& x : d) x /= sum;
  return d;
}

JumpOperator build_jump(const std::vector<DualInstance>& instances, const InterfaceIndex& index,
                        const std::vector<double>& rho, double gamma) {
  std::map<int, std::vector<int>> by_vertex;
  for (std::size_t k = 0; k < instances.size(); ++k) by_vertex[instances[k].vertex].push_back(static_cast<int>(k));

  JumpOperator J;
  J.d.assign(instances.size(), 0.0);
  std::vector<krylov::Triplet> b, bd;
  int row = 0;
  for (auto& [v, inst] : by_vertex) {
    std::sort(inst.begin(), inst.end(),
              [&](int a, int c) { return instances[a].subdomain < instances[c].subdomain; });
    const auto& nb = index.neighbours.at(v);
    const std::vector<double> d = scaling_coefficients(nb, rho, gamma);
    for (int k : inst) {
      const auto pos = std::find(nb.begin(), nb.end(), instances[k].subdomain) - nb.begin();
      if (pos == static_cast<long>(nb.size()))
        throw MeshError("dual node " + std::to_string(v) + " does not belong to subdomain " +
                        std::to_string(instances[k].subdomain));
      J.d[k] = d[pos];
    }
    for (std::size_t a = 0; a < inst.size(); ++a)
      for (std::size_t c = a + 1; c < inst.size(); ++c) {
        b.emplace_back(row, inst[a], 1.0);
        b.emplace_back(row, inst[c], -1.0);
        bd.emplace_back(row, inst[a], J.d[inst[c]]);
        bd.emplace_back(row, inst[c], -J.d[inst[a]]);
        ++row;
      }
  }
  const int cols = static_cast<int>(instances.size());
  J.B.resize(row, cols);
  J.B.setFromTriplets(b.begin(), b.end());
  J.BD.resize(row, cols);
  J.BD.setFromTriplets(bd.begin(), bd.end());
  return J;
}

krylov::CscMatrix averaging_operator(const std::vector<DualInstance>& instances, const std::vector<double>& d) {
  std::map<int, std::vector<int>> by_vertex;
  for (std::size_t k = 0; k < instances.size(); ++k) by_vertex[instances[k].vertex].push_back(static_cast<int>(k));
  std::vector<krylov::Triplet> t;
  for (const auto& [v, inst] : by_vertex)
    for (int r : inst)
      for (int c : inst) t.emplace_back(r, c, d[c]);
  const int n = static_cast<int>(instances.size());
  krylov::CscMatrix E(n, n);
  E.setFromTriplets(t.begin(), t.end());
  return E;
}

}  // namespace vemfeti::decomp
