#include "vemfeti/fetidp.hpp"

#include <algorithm>
#include <string>

#include "vemfeti/error.hpp"
#include "vemfeti/vem.hpp"

namespace vemfeti::fetidp {

namespace {

using decomp::NodeKind;
using krylov::Triplet;

int local_position(const std::vector<int>& sorted, int v) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  return it != sorted.end() && *it == v ? static_cast<int>(it - sorted.begin()) : -1;
}

/// Submatrix A(rows, cols) of a full sparse matrix.
krylov::CscMatrix block(const krylov::CscMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rmap(A.rows(), -1), cmap(A.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = static_cast<int>(j);
  std::vector<Triplet> t;
  for (int c = 0; c < A.outerSize(); ++c) {
    if (cmap[c] < 0) continue;
    for (krylov::CscMatrix::InnerIterator it(A, c); it; ++it)
      if (rmap[it.row()] >= 0) t.emplace_back(rmap[it.row()], cmap[c], it.value());
  }
  krylov::CscMatrix B(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

Vector gather(const Vector& x, const std::vector<int>& idx) {
  Vector y(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) y(i) = x(idx[i]);
  return y;
}

void scatter_add(Vector& x, const std::vector<int>& idx, const Vector& y) {
  for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) += y(i);
}

bool touches(const AverageBasis& b, const std::vector<int>& local_vertices) {
  const bool in = local_position(local_vertices, b.designated) >= 0;
  if (in)
    for (int v : b.nodes)
      if (local_position(local_vertices, v) < 0)
        throw MeshError("average functional spans vertex " + std::to_string(v) + " missing from a subdomain");
  return in;
}

}  // namespace

std::vector<AverageBasis> change_basis(const decomp::PrimalSpec& spec, const decomp::InterfaceIndex& index) {
  std::vector<AverageBasis> out;
  for (std::size_t c = 0; c < spec.constraints.size(); ++c) {
    const auto& pc = spec.constraints[c];
    if (pc.kind == decomp::PrimalConstraint::Kind::vertex) continue;
    const NodeKind open = pc.kind == decomp::PrimalConstraint::Kind::edge ? NodeKind::edge : NodeKind::face;
    AverageBasis b;
    b.constraint = static_cast<int>(c);
    double sum = 0;
    for (std::size_t k = 0; k < pc.nodes.size(); ++k) {
      const int v = pc.nodes[k];
      if (index.kind[v] != open || index.entity[v] != pc.entity) continue;
      b.nodes.push_back(v);
      b.weights.push_back(pc.weights[k]);
      sum += pc.weights[k];
    }
    if (b.nodes.empty() || !(sum > 0))
      throw UsageError("primal entity " + std::to_string(pc.entity) + " has no open nodes to carry its average");
    for (double& w : b.weights) w /= sum;
    std::size_t best = 0;
    for (std::size_t k = 1; k < b.nodes.size(); ++k) {
      const double a = std::abs(b.weights[k]), m = std::abs(b.weights[best]);
      if (a > m || (a == m && b.nodes[k] < b.nodes[best])) best = k;
    }
    b.designated = b.nodes[best];
    out.push_back(std::move(b));
  }
  return out;
}

krylov::CscMatrix basis_matrix(const std::vector<AverageBasis>& bases, const std::vector<int>& local_vertices) {
  const int n = static_cast<int>(local_vertices.size());
  std::vector<char> designated(n, 0);
  std::vector<Triplet> t;
  for (const auto& b : bases) {
    if (!touches(b, local_vertices)) continue;
    const int j = local_position(local_vertices, b.designated);
    designated[j] = 1;
    double wj = 0;
    for (std::size_t k = 0; k < b.nodes.size(); ++k)
      if (b.nodes[k] == b.designated) wj = b.weights[k];
    t.emplace_back(j, j, 1.0 / wj);
    for (std::size_t k = 0; k < b.nodes.size(); ++k)
      if (b.nodes[k] != b.designated) t.emplace_back(j, local_position(local_vertices, b.nodes[k]), -b.weights[k] / wj);
  }
  for (int i = 0; i < n; ++i)
    if (!designated[i]) t.emplace_back(i, i, 1.0);
  krylov::CscMatrix T(n, n);
  T.setFromTriplets(t.begin(), t.end());
  return T;
}

krylov::CscMatrix basis_matrix_inverse(const std::vector<AverageBasis>& bases, const std::vector<int>& local_vertices) {
  const int n = static_cast<int>(local_vertices.size());
  std::vector<char> designated(n, 0);
  std::vector<Triplet> t;
  for (const auto& b : bases) {
    if (!touches(b, local_vertices)) continue;
    const int j = local_position(local_vertices, b.designated);
    designated[j] = 1;
    for (std::size_t k = 0; k < b.nodes.size(); ++k)
      t.emplace_back(j, local_position(local_vertices, b.nodes[k]), b.weights[k]);
  }
  for (int i = 0; i < n; ++i)
    if (!designated[i]) t.emplace_back(i, i, 1.0);
  krylov::CscMatrix T(n, n);
  T.setFromTriplets(t.begin(), t.end());
  return T;
}

FetiDp::FetiDp(const mesh::PolyMesh& mesh, const decomp::Partition& partition, const decomp::InterfaceIndex& index,
               const std::vector<double>& rho, const Options& options)
    : mesh_(mesh), index_(index), options_(options), rho_(rho) {
  const int L = partition.num_subdomains();
  if (static_cast<int>(rho.size()) != L) throw UsageError("one coefficient per subdomain is required");
  for (double r : rho)
    if (!(r > 0)) throw UsageError("coefficients must be positive");
  spec_ = decomp::primal_constraints(mesh, index, options.variant);
  bases_ = change_basis(spec_, index);
  num_primal_ = static_cast<int>(spec_.constraints.size());

  std::vector<int> basis_of(spec_.constraints.size(), -1);
  for (std::size_t b = 0; b < bases_.size(); ++b) basis_of[bases_[b].constraint] = static_cast<int>(b);

  // Index sets and dual instances (serial, cheap).
  subs_.resize(L);
  std::vector<int> instance_offset(L + 1, 0);
  for (int l = 0; l < L; ++l) {
    Subdomain& s = subs_[l];
    s.vertices = partition.vertices[l];
    s.rho = rho[l];
    const int n = static_cast<int>(s.vertices.size());
    std::vector<char> is_primal(n, 0);
    for (int c = 0; c < num_primal_; ++c) {
      const auto& pc = spec_.constraints[c];
      if (std::find(pc.subdomains.begin(), pc.subdomains.end(), l) == pc.subdomains.end()) continue;
      const int v = pc.kind == decomp::PrimalConstraint::Kind::vertex ? pc.nodes[0] : bases_[basis_of[c]].designated;
      const int j = local_position(s.vertices, v);
      if (j < 0) throw MeshError("primal node " + std::to_string(v) + " missing from subdomain " + std::to_string(l));
      is_primal[j] = 1;
      s.primal.push_back(j);
      s.primal_global.push_back(c);
    }
    for (int j = 0; j < n; ++j) {
      if (is_primal[j]) continue;
      if (index.kind[s.vertices[j]] == NodeKind::interior)
        s.interior.push_back(j);
      else
        s.dual.push_back(j);
    }
    s.r_index = s.interior;
    s.r_index.insert(s.r_index.end(), s.dual.begin(), s.dual.end());
    instance_offset[l + 1] = instance_offset[l] + static_cast<int>(s.dual.size());
    for (int j : s.dual) {
      s.dual_instance.push_back(static_cast<int>(instances_.size()));
      instances_.push_back({l, s.vertices[j]});
    }
  }
  jump_ = decomp::build_jump(instances_, index, rho, options.gamma);

  for_each_index(options.exec, L, [&](std::ptrdiff_t li) {
    const int l = static_cast<int>(li);
    Subdomain& s = subs_[l];
    const int n = static_cast<int>(s.vertices.size());
    std::vector<int> vertex_index(mesh.num_vertices(), -1);
    for (int j = 0; j < n; ++j) vertex_index[s.vertices[j]] = j;
    const krylov::SparseSym K = vem::assemble_subset(mesh, partition.cells[l], std::vector<double>(partition.cells[l].size(), rho[l]),
                                                        vertex_index, n, Exec::serial);
    s.T = basis_matrix(bases_, s.vertices);
    const krylov::CscMatrix Khat = krylov::CscMatrix(s.T.transpose()) * K.full() * s.T;
    s.K_hat = krylov::SparseSym::from_full(Khat);

    const std::string where = "subdomain " + std::to_string(l);
    s.K_rr = krylov::CholFactor(krylov::SparseSym::from_full(block(Khat, s.r_index, s.r_index)), where + " K_rr");
    s.K_rPi = block(Khat, s.r_index, s.primal);
    s.X = s.K_rr.solve(Eigen::MatrixXd(s.K_rPi));
    s.S_PiPi = Eigen::MatrixXd(block(Khat, s.primal, s.primal)) - Eigen::MatrixXd(s.K_rPi.transpose()) * s.X;
    s.K_II = krylov::CholFactor(krylov::SparseSym::from_full(block(Khat, s.interior, s.interior)), where + " K_II");
    s.K_ID = block(Khat, s.interior, s.dual);
    s.K_DD = krylov::SparseSym::from_full(block(Khat, s.dual, s.dual));
    s.B_local = jump_.B.middleCols(instance_offset[l], static_cast<int>(s.dual.size()));
    s.BD_local = jump_.BD.middleCols(instance_offset[l], static_cast<int>(s.dual.size()));
  });

  std::vector<Triplet> t;
  for (const Subdomain& s : subs_)
    for (std::size_t a = 0; a < s.primal.size(); ++a)
      for (std::size_t b = 0; b < s.primal.size(); ++b) {
        const int i = s.primal_global[a], j = s.primal_global[b];
        if (i >= j) t.emplace_back(i, j, s.S_PiPi(a, b));
      }
  const krylov::SparseSym S = krylov::SparseSym::from_triplets(num_primal_, t);
  coarse_matrix_ = S.full();
  coarse_ = krylov::CholFactor(S, "coarse problem");
}

long FetiDp::product_dofs() const {
  long n = 0;
  for (const auto& s : subs_) n += static_cast<long>(s.vertices.size());
  return n;
}

std::vector<Vector> FetiDp::split_load(const Vector& f_vertices) const {
  if (f_vertices.size() != mesh_.num_vertices()) throw UsageError("load must have one value per mesh vertex");
  std::vector<Vector> out(subs_.size());
  for_each_index(options_.exec, num_subdomains(), [&](std::ptrdiff_t l) {
    const Subdomain& s = subs_[l];
    Vector f(s.vertices.size());
    for (std::size_t j = 0; j < s.vertices.size(); ++j) {
      const int v = s.vertices[j];
      double w = 1;
      const auto& nb = index_.neighbours[v];
      if (!nb.empty()) {
        const auto d = decomp::scaling_coefficients(nb, rho_, options_.gamma);
        w = d[std::find(nb.begin(), nb.end(), static_cast<int>(l)) - nb.begin()];
      }
      f(j) = w * f_vertices(v);
    }
    out[l] = s.T.transpose() * f;
  });
  return out;
}

std::vector<Vector> FetiDp::apply_Ktilde_inverse(const std::vector<Vector>& f_local) const {
  const int L = num_subdomains();
  std::vector<Vector> y(L), coarse_part(L);
  for_each_index(options_.exec, L, [&](std::ptrdiff_t l) {
    const Subdomain& s = subs_[l];
    y[l] = s.K_rr.solve(gather(f_local[l], s.r_index));
    coarse_part[l] = gather(f_local[l], s.primal) - s.K_rPi.transpose() * y[l];
  });
  Vector g = Vector::Zero(num_primal_);
  for (int l = 0; l < L; ++l) scatter_add(g, subs_[l].primal_global, coarse_part[l]);
  const Vector u_pi = coarse_.solve(g);
  std::vector<Vector> u(L);
  for_each_index(options_.exec, L, [&](std::ptrdiff_t l) {
    const Subdomain& s = subs_[l];
    const Vector up = gather(u_pi, s.primal_global);
    const Vector ur = y[l] - s.X * up;
    Vector full = Vector::Zero(s.vertices.size());
    for (std::size_t i = 0; i < s.r_index.size(); ++i) full(s.r_index[i]) = ur(i);
    for (std::size_t i = 0; i < s.primal.size(); ++i) full(s.primal[i]) = up(i);
    u[l] = std::move(full);
  });
  return u;
}

std::vector<Vector> FetiDp::jump_transpose(const Vector& lambda, bool scaled) const {
  std::vector<Vector> out(subs_.size());
  for_each_index(options_.exec, num_subdomains(), [&](std::ptrdiff_t l) {
    const Subdomain& s = subs_[l];
    out[l] = (scaled ? s.BD_local : s.B_local).transpose() * lambda;
  });
  return out;
}

Vector FetiDp::jump_apply(const std::vector<Vector>& dual_values, bool scaled) const {
  Vector out = Vector::Zero(num_multipliers());
  for (int l = 0; l < num_subdomains(); ++l) out += (scaled ? subs_[l].BD_local : subs_[l].B_local) * dual_values[l];
  return out;
}

Vector FetiDp::dual_rhs(const std::vector<Vector>& f_local) const {
  const auto u = apply_Ktilde_inverse(f_local);
  std::vector<Vector> ud(subs_.size());
  for (int l = 0; l < num_subdomains(); ++l) ud[l] = gather(u[l], subs_[l].dual);
  return jump_apply(ud, false);
}

Vector FetiDp::apply_F(const Vector& lambda) const {
  const auto bt = jump_transpose(lambda, false);
  std::vector<Vector> f(subs_.size());
  for (int l = 0; l < num_subdomains(); ++l) {
    const Subdomain& s = subs_[l];
    f[l] = Vector::Zero(s.vertices.size());
    for (std::size_t i = 0; i < s.dual.size(); ++i) f[l](s.dual[i]) = bt[l](i);
  }
  const auto u = apply_Ktilde_inverse(f);
  std::vector<Vector> ud(subs_.size());
  for (int l = 0; l < num_subdomains(); ++l) ud[l] = gather(u[l], subs_[l].dual);
  return jump_apply(ud, false);
}

Vector FetiDp::apply_M(const Vector& residual) const {
  const auto w = jump_transpose(residual, true);
  std::vector<Vector> sw(subs_.size());
  for_each_index(options_.exec, num_subdomains(), [&](std::ptrdiff_t l) {
    const Subdomain& s = subs_[l];
    Vector v = s.K_DD.apply(w[l]);
    if (!s.interior.empty()) v -= s.K_ID.transpose() * s.K_II.solve(Vector(s.K_ID * w[l]));
    sw[l] = std::move(v);
  });
  return jump_apply(sw, true);
}

std::vector<Vector> FetiDp::recover_local(const std::vector<Vector>& f_local, const Vector& lambda) const {
  const auto bt = jump_transpose(lambda, false);
  std::vector<Vector> rhs(subs_.size());
  for (int l = 0; l < num_subdomains(); ++l) {
    const Subdomain& s = subs_[l];
    rhs[l] = f_local[l];
    for (std::size_t i = 0; i < s.dual.size(); ++i) rhs[l](s.dual[i]) -= bt[l](i);
  }
  auto u = apply_Ktilde_inverse(rhs);
  for (int l = 0; l < num_subdomains(); ++l) u[l] = subs_[l].T * u[l];
  return u;
}

Vector FetiDp::recover(const std::vector<Vector>& f_local, const Vector& lambda) const {
  const auto x = recover_local(f_local, lambda);
  Vector u = Vector::Zero(mesh_.num_vertices());
  for (int l = 0; l < num_subdomains(); ++l) {
    const Subdomain& s = subs_[l];
    for (std::size_t j = 0; j < s.vertices.size(); ++j) {
      const int v = s.vertices[j];
      const auto& nb = index_.neighbours[v];
      double w = 1;
      if (!nb.empty()) {
        const auto d = decomp::scaling_coefficients(nb, rho_, options_.gamma);
        w = d[std::find(nb.begin(), nb.end(), l) - nb.begin()];
      }
      u(v) += w * x[l](j);
    }
  }
  return u;
}

FetiDp::Result FetiDp::solve(const Vector& f_vertices, const krylov::PcgOptions& options) const {
  const auto f = split_load(f_vertices);
  const Vector d = dual_rhs(f);
  auto res = krylov::pcg([this](const Vector& x) { return apply_F(x); },
                         [this](const Vector& x) { return apply_M(x); }, d, options);
  Result out;
  out.u = recover(f, res.solution);
  out.lambda = std::move(res.solution);
  out.report = std::move(res.report);
  return out;
}

}  // namespace vemfeti::fetidp
