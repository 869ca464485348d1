#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <omp.h>

#include "doctest.h"
#include "vemfeti/error.hpp"
#include "vemfeti/fetidp.hpp"
#include "vemfeti/vem.hpp"

using namespace vemfeti;
using namespace vemfeti::fetidp;
using Eigen::MatrixXd;

namespace {

struct Problem {
  mesh::PolyMesh mesh;
  decomp::Partition part;
  decomp::InterfaceIndex index;
  std::vector<double> rho;
  Vector f;       // load per vertex
  Vector direct;  // reference solution per vertex
};

Problem make_problem(int n, int N, bool checkerboard) {
  Problem p;
  p.mesh = mesh::glue_reflected(mesh::generate_truncated_octahedra(n), N);
  p.part = decomp::partition_box(p.mesh, N);
  p.index = decomp::classify_interface(p.mesh, p.part);
  p.rho.assign(p.part.num_subdomains(), 1.0);
  if (checkerboard)
    for (int l = 0; l < p.part.num_subdomains(); ++l) {
      const auto c = p.part.coords(l);
      p.rho[l] = (c[0] + c[1] + c[2]) % 2 ? 1e-5 : 1e5;
    }
  std::vector<double> rho_cell(p.mesh.num_cells());
  for (int c = 0; c < p.mesh.num_cells(); ++c) rho_cell[c] = p.rho[p.part.cell_subdomain[c]];
  const auto sys = vem::assemble(p.mesh, rho_cell, [](const mesh::Vec3& x) {
    return std::sin(2 * M_PI * x(0)) * std::sin(2 * M_PI * x(1)) * std::sin(2 * M_PI * x(2));
  });
  p.f = Vector::Zero(p.mesh.num_vertices());
  for (std::size_t i = 0; i < sys.free_vertices.size(); ++i) p.f(sys.free_vertices[i]) = sys.f(i);
  p.direct = vem::solve_direct(sys);
  return p;
}

/// Dense partially assembled system: r dofs of every subdomain, then primal dofs.
struct DenseTilde {
  MatrixXd K, B;
  std::vector<std::vector<int>> map;  // per subdomain: local dof -> global
};

DenseTilde dense_tilde(const FetiDp& F) {
  DenseTilde d;
  int size = 0;
  for (const auto& s : F.subdomains()) size += static_cast<int>(s.r_index.size());
  const int r_total = size;
  size += F.num_primal();
  d.K = MatrixXd::Zero(size, size);
  d.B = MatrixXd::Zero(F.num_multipliers(), size);
  int offset = 0;
  for (const auto& s : F.subdomains()) {
    std::vector<int> m(s.vertices.size(), -1);
    for (std::size_t i = 0; i < s.r_index.size(); ++i) m[s.r_index[i]] = offset + static_cast<int>(i);
    for (std::size_t i = 0; i < s.primal.size(); ++i) m[s.primal[i]] = r_total + s.primal_global[i];
    const MatrixXd Kl = s.K_hat.full();
    for (int i = 0; i < Kl.rows(); ++i)
      for (int j = 0; j < Kl.cols(); ++j) d.K(m[i], m[j]) += Kl(i, j);
    const MatrixXd Bl = s.B_local;
    for (std::size_t i = 0; i < s.dual.size(); ++i) d.B.col(m[s.dual[i]]) += Bl.col(static_cast<int>(i));
    offset += static_cast<int>(s.r_index.size());
    d.map.push_back(std::move(m));
  }
  return d;
}

MatrixXd select(const MatrixXd& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

Vector random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("change of basis") {
  const auto p = make_problem(2, 2, false);
  const auto spec = decomp::primal_constraints(p.mesh, p.index, decomp::Variant::VEF);
  const auto bases = change_basis(spec, p.index);
  CHECK(bases.size() == 18);
  for (const auto& b : bases) {
    double sum = 0;
    for (double w : b.weights) sum += w;
    CHECK(sum == doctest::Approx(1).epsilon(1e-14));
  }
  const FetiDp F(p.mesh, p.part, p.index, p.rho, {decomp::Variant::VEF, 1.0, Exec::serial});
  for (int l = 0; l < F.num_subdomains(); ++l) {
    const auto& s = F.subdomains()[l];
    const int n = static_cast<int>(s.vertices.size());
    const MatrixXd T = s.T, Tinv = basis_matrix_inverse(F.bases(), s.vertices);
    CHECK((T * Tinv - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    // Energy is invariant: xhat' Khat xhat = x' K x.
    std::vector<int> vi(p.mesh.num_vertices(), -1);
    for (int j = 0; j < n; ++j) vi[s.vertices[j]] = j;
    const auto K = vem::assemble_subset(p.mesh, p.part.cells[l], std::vector<double>(p.part.cells[l].size(), 1.0), vi, n);
    const Vector x = random_vector(n, 7 + l);
    const Vector xhat = Tinv * x;
    CHECK(xhat.dot(s.K_hat.apply(xhat)) == doctest::Approx(x.dot(K.apply(x))).epsilon(1e-11));
  }
}

TEST_CASE("operators against dense oracles") {
  for (const auto v : {decomp::Variant::V, decomp::Variant::E, decomp::Variant::VE, decomp::Variant::F}) {
    CAPTURE(decomp::to_string(v));
    const auto p = make_problem(1, 3, true);
    const FetiDp F(p.mesh, p.part, p.index, p.rho, {v, 1.0, Exec::serial});
    const auto D = dense_tilde(F);
    const Eigen::LLT<MatrixXd> llt(D.K);
    REQUIRE(llt.info() == Eigen::Success);

    // F = B Ktilde^-1 B^T.
    const MatrixXd Fd = D.B * llt.solve(D.B.transpose());
    const Vector lambda = random_vector(F.num_multipliers(), 3);
    CHECK((F.apply_F(lambda) - Fd * lambda).norm() <= 1e-9 * (Fd * lambda).norm());

    // Coarse matrix is the primal Schur complement of Ktilde.
    const int r_total = static_cast<int>(D.K.rows()) - F.num_primal();
    std::vector<int> r(r_total), pi(F.num_primal());
    for (int i = 0; i < r_total; ++i) r[i] = i;
    for (int i = 0; i < F.num_primal(); ++i) pi[i] = r_total + i;
    const MatrixXd Krr = select(D.K, r, r), KrP = select(D.K, r, pi);
    const MatrixXd S = select(D.K, pi, pi) - KrP.transpose() * Krr.llt().solve(KrP);
    CHECK((MatrixXd(F.coarse_matrix()) - S).norm() <= 1e-9 * S.norm());

    // d = B Ktilde^-1 ftilde.
    const auto f = F.split_load(p.f);
    Vector ft = Vector::Zero(D.K.rows());
    for (int l = 0; l < F.num_subdomains(); ++l)
      for (int j = 0; j < f[l].size(); ++j) ft(D.map[l][j]) += f[l](j);
    const Vector dd = D.B * llt.solve(ft);
    CHECK((F.dual_rhs(f) - dd).norm() <= 1e-9 * dd.norm());

    // M = sum BD S_DD BD^T with a dense Schur complement.
    MatrixXd M = MatrixXd::Zero(F.num_multipliers(), F.num_multipliers());
    for (const auto& s : F.subdomains()) {
      const MatrixXd Kl = s.K_hat.full();
      const MatrixXd KII = select(Kl, s.interior, s.interior), KID = select(Kl, s.interior, s.dual);
      const MatrixXd SDD = select(Kl, s.dual, s.dual) - KID.transpose() * KII.llt().solve(KID);
      const MatrixXd BD = s.BD_local;
      M += BD * SDD * BD.transpose();
    }
    CHECK((F.apply_M(lambda) - M * lambda).norm() <= 1e-9 * (M * lambda).norm());
  }
}

TEST_CASE("split load and recovery are consistent") {
  const auto p = make_problem(1, 3, true);
  const FetiDp F(p.mesh, p.part, p.index, p.rho, {decomp::Variant::E, 1.0, Exec::serial});
  const auto f = F.split_load(p.f);
  Vector sum = Vector::Zero(p.mesh.num_vertices());
  for (int l = 0; l < F.num_subdomains(); ++l) {
    const auto& s = F.subdomains()[l];
    const Vector x = basis_matrix_inverse(F.bases(), s.vertices).transpose() * f[l];
    for (std::size_t j = 0; j < s.vertices.size(); ++j) sum(s.vertices[j]) += x(j);
  }
  CHECK((sum - p.f).norm() <= 1e-14 * p.f.norm());
}

TEST_CASE("symmetry of the dual operators") {
  const auto p = make_problem(1, 3, true);
  const FetiDp F(p.mesh, p.part, p.index, p.rho, {decomp::Variant::V, 1.0, Exec::serial});
  const Vector start = random_vector(F.num_multipliers(), 9);
  CHECK(krylov::lanczos_asymmetry([&](const Vector& x) { return F.apply_F(x); }, start, 20) < 1e-10);
  CHECK(krylov::lanczos_asymmetry([&](const Vector& x) { return F.apply_M(x); }, start, 20) < 1e-10);
}

TEST_CASE("solutions agree with the direct solver") {
  for (const bool cb : {false, true}) {
    const auto p = make_problem(1, 3, cb);
    for (const auto v : decomp::kAllVariants) {
      CAPTURE(decomp::to_string(v));
      CAPTURE(cb);
      const FetiDp F(p.mesh, p.part, p.index, p.rho, {v, 1.0, Exec::parallel});
      const auto res = F.solve(p.f, {1e-12, 1000});
      CHECK(res.report.converged);
      CHECK(res.report.iterations <= F.num_multipliers() + 5);
      CHECK((res.u - p.direct).norm() <= 1e-8 * p.direct.norm());

      // Local solutions are continuous and satisfy every primal constraint.
      const auto x = F.recover_local(F.split_load(p.f), res.lambda);
      double scale = 0, jump = 0;
      for (int l = 0; l < F.num_subdomains(); ++l) {
        const auto& s = F.subdomains()[l];
        for (std::size_t j = 0; j < s.vertices.size(); ++j) {
          scale = std::max(scale, std::abs(x[l](j)));
          jump = std::max(jump, std::abs(x[l](j) - p.direct(s.vertices[j])));
        }
      }
      CHECK(jump <= 1e-8 * scale);
    }
  }
}

TEST_CASE("mirror-symmetric eight-subdomain problem converges in one step") {
  const auto p = make_problem(2, 2, false);
  for (const auto v : decomp::kAllVariants) {
    CAPTURE(decomp::to_string(v));
    const FetiDp F(p.mesh, p.part, p.index, p.rho, {v, 1.0, Exec::parallel});
    const auto res = F.solve(p.f, {1e-10, 100});
    CHECK(res.report.iterations <= 1);
    CHECK(res.report.kappa_est == doctest::Approx(1).epsilon(1e-8));
  }
}

TEST_CASE("richer primal spaces do not worsen the condition number") {
  const auto p = make_problem(2, 3, true);
  double kappa[3];
  int k = 0;
  for (const auto v : {decomp::Variant::E, decomp::Variant::VE, decomp::Variant::VEF}) {
    const FetiDp F(p.mesh, p.part, p.index, p.rho, {v, 1.0, Exec::parallel});
    kappa[k++] = F.solve(p.f, {1e-12, 1000}).report.kappa_est;
  }
  CHECK(kappa[1] <= kappa[0] * 1.05);
  CHECK(kappa[2] <= kappa[1] * 1.05);
}

TEST_CASE("serial and parallel paths agree exactly") {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto p = make_problem(2, 3, true);
  const FetiDp S(p.mesh, p.part, p.index, p.rho, {decomp::Variant::VE, 1.0, Exec::serial});
  const FetiDp P(p.mesh, p.part, p.index, p.rho, {decomp::Variant::VE, 1.0, Exec::parallel});
  const Vector lambda = random_vector(S.num_multipliers(), 4);
  CHECK((S.apply_F(lambda) - P.apply_F(lambda)).cwiseAbs().maxCoeff() == 0);
  CHECK((S.apply_M(lambda) - P.apply_M(lambda)).cwiseAbs().maxCoeff() == 0);
  const auto rs = S.solve(p.f, {1e-12, 1000}), rp = P.solve(p.f, {1e-12, 1000});
  CHECK(rs.report.iterations == rp.report.iterations);
  CHECK(rs.report.kappa_est == rp.report.kappa_est);
  CHECK((rs.u - rp.u).cwiseAbs().maxCoeff() == 0);
  omp_set_num_threads(saved);
}

TEST_CASE("argument errors") {
  const auto p = make_problem(1, 2, false);
  CHECK_THROWS_AS(FetiDp(p.mesh, p.part, p.index, {1.0}, {}), UsageError);
  CHECK_THROWS_AS(FetiDp(p.mesh, p.part, p.index, p.rho, {decomp::Variant::VE, 0.4, Exec::serial}), UsageError);
  const auto one = decomp::partition_box(p.mesh, 1);
  const auto idx1 = decomp::classify_interface(p.mesh, one);
  CHECK_THROWS_AS(FetiDp(p.mesh, one, idx1, {1.0}, {}), UsageError);
}

TEST_CASE("zero data gives zero results") {
  const auto p = make_problem(1, 2, false);
  const FetiDp F(p.mesh, p.part, p.index, p.rho, {decomp::Variant::V, 1.0, Exec::serial});
  CHECK(F.apply_F(Vector::Zero(F.num_multipliers())).norm() == 0);
  const auto res = F.solve(Vector::Zero(p.mesh.num_vertices()), {1e-12, 100});
  CHECK(res.report.iterations == 0);
  CHECK(res.u.norm() == 0);
}
