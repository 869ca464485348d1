#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "vemfeti/decomp.hpp"
#include "vemfeti/error.hpp"
#include "vemfeti/experiment.hpp"
#include "vemfeti/fetidp.hpp"
#include "vemfeti/mesh.hpp"
#include "vemfeti/vem.hpp"

using namespace vemfeti;
using experiment::ExperimentConfig;
using experiment::MeshSpec;
using experiment::RhoSpec;
using Eigen::MatrixXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sine(const mesh::Vec3& x) {
  return std::sin(2 * M_PI * x(0)) * std::sin(2 * M_PI * x(1)) * std::sin(2 * M_PI * x(2));
}

double max_abs(const MatrixXd& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

Outcome patch_test() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto linear = [](const mesh::Vec3& x) { return 1.0 + 2.0 * x(0) - 3.0 * x(1) + 0.5 * x(2); };
  std::vector<mesh::PolyMesh> meshes;
  for (int n : {1, 2, 3}) meshes.push_back(mesh::generate_cube_grid(n));
  for (int n : {1, 2}) meshes.push_back(mesh::generate_truncated_octahedra(n));
  double err = 0;
  for (const auto& m : meshes) {
    const auto u = vem::lifted_solve(m, std::vector<double>(m.num_cells(), 1.0), linear);
    for (int v = 0; v < m.num_vertices(); ++v) err = std::max(err, std::abs(u(v) - linear(m.vertices[v])));
  }
  const double t = seconds_since(t0);
  return {err <= 1e-10 && t < 10, fmt("5 meshes, max nodal error %.2e, %.2f s", err, t)};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  bool all_converged = true;
  int runs = 0;
  for (const char* ref : {"cube:2", "oct:2"}) {
    const auto reference = MeshSpec::parse(ref).build();
    const auto glued = mesh::glue_reflected(reference, 2);
    const auto part = decomp::partition_box(glued, 2);
    for (const char* rho : {"const:1", "checkerboard:1e5,1e-5"}) {
      ExperimentConfig c;
      c.rho = RhoSpec::parse(rho);
      c.rhs = experiment::Rhs::sine;
      c.tol = 1e-12;
      c.timing = false;
      const auto rho_sub = c.rho.per_subdomain(part);
      std::vector<double> rho_cell(glued.num_cells());
      for (int k = 0; k < glued.num_cells(); ++k) rho_cell[k] = rho_sub[part.cell_subdomain[k]];
      const auto direct = vem::solve_direct(vem::assemble(glued, rho_cell, sine));
      for (const auto v : decomp::kAllVariants) {
        const auto run = experiment::run_single(reference, 2, v, c);
        all_converged = all_converged && run.row.converged;
        worst = std::max(worst, (run.u - direct).lpNorm<Eigen::Infinity>() / direct.lpNorm<Eigen::Infinity>());
        ++runs;
      }
    }
  }
  const double t = seconds_since(t0);
  return {all_converged && worst <= 1e-8 && t < 60,
          fmt("%d solves (cube:2 and oct:2, 7 variants, two coefficients), max relative error %.2e, %.1f s", runs,
              worst, t)};
}

Outcome operator_identities() {
  const auto glued = mesh::glue_reflected(mesh::generate_truncated_octahedra(2), 2);
  const auto part = decomp::partition_box(glued, 2);
  const auto index = decomp::classify_interface(glued, part);
  const auto rho = RhoSpec::parse("checkerboard:1e5,1e-5").per_subdomain(part);
  double identity = 0, projection = 0, f_err = 0, m_err = 0;
  for (const auto v : decomp::kAllVariants) {
    const fetidp::FetiDp F(glued, part, index, rho, {v, 1.0, Exec::serial});
    const auto& J = F.jump();
    const MatrixXd B = J.B, BD = J.BD, E = decomp::averaging_operator(F.instances(), J.d);
    const int n = static_cast<int>(E.rows());
    identity = std::max(identity, max_abs(BD.transpose() * B + E - MatrixXd::Identity(n, n)));
    projection = std::max(projection, max_abs(E * E - E));

    // Dense partially assembled matrix: r dofs of every subdomain, then the primal dofs.
    int r_total = 0;
    for (const auto& s : F.subdomains()) r_total += static_cast<int>(s.r_index.size());
    const int size = r_total + F.num_primal(), m = F.num_multipliers();
    MatrixXd K = MatrixXd::Zero(size, size), Bt = MatrixXd::Zero(m, size), M = MatrixXd::Zero(m, m);
    int offset = 0;
    for (const auto& s : F.subdomains()) {
      std::vector<int> map(s.vertices.size(), -1);
      for (std::size_t i = 0; i < s.r_index.size(); ++i) map[s.r_index[i]] = offset + static_cast<int>(i);
      for (std::size_t i = 0; i < s.primal.size(); ++i) map[s.primal[i]] = r_total + s.primal_global[i];
      const MatrixXd Kl = s.K_hat.full(), Bl = s.B_local, BDl = s.BD_local;
      for (int i = 0; i < Kl.rows(); ++i)
        for (int j = 0; j < Kl.cols(); ++j) K(map[i], map[j]) += Kl(i, j);
      for (std::size_t i = 0; i < s.dual.size(); ++i) Bt.col(map[s.dual[i]]) += Bl.col(static_cast<int>(i));
      offset += static_cast<int>(s.r_index.size());

      const auto pick = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        MatrixXd out(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = Kl(rows[i], cols[j]);
        return out;
      };
      const MatrixXd KII = pick(s.interior, s.interior), KID = pick(s.interior, s.dual);
      const MatrixXd SDD = pick(s.dual, s.dual) - KID.transpose() * KII.llt().solve(KID);
      M += BDl * SDD * BDl.transpose();
    }
    const MatrixXd Fd = Bt * K.llt().solve(Bt.transpose());
    MatrixXd Fm(m, m), Mm(m, m);
    for (int j = 0; j < m; ++j) {
      krylov::Vector e = krylov::Vector::Zero(m);
      e(j) = 1;
      Fm.col(j) = F.apply_F(e);
      Mm.col(j) = F.apply_M(e);
    }
    f_err = std::max(f_err, (Fm - Fd).norm() / Fd.norm());
    m_err = std::max(m_err, (Mm - M).norm() / M.norm());
  }
  return {identity <= 1e-10 && projection <= 1e-10 && f_err <= 1e-9 && m_err <= 1e-9,
          fmt("L=8 oct:2 checkerboard, 7 variants: |BD'B+E-I| %.1e, |E^2-E| %.1e, F rel %.1e, M rel %.1e", identity,
              projection, f_err, m_err)};
}

/// Rows of the small octahedra experiment: L=8 with every variant, then L=64 with VE.
std::vector<experiment::ResultRow> spot_experiment() {
  ExperimentConfig c;
  c.references = {MeshSpec::parse("oct:4")};
  c.subdomains = {2};
  c.variants.assign(decomp::kAllVariants.begin(), decomp::kAllVariants.end());
  c.timing = false;
  auto rows = experiment::run_test1(c);
  c.subdomains = {4};
  c.variants = {decomp::Variant::VE};
  const auto more = experiment::run_test1(c);
  rows.insert(rows.end(), more.begin(), more.end());
  return rows;
}

std::string spot_csv;

Outcome spot_values() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = spot_experiment();
  const double t = seconds_since(t0);
  std::ostringstream csv;
  experiment::write_csv(rows, csv);
  spot_csv = csv.str();
  bool ok = t < 600;
  double worst = 0;
  int max_it = 0;
  for (const auto& r : rows)
    if (r.L == 8) {
      worst = std::max(worst, std::abs(r.kappa - 1));
      max_it = std::max(max_it, r.iters);
      ok = ok && r.converged && std::abs(r.kappa - 1) <= 1e-6 && r.iters == 1;
    }
  const auto& big = rows.back();
  ok = ok && big.L == 64 && big.converged && big.kappa >= 1.2 && big.kappa <= 2.2 && big.iters <= 10;
  return {ok, fmt("L=8: max |kappa-1| %.1e, max it %d; L=64 VE: kappa %s, it %d (reference 1.575555, 7), %.0f s",
                  worst, max_it, experiment::format_kappa(big.kappa).c_str(), big.iters, t)};
}

experiment::SolveRun l27(decomp::Variant v, const char* rho) {
  ExperimentConfig c;
  c.rho = RhoSpec::parse(rho);
  c.timing = false;
  return experiment::run_single(MeshSpec::parse("oct:3").build(), 3, v, c);
}

Outcome robustness() {
  const auto one = l27(decomp::Variant::VE, "const:1"), cb = l27(decomp::Variant::VE, "checkerboard:1e5,1e-5");
  const double ratio = cb.row.kappa / one.row.kappa;
  return {one.row.converged && cb.row.converged && ratio <= 1.5 && cb.row.iters <= one.row.iters + 3,
          fmt("L=27 oct:3 VE: kappa %s (rho=1, it %d) vs %s (checkerboard, it %d), ratio %.3f",
              experiment::format_kappa(one.row.kappa).c_str(), one.row.iters,
              experiment::format_kappa(cb.row.kappa).c_str(), cb.row.iters, ratio)};
}

Outcome face_breakdown() {
  const auto f = l27(decomp::Variant::F, "checkerboard:1e5,1e-5"), e = l27(decomp::Variant::E, "checkerboard:1e5,1e-5");
  return {f.row.kappa >= 1e5 && e.row.kappa <= 10 && e.row.converged,
          fmt("L=27 oct:3 checkerboard: kappa(F) %s (it %d), kappa(E) %s (it %d)",
              experiment::format_kappa(f.row.kappa).c_str(), f.row.iters,
              experiment::format_kappa(e.row.kappa).c_str(), e.row.iters)};
}

Outcome quasi_optimality() {
  ExperimentConfig c;
  c.test = 2;
  c.references.clear();
  for (int n = 2; n <= 5; ++n) c.references.push_back(MeshSpec{MeshSpec::Kind::oct, n, {}});
  c.subdomains = {3};
  c.variants = {decomp::Variant::V, decomp::Variant::VE};
  c.timing = false;
  const auto res = experiment::run_test2(c);
  const auto& fv = res.fits[0];
  const auto& fve = res.fits[1];
  double first_v = 0, last_v = 0, first_ve = 0, last_ve = 0;
  bool converged = true;
  for (const auto& r : res.rows) {
    converged = converged && r.converged;
    double& first = r.variant == "V" ? first_v : first_ve;
    double& last = r.variant == "V" ? last_v : last_ve;
    if (first == 0) first = r.kappa;
    last = r.kappa;
  }
  const bool faster = fv.slope > fve.slope && last_v / first_v > last_ve / first_ve && last_v > last_ve;
  return {converged && fve.r2 >= 0.9 && fve.slope > 0 && faster,
          fmt("N=3 oct:2..5: VE slope %.4f r2 %.4f; V slope %.4f; largest mesh kappa V %.4f vs VE %.4f", fve.slope,
              fve.r2, fv.slope, last_v, last_ve)};
}

Outcome full_scale_path() {
  ExperimentConfig t1, t2;
  t2.test = 2;
  experiment::apply_full_scale(t1);
  experiment::apply_full_scale(t2);
  const int L1 = t1.subdomains.back() * t1.subdomains.back() * t1.subdomains.back();
  const bool ok = L1 == 1728 && t2.references.size() == 8 && t2.subdomains == std::vector<int>{6};
  return {ok, fmt("full-size configuration available (test 1 up to L=%d, test 2 with %zu meshes); not run", L1,
                  t2.references.size())};
}

Outcome mesh_metrics() {
  const double h_ref[] = {4.330127e-01, 2.886757e-01, 2.165064e-01, 1.732051e-01};
  const double g_ref[] = {6.060606e-02, 6.060531e-02, 6.060606e-02, 6.060606e-02};
  double worst_h = 0, worst_exact = 0, worst_g = 0;
  for (int k = 0; k < 4; ++k) {
    const auto m = mesh::generate_truncated_octahedra(k + 2);
    // Cell diameter on coordinates stored with 6 decimals.
    double h_rounded = 0;
    for (int c = 0; c < m.num_cells(); ++c) {
      std::vector<mesh::Vec3> x;
      for (int v : m.cell_vertices(c)) x.push_back((m.vertices[v] * 1e6).array().round() / 1e6);
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) h_rounded = std::max(h_rounded, (x[i] - x[j]).norm());
    }
    const auto q = mesh::mesh_quality(m);
    worst_h = std::max(worst_h, std::abs(h_rounded - h_ref[k]) / h_ref[k]);
    worst_exact = std::max(worst_exact, std::abs(q.h - h_ref[k]) / h_ref[k]);
    worst_g = std::max(worst_g, std::abs(q.gamma_star - g_ref[k]) / g_ref[k]);
  }
  return {worst_h <= 1e-6 && worst_g <= 0.05,
          fmt("oct:2..5: h rel dev %.2e (6-decimal coordinates), %.2e (exact coordinates); gamma* rel dev %.2e",
              worst_h, worst_exact, worst_g)};
}

Outcome determinism() {
  if (spot_csv.empty()) {
    std::ostringstream first;
    experiment::write_csv(spot_experiment(), first);
    spot_csv = first.str();
  }
  std::ostringstream csv;
  experiment::write_csv(spot_experiment(), csv);
  const bool same = csv.str() == spot_csv;
  return {same, fmt("rerun of the spot-value experiment: CSV %s (%zu bytes)", same ? "byte-identical" : "differs",
                    csv.str().size())};
}

}  // namespace

/// Runs every criterion, or only the 1-based indices given as arguments.
int main(int argc, char** argv) {
  const std::function<Outcome()> criteria[] = {patch_test,      oracle_equivalence, operator_identities, spot_values,
                                               robustness,      face_breakdown,     quasi_optimality,    full_scale_path,
                                               mesh_metrics,    determinism};
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]) - 1);
  if (selected.empty())
    for (int k = 0; k < 10; ++k) selected.push_back(k);
  int failed = 0;
  for (const int k : selected) {
    if (k < 0 || k >= 10) {
      std::fprintf(stderr, "no criterion %d\n", k + 1);
      return 2;
    }
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", k + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
