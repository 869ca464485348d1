#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vemfeti/decomp.hpp"
#include "vemfeti/error.hpp"
#include "vemfeti/experiment.hpp"
#include "vemfeti/fetidp.hpp"
#include "vemfeti/mesh.hpp"

using namespace vemfeti;

namespace {

constexpr int kOk = 0, kUsage = 2, kNumerical = 3, kMesh = 4;

void print_row(const experiment::ResultRow& r) {
  std::fprintf(stderr, "L=%d %s dofs=%ld primal=%d kappa=%s it=%d%s\n", r.L, r.variant.c_str(), r.dofs, r.primal,
               experiment::format_kappa(r.kappa).c_str(), r.iters, r.converged ? "" : " (not converged)");
}

void dump_operators(const mesh::PolyMesh& reference, int N, const experiment::ExperimentConfig& config,
                    decomp::Variant variant, const std::string& path) {
  const auto glued = mesh::glue_reflected(reference, N);
  const auto part = decomp::partition_box(glued, N);
  const auto index = decomp::classify_interface(glued, part);
  const fetidp::FetiDp feti(glued, part, index, config.rho.per_subdomain(part), {variant, config.gamma});
  const int m = feti.num_multipliers();
  if (m > 4000) throw UsageError("--dump-feti-ops is limited to 4000 multipliers (got " + std::to_string(m) + ")");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  for (int j = 0; j < m; ++j) {
    krylov::Vector e = krylov::Vector::Zero(m);
    e(j) = 1;
    const krylov::Vector f = feti.apply_F(e), p = feti.apply_M(e);
    for (int i = 0; i < m; ++i)
      if (f(i) != 0) out << "F " << i << ' ' << j << ' ' << f(i) << '\n';
    for (int i = 0; i < m; ++i)
      if (p(i) != 0) out << "M " << i << ' ' << j << ' ' << p(i) << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Lowest-order VEM with FETI-DP domain decomposition"};
  app.require_subcommand(1);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate or inspect polyhedral meshes");
  mesh_cmd->require_subcommand(1);
  auto* gen = mesh_cmd->add_subcommand("gen", "Write a generated mesh of the unit cube");
  std::string kind = "oct", out_path;
  int n = 1;
  gen->add_option("--kind", kind, "oct or cube")->check(CLI::IsMember({"oct", "cube"}));
  gen->add_option("--n", n, "Resolution")->required()->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Output .poly3d file")->required();
  auto* info = mesh_cmd->add_subcommand("info", "Print h,h_min,gamma_star,nv,nf,nc");
  std::string info_path;
  info->add_option("file", info_path, "Mesh file")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one problem with FETI-DP");
  std::string mesh_file, gen_spec, variant = "VE", rho = "const:1", rhs = "auto", csv, dump;
  int N = 2;
  experiment::ExperimentConfig sc;
  bool no_timing = false, serial = false;
  auto* mesh_opt = solve->add_option("--mesh", mesh_file, "Reference subdomain mesh file");
  solve->add_option("--gen", gen_spec, "Generated reference mesh, oct:N or cube:N")->excludes(mesh_opt);
  solve->add_option("--subdomains", N, "Subdomains per axis")->check(CLI::PositiveNumber);
  solve->add_option("--variant", variant, "V, E, F, VE, VF, EF or VEF");
  solve->add_option("--rho", rho, "const:VAL or checkerboard:R1,R2");
  solve->add_option("--rhs", rhs, "auto, sin or random")->check(CLI::IsMember({"auto", "sin", "random"}));
  solve->add_option("--tol", sc.tol, "Relative dual residual reduction (default by rho)");
  solve->add_option("--max-iterations", sc.max_iterations, "PCG iteration limit");
  solve->add_option("--gamma", sc.gamma, "Scaling exponent");
  solve->add_option("--seed", sc.seed, "Random right-hand side seed");
  solve->add_option("--out", csv, "Write the result row as CSV");
  solve->add_option("--dump-feti-ops", dump, "Write dense F and M as triplets");
  solve->add_flag("--no-timing", no_timing, "Report 0 seconds");
  solve->add_flag("--serial", serial, "Use the serial reference kernels");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run Test 1 or Test 2 from a config file");
  std::string which, config_path, exp_out;
  bool full = false, exp_no_timing = false;
  exp->add_option("test", which, "test1 or test2")->required()->check(CLI::IsMember({"test1", "test2"}));
  exp->add_option("--config", config_path, "Flat key = value config file")->required();
  exp->add_option("--out", exp_out, "Output CSV (overrides the config)");
  exp->add_flag("--full", full, "Use the full-size runs");
  exp->add_flag("--no-timing", exp_no_timing, "Report 0 seconds");
  exp->add_flag("--serial", serial, "Use the serial reference kernels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  const Exec exec = serial ? Exec::serial : Exec::parallel;

  if (gen->parsed()) {
    const auto m = kind == "oct" ? mesh::generate_truncated_octahedra(n) : mesh::generate_cube_grid(n);
    mesh::write_polymesh(m, out_path);
    return kOk;
  }
  if (info->parsed()) {
    const auto m = mesh::read_polymesh(info_path);
    const auto q = mesh::mesh_quality(m);
    std::printf("%.9e,%.9e,%.9e,%d,%d,%d\n", q.h, q.h_min, q.gamma_star, m.num_vertices(), m.num_faces(), m.num_cells());
    return kOk;
  }
  if (solve->parsed()) {
    if (mesh_file.empty() && gen_spec.empty()) throw UsageError("solve needs --mesh FILE or --gen oct:N");
    const auto spec = mesh_file.empty() ? experiment::MeshSpec::parse(gen_spec)
                                        : experiment::MeshSpec{experiment::MeshSpec::Kind::file, 1, mesh_file};
    sc.rho = experiment::RhoSpec::parse(rho);
    sc.rhs = rhs == "sin" ? experiment::Rhs::sine : rhs == "random" ? experiment::Rhs::random : experiment::Rhs::automatic;
    sc.timing = !no_timing;
    sc.references = {spec};
    sc.subdomains = {N};
    sc.variants = {decomp::parse_variant(variant)};
    sc.validate();
    const auto reference = spec.build();
    if (!dump.empty()) dump_operators(reference, N, sc, sc.variants[0], dump);
    const auto run = experiment::run_single(reference, N, sc.variants[0], sc, exec);
    if (csv.empty())
      experiment::write_csv({run.row}, std::cout);
    else
      experiment::emit_csv({run.row}, csv);
    if (!run.row.converged) {
      std::fprintf(stderr, "PCG did not converge in %d iterations\n", run.row.iters);
      return kNumerical;
    }
    return kOk;
  }
  if (exp->parsed()) {
    auto config = experiment::load_config(config_path);
    const int test = which == "test1" ? 1 : 2;
    if (config.test != test)
      throw UsageError("config file describes test" + std::to_string(config.test) + ", not " + which);
    if (full) experiment::apply_full_scale(config);
    if (exp_no_timing) config.timing = false;
    if (!exp_out.empty()) config.output = exp_out;
    std::vector<experiment::ResultRow> rows;
    if (test == 1) {
      rows = experiment::run_test1(config, print_row, exec);
    } else {
      const auto res = experiment::run_test2(config, print_row, exec);
      rows = res.rows;
      for (std::size_t k = 0; k < config.variants.size(); ++k) {
        const auto& f = res.fits[k];
        std::fprintf(stderr, "fit %s: sqrt(kappa) = %.6f * (1 + log(H/h)) + %.6f, r2 = %.6f\n",
                     decomp::to_string(config.variants[k]).c_str(), f.slope, f.intercept, f.r2);
      }
    }
    if (config.output.empty())
      experiment::write_csv(rows, std::cout);
    else
      experiment::emit_csv(rows, config.output);
    for (const auto& r : rows)
      if (!r.converged) return kNumerical;
    return kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  } catch (const MeshError& e) {
    std::fprintf(stderr, "mesh error: %s\n", e.what());
    return kMesh;
  } catch (const UnsupportedError& e) {
    std::fprintf(stderr, "mesh error: %s\n", e.what());
    return kMesh;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
