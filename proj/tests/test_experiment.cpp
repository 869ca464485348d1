#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "vemfeti/error.hpp"
#include "vemfeti/experiment.hpp"
#include "vemfeti/vem.hpp"

using namespace vemfeti;
using namespace vemfeti::experiment;

TEST_CASE("config parsing") {
  std::istringstream in(R"(# desk run
test = 1
reference = oct:2
subdomains = 1, 2
variants = VE, F   # two variants
rho = checkerboard:1e5,1e-5
gamma = 0.5
seed = 42
timing = off
output = out.csv
)");
  const auto c = parse_config(in);
  CHECK(c.test == 1);
  REQUIRE(c.references.size() == 1);
  CHECK(c.references[0].str() == "oct:2");
  CHECK(c.subdomains == std::vector<int>{1, 2});
  CHECK(c.variants == std::vector<decomp::Variant>{decomp::Variant::VE, decomp::Variant::F});
  CHECK(c.rho.checkerboard);
  CHECK(c.rho.r1 == 1e5);
  CHECK(c.rho.r2 == 1e-5);
  CHECK(c.gamma == 0.5);
  CHECK(c.seed == 42);
  CHECK_FALSE(c.timing);
  CHECK(c.output == "out.csv");
  CHECK(c.effective_tol() == 1e-12);
  CHECK(c.effective_rhs() == Rhs::random);

  std::istringstream t2("test = 2\n");
  const auto d = parse_config(t2);
  CHECK(d.references.size() == 4);
  CHECK(d.subdomains == std::vector<int>{3});
  CHECK(d.effective_tol() == 1e-6);
  CHECK(d.effective_rhs() == Rhs::sine);
}

TEST_CASE("config errors") {
  for (const char* text : {"test = 3\n", "bogus = 1\n", "no equals sign\n", "subdomains = 0\n", "variants = VX\n",
                           "rho = const:-1\n", "gamma = 0.25\n", "references =\n", "tol = abc\n"}) {
    CAPTURE(text);
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_config(in), UsageError);
  }
  CHECK_THROWS_AS(MeshSpec::parse("tet:3"), UsageError);
  CHECK_THROWS_AS(RhoSpec::parse("checkerboard:1"), UsageError);
}

TEST_CASE("checkerboard colouring") {
  const auto m = mesh::glue_reflected(mesh::generate_truncated_octahedra(1), 3);
  const auto p = decomp::partition_box(m, 3);
  const auto rho = RhoSpec::parse("checkerboard:1e5,1e-5").per_subdomain(p);
  CHECK(rho[p.index(1, 1, 1)] == 1e5);
  CHECK(rho[p.index(0, 0, 0)] == 1e-5);
  CHECK(rho[p.index(1, 0, 0)] == 1e5);
  for (int l = 0; l < 27; ++l) {
    const auto c = p.coords(l);
    for (int a = 0; a < 3; ++a)
      if (c[a] + 1 < 3) {
        auto d = c;
        ++d[a];
        CHECK(rho[l] != rho[p.index(d[0], d[1], d[2])]);
      }
  }
}

TEST_CASE("csv formatting and round trip") {
  std::vector<ResultRow> rows(3);
  rows[0] = {8, "VE", 31928, 7, 1.0, 1, 0.0, 1};
  rows[1] = {64, "F", 261960, 144, 4.48292e9, 31, 12.3456, 7};
  rows[2] = {27, "E", 100, 36, 2.5724504, 8, 0.5, 18446744073709551615ull};
  CHECK(format_kappa(1.0) == "1.000000");
  CHECK(format_kappa(4.48292e9) == "4.482920e+09");
  std::ostringstream one;
  write_csv({rows[0]}, one);
  CHECK(one.str() == "L,variant,dofs,primal,kappa,iters,seconds,seed\n8,VE,31928,7,1.000000,1,0.000,1\n");

  std::stringstream s;
  write_csv(rows, s);
  const auto back = parse_csv(s);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].L == rows[i].L);
    CHECK(back[i].variant == rows[i].variant);
    CHECK(back[i].dofs == rows[i].dofs);
    CHECK(back[i].primal == rows[i].primal);
    CHECK(back[i].kappa == doctest::Approx(rows[i].kappa).epsilon(1e-6));
    CHECK(back[i].iters == rows[i].iters);
    CHECK(back[i].seconds == doctest::Approx(rows[i].seconds).epsilon(1e-3));
    CHECK(back[i].seed == rows[i].seed);
  }
  std::stringstream again;
  write_csv(back, again);
  CHECK(again.str() == s.str());
  CHECK_THROWS_AS(emit_csv({}, "unused.csv"), UsageError);
}

TEST_CASE("linear fit") {
  const auto f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
  CHECK(f.r2 == doctest::Approx(1));
  const auto g = linear_fit({0, 1, 2}, {0, 1, 0});
  CHECK(g.slope == doctest::Approx(0));
  CHECK(g.r2 == doctest::Approx(0));
  CHECK_THROWS_AS(linear_fit({1}, {1}), UsageError);
}

TEST_CASE("single subdomain is a direct solve") {
  ExperimentConfig c;
  c.timing = false;
  const auto ref = mesh::generate_truncated_octahedra(1);
  const auto run = run_single(ref, 1, decomp::Variant::VE, c);
  CHECK(run.row.L == 1);
  CHECK(run.row.kappa == 1.0);
  CHECK(run.row.iters == 0);
  CHECK(run.row.primal == 0);
  int free = 0;
  for (int v = 0; v < ref.num_vertices(); ++v) free += !ref.on_boundary[v];
  CHECK(run.row.dofs == free);
}

TEST_CASE("test 1 and test 2 drivers") {
  ExperimentConfig c;
  c.references = {MeshSpec::parse("oct:1")};
  c.subdomains = {1, 2};
  c.variants = {decomp::Variant::VE, decomp::Variant::E};
  c.timing = false;
  const auto rows = run_test1(c);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].L == 1);
  CHECK(rows[1].L == 8);
  CHECK(rows[1].primal == 7);
  CHECK(rows[2].primal == 6);
  for (const auto& r : rows) CHECK(r.converged);

  std::ostringstream a, b;
  write_csv(rows, a);
  write_csv(run_test1(c), b);
  CHECK(a.str() == b.str());

  // Dofs are the product-space dimension, matching the closed form per subdomain.
  c.references = {MeshSpec::parse("oct:4")};
  c.subdomains = {2};
  c.variants = {decomp::Variant::VE};
  const auto big = run_test1(c);
  CHECK(big[0].dofs == 31928);

  ExperimentConfig t2;
  t2.test = 2;
  t2.references = {MeshSpec::parse("oct:1"), MeshSpec::parse("oct:2")};
  t2.subdomains = {2};
  t2.variants = {decomp::Variant::VE};
  t2.timing = false;
  const auto res = run_test2(t2);
  CHECK(res.rows.size() == 2);
  REQUIRE(res.fits.size() == 1);
  CHECK(res.fits[0].points == 2);
  CHECK(res.rows[0].H_over_h == doctest::Approx(1 / (std::sqrt(3.0) / 2)));

  t2.subdomains = {2, 3};
  CHECK_THROWS_AS(run_test2(t2), UsageError);
  t2.references.clear();
  CHECK_THROWS_AS(run_test2(t2), UsageError);
}

TEST_CASE("FETI-DP result matches the direct solve through the driver") {
  ExperimentConfig c;
  c.rho = RhoSpec::parse("checkerboard:1e5,1e-5");
  c.timing = false;
  const auto ref = mesh::generate_truncated_octahedra(1);
  const auto run = run_single(ref, 2, decomp::Variant::VE, c);
  const auto glued = mesh::glue_reflected(ref, 2);
  const auto part = decomp::partition_box(glued, 2);
  const auto rho = c.rho.per_subdomain(part);
  std::vector<double> rho_cell(glued.num_cells());
  for (int k = 0; k < glued.num_cells(); ++k) rho_cell[k] = rho[part.cell_subdomain[k]];
  auto sys = vem::assemble(glued, rho_cell, [](const mesh::Vec3&) { return 0.0; });
  // Same random load as the driver.
  std::mt19937_64 rng(c.seed);
  for (int v = 0, i = 0; v < glued.num_vertices(); ++v)
    if (!glued.on_boundary[v]) sys.f(i++) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  const auto u = vem::solve_direct(sys);
  CHECK((run.u - u).lpNorm<Eigen::Infinity>() <= 1e-8 * u.lpNorm<Eigen::Infinity>());
}

TEST_CASE("shipped example configs load") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(VEMFETI_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK_NOTHROW(c.validate());
    ++count;
  }
  CHECK(count == 3);
}
