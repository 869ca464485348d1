#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>

#include "vemfeti/exec.hpp"
#include "vemfeti/fetidp.hpp"
#include "vemfeti/vem.hpp"

using namespace vemfeti;

namespace {

/// Best of `reps` wall-clock timings in seconds.
double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.4f %10.4f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 3;
  const int N = argc > 2 ? std::atoi(argv[2]) : 3;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("reference oct:%d, %d^3 subdomains, %d threads\n", n, N, max_threads());

  const auto mesh = mesh::glue_reflected(mesh::generate_truncated_octahedra(n), N);
  const auto part = decomp::partition_box(mesh, N);
  const auto index = decomp::classify_interface(mesh, part);
  const std::vector<double> rho_cell(mesh.num_cells(), 1.0), rho(part.num_subdomains(), 1.0);
  std::printf("%d cells, %d vertices\n\n", mesh.num_cells(), mesh.num_vertices());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "parallel s", "speedup");

  const double as = best_of(reps, [&] { vem::assemble_all(mesh, rho_cell, Exec::serial); });
  const double ap = best_of(reps, [&] { vem::assemble_all(mesh, rho_cell, Exec::parallel); });
  report("element assembly", as, ap);

  const fetidp::Options so{decomp::Variant::VE, 1.0, Exec::serial}, po{decomp::Variant::VE, 1.0, Exec::parallel};
  const double fs = best_of(1, [&] { fetidp::FetiDp(mesh, part, index, rho, so); });
  const double fp = best_of(1, [&] { fetidp::FetiDp(mesh, part, index, rho, po); });
  report("subdomain factorization", fs, fp);

  const fetidp::FetiDp S(mesh, part, index, rho, so), P(mesh, part, index, rho, po);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  krylov::Vector lambda(S.num_multipliers());
  for (auto& x : lambda) x = u(rng);
  report("apply F", best_of(reps, [&] { S.apply_F(lambda); }), best_of(reps, [&] { P.apply_F(lambda); }));
  report("apply M", best_of(reps, [&] { S.apply_M(lambda); }), best_of(reps, [&] { P.apply_M(lambda); }));

  const bool same = (S.apply_F(lambda) - P.apply_F(lambda)).cwiseAbs().maxCoeff() == 0 &&
                    (S.apply_M(lambda) - P.apply_M(lambda)).cwiseAbs().maxCoeff() == 0;
  std::printf("\nserial and parallel results identical: %s\n", same ? "yes" : "no");
  return same ? 0 : 1;
}
