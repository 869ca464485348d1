#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vemfeti/decomp.hpp"
#include "vemfeti/exec.hpp"
#include "vemfeti/krylov.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::experiment {

/// Reference subdomain mesh on the unit cube: `oct:N`, `cube:N` or `file:PATH`.
struct MeshSpec {
  enum class Kind { oct, cube, file };
  Kind kind = Kind::oct;
  int n = 1;
  std::string path;

  static MeshSpec parse(const std::string& text);
  std::string str() const;
  mesh::PolyMesh build() const;
};

/// `const:VAL` or `checkerboard:R1,R2`: R1 on subdomains whose 1-based
/// indices i + j + k sum to an even number, R2 elsewhere.
struct RhoSpec {
  bool checkerboard = false;
  double r1 = 1, r2 = 1;

  static RhoSpec parse(const std::string& text);
  std::string str() const;
  std::vector<double> per_subdomain(const decomp::Partition& partition) const;
};

/// Right-hand side: `sin` loads g = sin(2 pi x) sin(2 pi y) sin(2 pi z);
/// `random` draws nodal load values uniformly in [-1, 1] from the seed;
/// `auto` picks sin for constant and random for checkerboard coefficients.
enum class Rhs { automatic, sine, random };

struct ExperimentConfig {
  int test = 1;
  std::vector<MeshSpec> references{MeshSpec{MeshSpec::Kind::oct, 4, {}}};
  std::vector<int> subdomains{2, 3, 4};
  std::vector<decomp::Variant> variants{decomp::Variant::V, decomp::Variant::E, decomp::Variant::F,
                                        decomp::Variant::VE, decomp::Variant::VF};
  RhoSpec rho;
  Rhs rhs = Rhs::automatic;
  double gamma = 1.0;
  double tol = 0;  // 0 selects 1e-6 (constant rho) or 1e-12 (checkerboard)
  int max_iterations = 1000;
  std::uint64_t seed = 1;
  std::string output;
  bool timing = true;  // false writes 0 seconds so output is byte-reproducible

  double effective_tol() const;
  Rhs effective_rhs() const;
  void validate() const;
};

/// Parses the flat `key = value` format; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces the desk-scale sizes by the full-size runs (unbounded runtime).
void apply_full_scale(ExperimentConfig& config);

struct ResultRow {
  int L = 1;
  std::string variant;
  long dofs = 0;
  int primal = 0;
  double kappa = 1;
  int iters = 0;
  double seconds = 0;
  std::uint64_t seed = 0;
  // Not serialized.
  bool converged = true;
  double H_over_h = 0;
};

struct SolveRun {
  ResultRow row;
  krylov::Vector u;  // per vertex of the glued mesh
  krylov::PcgReport report;
};

/// Glues N^3 reflected copies of `reference`, solves with FETI-DP (direct
/// solve for N = 1) and reports one row.
SolveRun run_single(const mesh::PolyMesh& reference, int N, decomp::Variant variant, const ExperimentConfig& config,
                    Exec exec = Exec::parallel);

using Progress = void (*)(const ResultRow&);

std::vector<ResultRow> run_test1(const ExperimentConfig& config, Progress progress = nullptr,
                                 Exec exec = Exec::parallel);

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
  int points = 0;
};

/// Least squares y = slope x + intercept with coefficient of determination.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct Test2Result {
  std::vector<ResultRow> rows;
  /// Per configured variant: sqrt(kappa) against 1 + log(H/h).
  std::vector<LinearFit> fits;
};

Test2Result run_test2(const ExperimentConfig& config, Progress progress = nullptr, Exec exec = Exec::parallel);

/// kappa uses %.6f below 1e3 and %.6e above.
std::string format_kappa(double kappa);
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> parse_csv(std::istream& in);

}  // namespace vemfeti::experiment
