#include "vemfeti/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "vemfeti/error.hpp"
#include "vemfeti/fetidp.hpp"
#include "vemfeti/vem.hpp"

namespace vemfeti::experiment {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + s + "' for " + what);
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid integer '" + s + "' for " + what);
  }
}

bool to_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw UsageError("invalid boolean '" + s + "' for " + what);
}

double sine_source(const mesh::Vec3& x) {
  return std::sin(2 * M_PI * x(0)) * std::sin(2 * M_PI * x(1)) * std::sin(2 * M_PI * x(2));
}

/// Nodal load on the glued mesh, zero on the Dirichlet boundary.
krylov::Vector make_load(const mesh::PolyMesh& mesh, Rhs rhs, std::uint64_t seed) {
  const int nv = mesh.num_vertices();
  krylov::Vector f = krylov::Vector::Zero(nv);
  if (rhs == Rhs::random) {
    std::mt19937_64 rng(seed);
    for (int v = 0; v < nv; ++v)
      if (!mesh.on_boundary[v]) f(v) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    return f;
  }
  std::vector<int> cells(mesh.num_cells()), index(nv);
  for (int c = 0; c < mesh.num_cells(); ++c) cells[c] = c;
  for (int v = 0; v < nv; ++v) index[v] = mesh.on_boundary[v] ? -1 : v;
  return vem::assemble_load(mesh, cells, sine_source, index, nv);
}

double reference_diameter(const mesh::PolyMesh& mesh) {
  double h = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) h = std::max(h, mesh::cell_geometry(mesh, c).diameter);
  return h;
}

}  // namespace

MeshSpec MeshSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("mesh spec '" + text + "' must be oct:N, cube:N or file:PATH");
  const std::string kind = text.substr(0, colon), arg = text.substr(colon + 1);
  MeshSpec m;
  if (kind == "file") {
    m.kind = Kind::file;
    m.path = arg;
    if (arg.empty()) throw UsageError("file mesh spec needs a path");
    return m;
  }
  if (kind == "oct")
    m.kind = Kind::oct;
  else if (kind == "cube")
    m.kind = Kind::cube;
  else
    throw UsageError("unknown mesh kind '" + kind + "'");
  m.n = static_cast<int>(to_long(arg, "mesh resolution"));
  if (m.n < 1) throw UsageError("mesh resolution must be at least 1");
  return m;
}

std::string MeshSpec::str() const {
  switch (kind) {
    case Kind::oct: return "oct:" + std::to_string(n);
    case Kind::cube: return "cube:" + std::to_string(n);
    case Kind::file: return "file:" + path;
  }
  return {};
}

mesh::PolyMesh MeshSpec::build() const {
  switch (kind) {
    case Kind::oct: return mesh::generate_truncated_octahedra(n);
    case Kind::cube: return mesh::generate_cube_grid(n);
    case Kind::file: return mesh::read_polymesh(path);
  }
  throw UsageError("bad mesh spec");
}

RhoSpec RhoSpec::parse(const std::string& text) {
  RhoSpec r;
  if (text.rfind("const:", 0) == 0) {
    r.r1 = r.r2 = to_double(text.substr(6), "rho");
  } else if (text.rfind("checkerboard:", 0) == 0) {
    const auto parts = split(text.substr(13), ',');
    if (parts.size() != 2) throw UsageError("checkerboard rho needs two values R1,R2");
    r.checkerboard = true;
    r.r1 = to_double(parts[0], "rho");
    r.r2 = to_double(parts[1], "rho");
  } else {
    throw UsageError("rho spec '" + text + "' must be const:VAL or checkerboard:R1,R2");
  }
  if (!(r.r1 > 0) || !(r.r2 > 0)) throw UsageError("coefficients must be positive");
  return r;
}

std::string RhoSpec::str() const {
  std::ostringstream s;
  s.precision(17);
  if (checkerboard)
    s << "checkerboard:" << r1 << ',' << r2;
  else
    s << "const:" << r1;
  return s.str();
}

std::vector<double> RhoSpec::per_subdomain(const decomp::Partition& partition) const {
  std::vector<double> rho(partition.num_subdomains(), r1);
  if (checkerboard)
    for (int l = 0; l < partition.num_subdomains(); ++l) {
      // 1-based indices: R1 where i + j + k is even.
      const auto c = partition.coords(l);
      rho[l] = (c[0] + c[1] + c[2] + 3) % 2 == 0 ? r1 : r2;
    }
  return rho;
}

double ExperimentConfig::effective_tol() const {
  if (tol > 0) return tol;
  return rho.checkerboard ? 1e-12 : 1e-6;
}

Rhs ExperimentConfig::effective_rhs() const {
  if (rhs != Rhs::automatic) return rhs;
  return rho.checkerboard ? Rhs::random : Rhs::sine;
}

void ExperimentConfig::validate() const {
  if (test != 1 && test != 2) throw UsageError("test must be 1 or 2");
  if (references.empty()) throw UsageError("no reference meshes given");
  if (subdomains.empty()) throw UsageError("no subdomain counts given");
  for (int N : subdomains)
    if (N < 1) throw UsageError("subdomain counts must be at least 1");
  if (variants.empty()) throw UsageError("no variants given");
  if (!(gamma >= 0.5)) throw UsageError("gamma must be at least 1/2");
  if (tol < 0) throw UsageError("tol must be positive");
  if (max_iterations < 1) throw UsageError("max_iterations must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  bool have_references = false, have_subdomains = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string where = "config line " + std::to_string(lineno) + " (" + key + ")";
    if (key == "test") {
      c.test = static_cast<int>(to_long(value, where));
    } else if (key == "reference" || key == "references") {
      have_references = true;
      c.references.clear();
      for (const auto& s : split(value, ',')) c.references.push_back(MeshSpec::parse(s));
    } else if (key == "subdomains") {
      have_subdomains = true;
      c.subdomains.clear();
      for (const auto& s : split(value, ',')) c.subdomains.push_back(static_cast<int>(to_long(s, where)));
    } else if (key == "variants") {
      c.variants.clear();
      for (const auto& s : split(value, ',')) c.variants.push_back(decomp::parse_variant(s));
    } else if (key == "rho") {
      c.rho = RhoSpec::parse(value);
    } else if (key == "rhs") {
      if (value == "auto")
        c.rhs = Rhs::automatic;
      else if (value == "sin")
        c.rhs = Rhs::sine;
      else if (value == "random")
        c.rhs = Rhs::random;
      else
        throw UsageError(where + ": rhs must be auto, sin or random");
    } else if (key == "gamma") {
      c.gamma = to_double(value, where);
    } else if (key == "tol") {
      c.tol = to_double(value, where);
    } else if (key == "max_iterations") {
      c.max_iterations = static_cast<int>(to_long(value, where));
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(to_long(value, where));
    } else if (key == "output") {
      c.output = value;
    } else if (key == "timing") {
      c.timing = to_bool(value, where);
    } else {
      throw UsageError(where + ": unknown key");
    }
  }
  if (c.test == 2) {
    if (!have_references) c.references = {{MeshSpec::Kind::oct, 2, {}}, {MeshSpec::Kind::oct, 3, {}},
                                          {MeshSpec::Kind::oct, 4, {}}, {MeshSpec::Kind::oct, 5, {}}};
    if (!have_subdomains) c.subdomains = {3};
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return parse_config(in);
}

void apply_full_scale(ExperimentConfig& config) {
  if (config.test == 1) {
    config.subdomains = {2, 4, 6, 8, 10, 12};
  } else {
    config.subdomains = {6};
    config.references.clear();
    for (int n = 2; n <= 9; ++n) config.references.push_back({MeshSpec::Kind::oct, n, {}});
  }
}

SolveRun run_single(const mesh::PolyMesh& reference, int N, decomp::Variant variant, const ExperimentConfig& config,
                    Exec exec) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const mesh::PolyMesh glued = mesh::glue_reflected(reference, N);
  const decomp::Partition part = decomp::partition_box(glued, N);
  const std::vector<double> rho = config.rho.per_subdomain(part);
  const krylov::Vector f = make_load(glued, config.effective_rhs(), config.seed);

  SolveRun run;
  run.row.L = part.num_subdomains();
  run.row.variant = decomp::to_string(variant);
  run.row.seed = config.seed;
  run.row.H_over_h = 1.0 / reference_diameter(reference);

  if (N == 1) {
    std::vector<double> rho_cell(glued.num_cells(), rho[0]);
    vem::GlobalSystem sys = vem::assemble(glued, rho_cell, [](const mesh::Vec3&) { return 0.0; }, exec);
    for (std::size_t i = 0; i < sys.free_vertices.size(); ++i) sys.f(i) = f(sys.free_vertices[i]);
    run.u = vem::solve_direct(sys);
    run.row.dofs = static_cast<long>(sys.free_vertices.size());
    run.row.primal = 0;
    run.row.kappa = 1;
    run.row.iters = 0;
    run.report.converged = true;
  } else {
    const decomp::InterfaceIndex index = decomp::classify_interface(glued, part);
    const fetidp::FetiDp feti(glued, part, index, rho, {variant, config.gamma, exec});
    auto res = feti.solve(f, {config.effective_tol(), config.max_iterations});
    run.u = std::move(res.u);
    run.report = std::move(res.report);
    run.row.dofs = feti.product_dofs();
    run.row.primal = feti.num_primal();
    run.row.kappa = run.report.kappa_est;
    run.row.iters = run.report.iterations;
    run.row.converged = run.report.converged;
  }
  if (config.timing) run.row.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return run;
}

std::vector<ResultRow> run_test1(const ExperimentConfig& config, Progress progress, Exec exec) {
  config.validate();
  if (config.references.size() != 1) throw UsageError("test 1 uses exactly one reference mesh");
  const mesh::PolyMesh reference = config.references.front().build();
  std::vector<ResultRow> rows;
  for (int N : config.subdomains)
    for (auto v : config.variants) {
      rows.push_back(run_single(reference, N, v, config, exec).row);
      if (progress) progress(rows.back());
      if (N == 1) break;  // variants coincide for a single subdomain
    }
  return rows;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() != y.size() || x.size() < 2) throw UsageError("linear fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw UsageError("linear fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0 ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

Test2Result run_test2(const ExperimentConfig& config, Progress progress, Exec exec) {
  config.validate();
  if (config.subdomains.size() != 1) throw UsageError("test 2 uses exactly one subdomain count");
  const int N = config.subdomains.front();
  Test2Result out;
  std::vector<std::vector<double>> xs(config.variants.size()), ys(config.variants.size());
  for (const auto& spec : config.references) {
    const mesh::PolyMesh reference = spec.build();
    for (std::size_t k = 0; k < config.variants.size(); ++k) {
      const ResultRow row = run_single(reference, N, config.variants[k], config, exec).row;
      xs[k].push_back(1 + std::log(row.H_over_h));
      ys[k].push_back(std::sqrt(row.kappa));
      out.rows.push_back(row);
      if (progress) progress(row);
    }
  }
  for (std::size_t k = 0; k < config.variants.size(); ++k)
    out.fits.push_back(xs[k].size() >= 2 ? linear_fit(xs[k], ys[k]) : LinearFit{0, 0, 0, static_cast<int>(xs[k].size())});
  return out;
}

std::string format_kappa(double kappa) {
  char buf[64];
  std::snprintf(buf, sizeof buf, kappa >= 1e3 ? "%.6e" : "%.6f", kappa);
  return buf;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "L,variant,dofs,primal,kappa,iters,seconds,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
    out << r.L << ',' << r.variant << ',' << r.dofs << ',' << r.primal << ',' << format_kappa(r.kappa) << ','
        << r.iters << ',' << buf << ',' << r.seed << '\n';
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw UsageError("no result rows to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(rows, out);
  out.flush();
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "L,variant,dofs,primal,kappa,iters,seconds,seed")
    throw UsageError("unexpected CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream s(line);
    while (std::getline(s, item, ',')) f.push_back(item);
    if (f.size() != 8) throw UsageError("CSV row with " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.L = static_cast<int>(to_long(f[0], "L"));
    r.variant = f[1];
    r.dofs = to_long(f[2], "dofs");
    r.primal = static_cast<int>(to_long(f[3], "primal"));
    r.kappa = to_double(f[4], "kappa");
    r.iters = static_cast<int>(to_long(f[5], "iters"));
    r.seconds = to_double(f[6], "seconds");
    r.seed = static_cast<std::uint64_t>(std::stoull(f[7]));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace vemfeti::experiment
