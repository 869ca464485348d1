#pragma once

#include <vector>

#include <Eigen/Core>

#include "vemfeti/decomp.hpp"
#include "vemfeti/exec.hpp"
#include "vemfeti/krylov.hpp"
#include "vemfeti/mesh.hpp"

namespace vemfeti::fetidp {

using krylov::Vector;

/// Change of basis for one average constraint: the designated node carries
/// the restricted, renormalized functional sum_k w_k x_k over the open nodes.
struct AverageBasis {
  int constraint = -1;  // index into PrimalSpec::constraints
  std::vector<int> nodes;
  std::vector<double> weights;  // sum to 1
  int designated = -1;          // global vertex
};

/// Per-constraint transformations; throws UsageError when a functional has
/// no open node to carry it.
std::vector<AverageBasis> change_basis(const decomp::PrimalSpec& spec, const decomp::InterfaceIndex& index);

/// Sparse T with x = T xhat on the given local vertex list.
krylov::CscMatrix basis_matrix(const std::vector<AverageBasis>& bases, const std::vector<int>& local_vertices);
krylov::CscMatrix basis_matrix_inverse(const std::vector<AverageBasis>& bases, const std::vector<int>& local_vertices);

/// Subdomain data in the transformed basis. Local dofs follow `vertices`.
struct Subdomain {
  std::vector<int> vertices;
  krylov::SparseSym K_hat;
  krylov::CscMatrix T;
  std::vector<int> interior, dual, primal;  // local indices
  std::vector<int> primal_global;          // coarse index of each primal dof
  std::vector<int> dual_instance;          // instance index of each dual dof
  double rho = 1;

  // Factor data.
  std::vector<int> r_index;  // interior then dual, local indices
  krylov::CholFactor K_rr;
  krylov::CscMatrix K_rPi;   // r x primal
  Eigen::MatrixXd X;         // K_rr^-1 K_rPi
  Eigen::MatrixXd S_PiPi;    // local coarse Schur complement
  krylov::CholFactor K_II;
  krylov::CscMatrix K_ID;    // interior x dual
  krylov::SparseSym K_DD;
  krylov::CscMatrix B_local, BD_local;  // columns of B and B_D for this subdomain
};

struct Options {
  decomp::Variant variant = decomp::Variant::VE;
  double gamma = 1.0;
  Exec exec = Exec::parallel;
};

/// Assembled FETI-DP operator for a box decomposition of a mesh with
/// homogeneous Dirichlet conditions and one coefficient per subdomain.
class FetiDp {
 public:
  FetiDp(const mesh::PolyMesh& mesh, const decomp::Partition& partition, const decomp::InterfaceIndex& index,
         const std::vector<double>& rho, const Options& options);

  int num_subdomains() const { return static_cast<int>(subs_.size()); }
  int num_primal() const { return num_primal_; }
  int num_multipliers() const { return jump_.num_multipliers(); }
  int num_dual_instances() const { return static_cast<int>(instances_.size()); }
  /// Dimension of the product space: sum over subdomains of local dofs.
  long product_dofs() const;

  const std::vector<Subdomain>& subdomains() const { return subs_; }
  const decomp::JumpOperator& jump() const { return jump_; }
  const std::vector<decomp::DualInstance>& instances() const { return instances_; }
  const decomp::PrimalSpec& primal_spec() const { return spec_; }
  const std::vector<AverageBasis>& bases() const { return bases_; }
  const krylov::CholFactor& coarse_factor() const { return coarse_; }
  krylov::CscMatrix coarse_matrix() const { return coarse_matrix_; }

  /// Splits a per-vertex load into transformed local loads with the d-weights.
  std::vector<Vector> split_load(const Vector& f_vertices) const;

  /// Local solutions of K~ u = f with f given per subdomain (transformed basis).
  std::vector<Vector> apply_Ktilde_inverse(const std::vector<Vector>& f_local) const;

  Vector dual_rhs(const std::vector<Vector>& f_local) const;
  Vector apply_F(const Vector& lambda) const;
  Vector apply_M(const Vector& residual) const;

  /// Vertex solution from converged multipliers; duplicates averaged with d.
  Vector recover(const std::vector<Vector>& f_local, const Vector& lambda) const;
  /// Per-subdomain untransformed vertex values of the same recovery.
  std::vector<Vector> recover_local(const std::vector<Vector>& f_local, const Vector& lambda) const;

  struct Result {
    Vector u;
    Vector lambda;
    krylov::PcgReport report;
  };
  Result solve(const Vector& f_vertices, const krylov::PcgOptions& options) const;

 private:
  std::vector<Vector> jump_transpose(const Vector& lambda, bool scaled) const;
  Vector jump_apply(const std::vector<Vector>& dual_values, bool scaled) const;

  const mesh::PolyMesh& mesh_;
  const decomp::InterfaceIndex& index_;
  Options options_;
  decomp::PrimalSpec spec_;
  std::vector<AverageBasis> bases_;
  std::vector<Subdomain> subs_;
  std::vector<decomp::DualInstance> instances_;
  decomp::JumpOperator jump_;
  std::vector<double> rho_;
  int num_primal_ = 0;
  krylov::CscMatrix coarse_matrix_;
  krylov::CholFactor coarse_;
};

}  // namespace vemfeti::fetidp
