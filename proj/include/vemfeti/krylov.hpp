#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace vemfeti::krylov {

using Vector = Eigen::VectorXd;
using CscMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Symmetric sparse matrix stored as its lower triangle in compressed columns.
class SparseSym {
 public:
  SparseSym() = default;

  /// Builds from coordinate entries; each unordered pair (i,j) should be given
  /// once in either orientation. Duplicates are summed, exact zeros dropped.
  static SparseSym from_triplets(int n, const std::vector<Triplet>& entries);
  /// Lower triangle of a full symmetric matrix.
  static SparseSym from_full(const CscMatrix& full);

  int dim() const { return static_cast<int>(lower_.rows()); }
  long nnz() const { return lower_.nonZeros(); }
  const CscMatrix& lower() const { return lower_; }
  CscMatrix full() const;
  double coeff(int i, int j) const;
  Vector apply(const Vector& x) const;

 private:
  CscMatrix lower_;
};

/// Writes `i j value` lines (0-based, lower triangle) for debugging.
void write_triplets(const SparseSym& A, const std::string& path);

/// Sparse LL^T factorization P A P^T = L L^T with approximate-minimum-degree
/// ordering. Solves are safe to run concurrently on distinct right-hand sides.
class CholFactor {
 public:
  CholFactor();
  explicit CholFactor(const SparseSym& A, std::string context = "cholesky");
  CholFactor(CholFactor&&) noexcept;
  CholFactor& operator=(CholFactor&&) noexcept;
  CholFactor(const CholFactor&) = delete;
  CholFactor& operator=(const CholFactor&) = delete;
  ~CholFactor();

  int dim() const { return n_; }
  Vector solve(const Vector& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  /// Fill-reducing permutation: row k of L corresponds to row perm[k] of A.
  std::vector<int> permutation() const;
  /// Explicit factor L (lower triangular) of the permuted matrix.
  CscMatrix factor() const;
  long factor_nonzeros() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

using Operator = std::function<Vector(const Vector&)>;

struct PcgOptions {
  double tol = 1e-6;
  int max_iterations = 1000;
};

struct PcgReport {
  int iterations = 0;
  bool converged = false;
  /// ||r_k|| / ||r_0||, starting with 1 for k = 0.
  std::vector<double> residual_history;
  /// Condition estimate after each iteration.
  std::vector<double> kappa_history;
  double kappa_est = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  /// Lanczos tridiagonal assembled from the CG coefficients.
  Vector lanczos_diag;
  Vector lanczos_offdiag;
};

struct PcgResult {
  Vector solution;
  PcgReport report;
};

/// Preconditioned conjugate gradients from a zero initial guess, stopping on
/// the relative 2-norm reduction of the residual. Throws IndefiniteError on a
/// nonpositive p'Ap or r'Mr; running out of iterations is reported, not thrown.
PcgResult pcg(const Operator& A, const Operator& M, const Vector& rhs, const PcgOptions& options);

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix.
Vector tridiagonal_eigenvalues(const Vector& diag, const Vector& offdiag);

/// Lanczos tridiagonal built from CG step lengths alpha_k and ratios beta_k.
void lanczos_from_cg(const std::vector<double>& alpha, const std::vector<double>& beta, Vector& diag,
                     Vector& offdiag);

/// Runs `steps` Lanczos steps on a symmetric operator from `start` and returns
/// max |H - H^T| / max |H| for the explicitly projected matrix H = Q^T A Q.
double lanczos_asymmetry(const Operator& A, const Vector& start, int steps);

}  // namespace vemfeti::krylov
