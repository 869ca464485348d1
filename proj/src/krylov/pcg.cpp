#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "vemfeti/error.hpp"
#include "vemfeti/krylov.hpp"

namespace vemfeti::krylov {

Vector tridiagonal_eigenvalues(const Vector& diag, const Vector& offdiag) {
  if (diag.size() == 0) return Vector();
  if (diag.size() == 1) return diag;
  // The implicit QR iteration needs entries of order one to converge reliably.
  double scale = diag.cwiseAbs().maxCoeff();
  if (offdiag.size() > 0) scale = std::max(scale, offdiag.cwiseAbs().maxCoeff());
  if (!(scale > 0)) return Vector::Zero(diag.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag / scale, offdiag / scale, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigenvalue iteration did not converge");
  return scale * solver.eigenvalues();
}

void lanczos_from_cg(const std::vector<double>& alpha, const std::vector<double>& beta, Vector& diag,
                     Vector& offdiag) {
  const auto k = static_cast<Eigen::Index>(alpha.size());
  diag.resize(k);
  offdiag.resize(std::max<Eigen::Index>(k - 1, 0));
  for (Eigen::Index j = 0; j < k; ++j) {
    diag(j) = 1.0 / alpha[j];
    if (j > 0) diag(j) += beta[j - 1] / alpha[j - 1];
    if (j + 1 < k) offdiag(j) = std::sqrt(beta[j]) / alpha[j];
  }
}

namespace {

void update_estimate(const std::vector<double>& alpha, const std::vector<double>& beta, PcgReport& report) {
  lanczos_from_cg(alpha, beta, report.lanczos_diag, report.lanczos_offdiag);
  if (alpha.size() <= 1) {
    // A single Ritz value carries no spread information.
    report.lambda_min = report.lambda_max = alpha.empty() ? 1.0 : report.lanczos_diag(0);
    report.kappa_est = 1.0;
  } else {
    const Vector ev = tridiagonal_eigenvalues(report.lanczos_diag, report.lanczos_offdiag);
    report.lambda_min = ev(0);
    report.lambda_max = ev(ev.size() - 1);
    report.kappa_est = report.lambda_max / report.lambda_min;
  }
  report.kappa_history.push_back(report.kappa_est);
}

}  // namespace

PcgResult pcg(const Operator& A, const Operator& M, const Vector& rhs, const PcgOptions& options) {
  PcgResult result;
  PcgReport& report = result.report;
  result.solution = Vector::Zero(rhs.size());
  report.residual_history.push_back(1.0);

  Vector r = rhs;
  const double r0 = r.norm();
  if (r0 == 0.0) {
    report.converged = true;
    return result;
  }

  std::vector<double> alpha, beta;
  Vector z = M(r);
  double rz = r.dot(z);
  if (!(rz > 0)) throw IndefiniteError("pcg: preconditioner is not positive definite (r'Mr <= 0)");
  Vector p = z;

  while (report.iterations < options.max_iterations) {
    const Vector q = A(p);
    const double pq = p.dot(q);
    if (!(pq > 0)) throw IndefiniteError("pcg: operator is not positive definite (p'Ap <= 0)");
    const double a = rz / pq;
    alpha.push_back(a);
    result.solution += a * p;
    r -= a * q;
    ++report.iterations;
    const double rel = r.norm() / r0;
    report.residual_history.push_back(rel);
    update_estimate(alpha, beta, report);
    if (rel <= options.tol) {
      report.converged = true;
      break;
    }
    z = M(r);
    const double rz_next = r.dot(z);
    if (!(rz_next > 0)) throw IndefiniteError("pcg: preconditioner is not positive definite (r'Mr <= 0)");
    const double b = rz_next / rz;
    beta.push_back(b);
    rz = rz_next;
    p = z + b * p;
  }
  return result;
}

double lanczos_asymmetry(const Operator& A, const Vector& start, int steps) {
  const auto n = start.size();
  steps = static_cast<int>(std::min<Eigen::Index>(steps, n));
  Eigen::MatrixXd Q(n, steps);
  Q.col(0) = start.normalized();
  Eigen::MatrixXd AQ(n, steps);
  int built = 0;
  for (int j = 0; j < steps; ++j) {
    AQ.col(j) = A(Q.col(j));
    ++built;
    if (j + 1 == steps) break;
    Vector w = AQ.col(j);
    // Three-term recurrence without reorthogonalization.
    w -= Q.col(j).dot(w) * Q.col(j);
    if (j > 0) w -= Q.col(j - 1).dot(w) * Q.col(j - 1);
    const double nrm = w.norm();
    if (nrm <= 1e-14 * AQ.col(j).norm()) break;
    Q.col(j + 1) = w / nrm;
  }
  const Eigen::MatrixXd H = Q.leftCols(built).transpose() * AQ.leftCols(built);
  const double scale = H.cwiseAbs().maxCoeff();
  return scale > 0 ? (H - H.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
}

}  // namespace vemfeti::krylov
