#include <cholmod.h>

#include <cstring>

#include "vemfeti/error.hpp"
#include "vemfeti/krylov.hpp"

namespace vemfeti::krylov {

namespace {

/// cholmod_common scoped to one call; keeps solves reentrant.
class Common {
 public:
  Common() {
    cholmod_start(&cm_);
    cm_.print = 0;
    cm_.nmethods = 1;
    cm_.method[0].ordering = CHOLMOD_AMD;
    cm_.postorder = 1;
    cm_.supernodal = CHOLMOD_AUTO;
    cm_.final_ll = 1;
  }
  ~Common() { cholmod_finish(&cm_); }
  Common(const Common&) = delete;
  Common& operator=(const Common&) = delete;
  cholmod_common* get() { return &cm_; }

 private:
  cholmod_common cm_;
};

cholmod_sparse view_lower(const CscMatrix& lower) {
  cholmod_sparse A{};
  A.nrow = static_cast<size_t>(lower.rows());
  A.ncol = static_cast<size_t>(lower.cols());
  A.nzmax = static_cast<size_t>(lower.nonZeros());
  A.p = const_cast<int*>(lower.outerIndexPtr());
  A.i = const_cast<int*>(lower.innerIndexPtr());
  A.x = const_cast<double*>(lower.valuePtr());
  A.stype = -1;
  A.itype = CHOLMOD_INT;
  A.xtype = CHOLMOD_REAL;
  A.dtype = CHOLMOD_DOUBLE;
  A.sorted = 1;
  A.packed = 1;
  return A;
}

cholmod_dense view_dense(const Eigen::MatrixXd& B) {
  cholmod_dense D{};
  D.nrow = static_cast<size_t>(B.rows());
  D.ncol = static_cast<size_t>(B.cols());
  D.nzmax = D.nrow * D.ncol;
  D.d = D.nrow;
  D.x = const_cast<double*>(B.data());
  D.xtype = CHOLMOD_REAL;
  D.dtype = CHOLMOD_DOUBLE;
  return D;
}

}  // namespace

struct CholFactor::Impl {
  cholmod_factor* L = nullptr;

  ~Impl() {
    if (L) {
      Common cm;
      cholmod_free_factor(&L, cm.get());
    }
  }
};

CholFactor::CholFactor() = default;
CholFactor::CholFactor(CholFactor&&) noexcept = default;
CholFactor& CholFactor::operator=(CholFactor&&) noexcept = default;
CholFactor::~CholFactor() = default;

CholFactor::CholFactor(const SparseSym& A, std::string context) : impl_(std::make_unique<Impl>()), n_(A.dim()) {
  if (n_ == 0) return;
  CscMatrix lower = A.lower();
  lower.makeCompressed();
  cholmod_sparse view = view_lower(lower);
  Common cm;
  impl_->L = cholmod_analyze(&view, cm.get());
  if (!impl_->L) throw NumericalError(context + ": symbolic analysis failed");
  cholmod_factorize(&view, impl_->L, cm.get());
  if (cm.get()->status == CHOLMOD_NOT_POSDEF || impl_->L->minor < impl_->L->n) {
    const auto* perm = static_cast<const int*>(impl_->L->Perm);
    const long k = static_cast<long>(impl_->L->minor);
    throw NotSpdError(perm ? perm[k] : k, context);
  }
  if (cm.get()->status < CHOLMOD_OK) throw NumericalError(context + ": numerical factorization failed");
}

Eigen::MatrixXd CholFactor::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != n_) throw UsageError("CholFactor::solve: dimension mismatch");
  if (n_ == 0 || B.cols() == 0) return B;
  Common cm;
  cholmod_dense view = view_dense(B);
  cholmod_dense* X = cholmod_solve(CHOLMOD_A, impl_->L, &view, cm.get());
  if (!X) throw NumericalError("cholmod_solve failed");
  Eigen::MatrixXd out(B.rows(), B.cols());
  std::memcpy(out.data(), X->x, sizeof(double) * static_cast<size_t>(out.size()));
  cholmod_free_dense(&X, cm.get());
  return out;
}

Vector CholFactor::solve(const Vector& b) const {
  Eigen::MatrixXd B = b;
  return solve(B).col(0);
}

std::vector<int> CholFactor::permutation() const {
  std::vector<int> perm(n_);
  if (n_ == 0) return perm;
  const auto* p = static_cast<const int*>(impl_->L->Perm);
  perm.assign(p, p + n_);
  return perm;
}

CscMatrix CholFactor::factor() const {
  if (n_ == 0) return CscMatrix(0, 0);
  Common cm;
  cholmod_factor* copy = cholmod_copy_factor(impl_->L, cm.get());
  cholmod_change_factor(CHOLMOD_REAL, 1, 0, 1, 1, copy, cm.get());
  cholmod_sparse* S = cholmod_factor_to_sparse(copy, cm.get());
  CscMatrix L(n_, n_);
  std::vector<Triplet> entries;
  const auto* p = static_cast<const int*>(S->p);
  const auto* i = static_cast<const int*>(S->i);
  const auto* x = static_cast<const double*>(S->x);
  for (int j = 0; j < n_; ++j)
    for (int k = p[j]; k < p[j + 1]; ++k) entries.emplace_back(i[k], j, x[k]);
  L.setFromTriplets(entries.begin(), entries.end());
  cholmod_free_sparse(&S, cm.get());
  cholmod_free_factor(&copy, cm.get());
  return L;
}

long CholFactor::factor_nonzeros() const {
  if (n_ == 0) return 0;
  Common cm;
  cholmod_factor* copy = cholmod_copy_factor(impl_->L, cm.get());
  cholmod_change_factor(CHOLMOD_REAL, 1, 0, 1, 1, copy, cm.get());
  cholmod_sparse* S = cholmod_factor_to_sparse(copy, cm.get());
  const long nnz = static_cast<long>(cholmod_nnz(S, cm.get()));
  cholmod_free_sparse(&S, cm.get());
  cholmod_free_factor(&copy, cm.get());
  return nnz;
}

}  // namespace vemfeti::krylov
