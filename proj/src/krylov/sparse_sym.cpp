#include <fstream>
#include <iomanip>

#include "vemfeti/error.hpp"
#include "vemfeti/krylov.hpp"

namespace vemfeti::krylov {

SparseSym SparseSym::from_triplets(int n, const std::vector<Triplet>& entries) {
  std::vector<Triplet> lower;
  lower.reserve(entries.size());
  for (const auto& t : entries) {
    if (t.row() < 0 || t.col() < 0 || t.row() >= n || t.col() >= n)
      throw UsageError("SparseSym: entry out of range");
    if (t.row() >= t.col())
      lower.push_back(t);
    else
      lower.emplace_back(t.col(), t.row(), t.value());
  }
  SparseSym A;
  A.lower_.resize(n, n);
  A.lower_.setFromTriplets(lower.begin(), lower.end());
  A.lower_.prune(0.0);
  A.lower_.makeCompressed();
  return A;
}

SparseSym SparseSym::from_full(const CscMatrix& full) {
  SparseSym A;
  A.lower_ = full.triangularView<Eigen::Lower>();
  A.lower_.prune(0.0);
  A.lower_.makeCompressed();
  return A;
}

CscMatrix SparseSym::full() const {
  CscMatrix F = lower_.selfadjointView<Eigen::Lower>();
  F.makeCompressed();
  return F;
}

double SparseSym::coeff(int i, int j) const { return i >= j ? lower_.coeff(i, j) : lower_.coeff(j, i); }

Vector SparseSym::apply(const Vector& x) const {
  Vector y = lower_.selfadjointView<Eigen::Lower>() * x;
  return y;
}

void write_triplets(const SparseSym& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  for (int j = 0; j < A.lower().outerSize(); ++j)
    for (CscMatrix::InnerIterator it(A.lower(), j); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace vemfeti::krylov
