#ifndef QMEAS_OPERATOR_CORE_HPP
#define QMEAS_OPERATOR_CORE_HPP

#include <vector>

#include "qmeas/numeric.hpp"

namespace qmeas {

// Composite index convention used everywhere: for H (object, dimension dH)
// tensor K (probe, dimension dK), the basis ket (i, k) sits at index
// i*dK + k.  The object factor is the slow index.

/// Kronecker product a (x) b under the fixed index convention.
inline Matrix tensor(const Matrix& a, const Matrix& b,
                     const NumericPolicy& pol = default_policy()) {
  const Index da = a.rows(), db = b.rows();
  if (da * db > pol.max_composite_dim || a.cols() * b.cols() > pol.max_composite_dim)
    throw std::invalid_argument("composite dimension too large");
  Matrix out(da * db, a.cols() * b.cols());
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * db, j * b.cols(), db, b.cols()) = a(i, j) * b;
  return out;
}

inline Vector tensor(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Trace out the probe (fast) factor: out(i,j) = sum_k m(i*dK+k, j*dK+k).
inline Matrix partial_trace_probe(const Matrix& m, Index dimH, Index dimK) {
  if (m.rows() != dimH * dimK || m.cols() != dimH * dimK)
    throw std::invalid_argument("partial_trace_probe: dimension mismatch");
  Matrix out = Matrix::Zero(dimH, dimH);
  for (Index i = 0; i < dimH; ++i)
    for (Index j = 0; j < dimH; ++j)
      for (Index k = 0; k < dimK; ++k)
        out(i, j) += m(i * dimK + k, j * dimK + k);
  return out;
}

struct SpectralComponent {
  double eigenvalue;
  Matrix projection;
};

/// Eigendecomposition of a Hermitian operator with degenerate eigenvalues
/// merged into single projections.  Eigenvalues ascend; neighbours closer
/// than the degeneracy threshold (absolute) share one projection.
inline std::vector<SpectralComponent> spectral_decomposition(
    const Matrix& h, const NumericPolicy& pol = default_policy()) {
  if (!is_hermitian(h, pol.hermitian_tol))
    throw std::invalid_argument("not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.adjoint()) / 2.0);
  const auto& vals = es.eigenvalues();
  const Matrix& vecs = es.eigenvectors();
  std::vector<SpectralComponent> out;
  Index i = 0;
  while (i < vals.size()) {
    Index j = i + 1;
    while (j < vals.size() && vals(j) - vals(j - 1) <= pol.degeneracy_threshold) ++j;
    Matrix block = vecs.middleCols(i, j - i);
    out.push_back({vals.segment(i, j - i).mean(), block * block.adjoint()});
    i = j;
  }
  return out;
}

inline bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm() <= tol;
}

}  // namespace qmeas

#endif
