#ifndef QMEAS_NUMERIC_HPP
#define QMEAS_NUMERIC_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qmeas {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// One record holding every tolerance used by the library.  Operations take
/// a policy argument defaulting to default_policy(); scenario files may
/// override individual fields.
struct NumericPolicy {
  double hermitian_tol = 1e-10;        // relative Frobenius ||h - h^dag|| / ||h||
  double degeneracy_threshold = 1e-8;  // absolute gap below which eigenvalues merge
  double unitary_tol = 1e-10;
  double state_tol = 1e-10;            // density-operator invariants
  double norm_tol = 1e-12;             // state-vector normalization
  double probability_floor = 1e-12;    // conditioning on smaller events is an error
  double rank_cutoff = 1e-12;          // Choi / family eigenvalues below this are dropped
  double completion_residual = 1e-8;   // pivot threshold in unitary completion
  Index max_composite_dim = 4096;
};

inline const NumericPolicy& default_policy() {
  static const NumericPolicy p;
  return p;
}

inline bool is_finite(const Matrix& m) { return m.allFinite(); }

inline bool is_hermitian(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double n = m.norm();
  if (n == 0.0) return true;
  return (m - m.adjoint()).norm() <= rel_tol * n;
}

inline double real_trace(const Matrix& m) { return m.trace().real(); }

}  // namespace qmeas

#endif
