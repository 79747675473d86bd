#ifndef QMEAS_STATE_HPP
#define QMEAS_STATE_HPP

#include <cmath>

#include "qmeas/operator_core.hpp"

namespace qmeas {

inline bool is_normalized(const Vector& v, double tol = default_policy().norm_tol) {
  return std::abs(v.norm() - 1.0) <= tol;
}

/// Density operator: Hermitian, unit trace, positive semidefinite (all
/// within policy tolerances).  Construct through the factory functions;
/// arithmetic intermediates live as plain Matrix values.
struct DensityOperator {
  Matrix op;
  Index dim() const { return op.rows(); }
};

inline bool validate(const DensityOperator& d,
                     const NumericPolicy& pol = default_policy()) {
  const Matrix& m = d.op;
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if ((m - m.adjoint()).norm() > pol.state_tol * std::max(1.0, m.norm())) return false;
  if (std::abs(m.trace() - Complex(1.0)) > pol.state_tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0);
  return es.eigenvalues().minCoeff() >= -pol.state_tol;
}

inline DensityOperator from_vector(const Vector& v,
                                   const NumericPolicy& pol = default_policy()) {
  if (!is_normalized(v, pol.norm_tol))
    throw std::invalid_argument("from_vector: vector not normalized");
  return {v * v.adjoint()};
}

/// Renormalize a PSD matrix into a density operator; trace must exceed the
/// probability floor.
inline DensityOperator normalize_state(const Matrix& m,
                                       const NumericPolicy& pol = default_policy()) {
  const double tr = m.trace().real();
  if (tr <= pol.probability_floor)
    throw std::domain_error("conditioning on null event");
  return {m / tr};
}

/// <v| d |v>, real part; the imaginary part must vanish numerically.
inline double fidelity_pure(const DensityOperator& d, const Vector& v,
                            const NumericPolicy& pol = default_policy()) {
  if (d.dim() != v.size())
    throw std::invalid_argument("fidelity_pure: dimension mismatch");
  if (!is_normalized(v, pol.norm_tol))
    throw std::invalid_argument("fidelity_pure: vector not normalized");
  const Complex f = (v.adjoint() * d.op * v)(0, 0);
  if (std::abs(f.imag()) > 1e-12)
    throw std::domain_error("fidelity_pure: non-real expectation");
  return f.real();
}

/// Trace distance (1/2)||a - b||_1 between Hermitian matrices.
inline double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((a - b + (a - b).adjoint()) / 2.0);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  return trace_distance(a.op, b.op);
}

}  // namespace qmeas

#endif
