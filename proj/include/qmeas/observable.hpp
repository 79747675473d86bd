#ifndef QMEAS_OBSERVABLE_HPP
#define QMEAS_OBSERVABLE_HPP

#include <algorithm>
#include <vector>

#include "qmeas/state.hpp"

namespace qmeas {

/// Observable with a finite outcome set: strictly increasing outcome values
/// and one orthogonal projection per outcome, summing to the identity.
struct Observable {
  Index dim = 0;
  std::vector<double> outcomes;
  std::vector<Matrix> projections;

  Index num_outcomes() const { return static_cast<Index>(outcomes.size()); }
};

/// Subset of an observable's outcome list; plays the role of a Borel set.
struct OutcomeSet {
  std::vector<char> flags;

  static OutcomeSet full(Index n) { return {std::vector<char>(n, 1)}; }
  static OutcomeSet empty(Index n) { return {std::vector<char>(n, 0)}; }
  static OutcomeSet single(Index n, Index i) {
    OutcomeSet s = empty(n);
    s.flags[i] = 1;
    return s;
  }
  Index size() const { return static_cast<Index>(flags.size()); }
  bool contains(Index i) const { return flags[i] != 0; }
};

inline Observable from_hermitian(const Matrix& h,
                                 const NumericPolicy& pol = default_policy()) {
  auto spec = spectral_decomposition(h, pol);
  Observable obs;
  obs.dim = h.rows();
  for (auto& c : spec) {
    obs.outcomes.push_back(c.eigenvalue);
    obs.projections.push_back(std::move(c.projection));
  }
  return obs;
}

/// Observable diagonal in the computational basis with outcomes 0..dim-1.
inline Observable grid_observable(Index dim) {
  Observable obs;
  obs.dim = dim;
  for (Index i = 0; i < dim; ++i) {
    obs.outcomes.push_back(static_cast<double>(i));
    Matrix p = Matrix::Zero(dim, dim);
    p(i, i) = 1.0;
    obs.projections.push_back(std::move(p));
  }
  return obs;
}

inline Matrix projection_of(const Observable& obs, const OutcomeSet& s) {
  if (s.size() != obs.num_outcomes())
    throw std::invalid_argument("projection_of: outcome set mismatch");
  Matrix p = Matrix::Zero(obs.dim, obs.dim);
  for (Index i = 0; i < obs.num_outcomes(); ++i)
    if (s.contains(i)) p += obs.projections[i];
  return p;
}

/// Tr[E^A(Delta) rho], clamped to [0,1] after a sanity check.
inline double born_probability(const Observable& obs, const OutcomeSet& s,
                               const DensityOperator& rho,
                               const NumericPolicy& pol = default_policy()) {
  if (rho.dim() != obs.dim)
    throw std::invalid_argument("born_probability: dimension mismatch");
  const double p = (projection_of(obs, s) * rho.op).trace().real();
  if (p < -pol.state_tol || p > 1.0 + pol.state_tol)
    throw std::domain_error("born_probability: value outside [0,1]");
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace qmeas

#endif
