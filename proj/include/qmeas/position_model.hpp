#ifndef QMEAS_POSITION_MODEL_HPP
#define QMEAS_POSITION_MODEL_HPP

#include "qmeas/apparatus.hpp"

namespace qmeas {

/// Cyclic position grid Z_N with lattice spacing 1 and hbar = 1.  Momentum
/// basis convention <y|p> = e^{2 pi i p y / N} / sqrt(N); translations are
/// exact index shifts.
struct GridSystem {
  Index N = 0;
};

inline GridSystem make_grid(Index n) {
  if (n < 2) throw std::invalid_argument("GridSystem: N must be at least 2");
  return {n};
}

inline Index mod_n(Index x, Index n) { return ((x % n) + n) % n; }

inline Vector momentum_eigenstate(const GridSystem& g, Index p) {
  if (p < 0 || p >= g.N) throw std::invalid_argument("momentum index out of range");
  Vector v(g.N);
  const double w = 2.0 * EIGEN_PI * static_cast<double>(p) / static_cast<double>(g.N);
  for (Index y = 0; y < g.N; ++y)
    v(y) = std::polar(1.0 / std::sqrt(static_cast<double>(g.N)),
                      w * static_cast<double>(y));
  return v;
}

/// Cyclic shift by a: (shift_a v)(x) = v(x - a mod N).
inline Vector cyclic_shift(const Vector& v, Index a) {
  const Index n = v.size();
  Vector out(n);
  for (Index x = 0; x < n; ++x) out(x) = v(mod_n(x - a, n));
  return out;
}

inline Matrix permutation_unitary(Index dimH, Index dimK,
                                  const std::function<std::pair<Index, Index>(Index, Index)>& map) {
  Matrix u = Matrix::Zero(dimH * dimK, dimH * dimK);
  for (Index x = 0; x < dimH; ++x)
    for (Index y = 0; y < dimK; ++y) {
      auto [xo, yo] = map(x, y);
      u(xo * dimK + yo, x * dimK + y) = 1.0;
    }
  return u;
}

/// First coupling stage, the integrated p_x (x) y interaction:
/// (x', y') -> (x' - y' mod N, y').
inline Matrix stage_one_unitary(const GridSystem& g) {
  return permutation_unitary(g.N, g.N, [&](Index x, Index y) {
    return std::pair{mod_n(x - y, g.N), y};
  });
}

/// Second coupling stage, the integrated x (x) p_y interaction:
/// (x', y') -> (x', y' + x' mod N).
inline Matrix stage_two_unitary(const GridSystem& g) {
  return permutation_unitary(g.N, g.N, [&](Index x, Index y) {
    return std::pair{x, mod_n(y + x, g.N)};
  });
}

/// Full coupling: stage two after stage one, the exact permutation
/// (x', y') -> (x' - y' mod N, x').  The probe register records the prior
/// object position.
inline Matrix coupling_unitary(const GridSystem& g) {
  return permutation_unitary(g.N, g.N, [&](Index x, Index y) {
    return std::pair{mod_n(x - y, g.N), x};
  });
}

/// Position-measurement model with probe preparation xi(y) = phi(-y mod N),
/// probe observable y-hat and measured observable x-hat.  Its posterior at
/// outcome a is the cyclic shift of phi by a, for every prior.
inline ApparatusModel build_position_apparatus(const GridSystem& g, const Vector& phi,
                                               const NumericPolicy& pol = default_policy()) {
  if (phi.size() != g.N)
    throw std::invalid_argument("build_position_apparatus: phi dimension mismatch");
  if (!is_normalized(phi, pol.norm_tol))
    throw std::invalid_argument("build_position_apparatus: phi not normalized");
  Vector xi(g.N);
  for (Index y = 0; y < g.N; ++y) xi(y) = phi(mod_n(-y, g.N));
  return make_apparatus_model(g.N, g.N, from_vector(xi, pol), coupling_unitary(g),
                              grid_observable(g.N), grid_observable(g.N), {}, pol);
}

struct TranslatedPosteriorReport {
  double max_trace_distance = 0.0;  // over outcomes above the floor
  Index outcomes_checked = 0;
};

/// Check that the posterior at each positive-probability outcome a equals
/// the density operator of phi shifted by a, independent of the prior.
inline TranslatedPosteriorReport verify_translated_posteriors(
    const GridSystem& g, const Vector& phi, const DensityOperator& rho,
    const NumericPolicy& pol = default_policy()) {
  const ApparatusModel m = build_position_apparatus(g, phi, pol);
  const std::vector<double> p = apparatus_outcome_distribution(m, rho);
  TranslatedPosteriorReport rep;
  for (Index a = 0; a < g.N; ++a) {
    if (p[a] <= pol.probability_floor) continue;
    const DensityOperator post = conditional_state(m, OutcomeSet::single(g.N, a), rho, pol);
    const DensityOperator expect = from_vector(cyclic_shift(phi, a), pol);
    rep.max_trace_distance = std::max(rep.max_trace_distance, trace_distance(post, expect));
    ++rep.outcomes_checked;
  }
  return rep;
}

struct MomentumDemoReport {
  double min_posterior_fidelity = 1.0;    // vs the prior momentum eigenstate
  double max_distribution_deviation = 0;  // from the uniform distribution
  double nonselective_distance = 0.0;     // nonselective state vs prior
  double contrast_fidelity = 1.0;         // mismatched prior momentum case
};

/// Apparatus prepared in the grid-momentum eigenstate |p>; object prepared
/// in |-p mod N>.  Position is then measured without perturbing the object:
/// every posterior coincides with the prior momentum eigenstate and the
/// outcome distribution is uniform.  The contrast entry uses a mismatched
/// prior momentum, for which the posterior no longer matches the prior.
inline MomentumDemoReport momentum_nondisturbance_demo(
    const GridSystem& g, Index p, const NumericPolicy& pol = default_policy()) {
  if (p < 0 || p >= g.N) throw std::invalid_argument("momentum index out of range");
  const Index minus_p = mod_n(-p, g.N);
  // xi = |p> in momentum means phi(x) = xi(-x) = <x|-p>.
  const Vector phi = momentum_eigenstate(g, minus_p);
  const ApparatusModel m = build_position_apparatus(g, phi, pol);
  const Vector prior_vec = momentum_eigenstate(g, minus_p);
  const DensityOperator prior = from_vector(prior_vec, pol);

  MomentumDemoReport rep;
  const std::vector<double> dist = apparatus_outcome_distribution(m, prior);
  for (Index a = 0; a < g.N; ++a) {
    rep.max_distribution_deviation =
        std::max(rep.max_distribution_deviation,
                 std::abs(dist[a] - 1.0 / static_cast<double>(g.N)));
    const DensityOperator post = conditional_state(m, OutcomeSet::single(g.N, a), prior, pol);
    rep.min_posterior_fidelity =
        std::min(rep.min_posterior_fidelity, fidelity_pure(post, prior_vec, pol));
  }
  rep.nonselective_distance = trace_distance(nonselective_state(m, prior), prior);

  const Index q = mod_n(minus_p + 1, g.N);
  const Vector mism = momentum_eigenstate(g, q);
  const DensityOperator mprior = from_vector(mism, pol);
  double worst = 1.0;
  for (Index a = 0; a < g.N; ++a) {
    const DensityOperator post = conditional_state(m, OutcomeSet::single(g.N, a), mprior, pol);
    worst = std::min(worst, fidelity_pure(post, mism, pol));
  }
  rep.contrast_fidelity = worst;
  return rep;
}

}  // namespace qmeas

#endif
