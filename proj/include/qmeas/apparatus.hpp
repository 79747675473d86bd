#ifndef QMEAS_APPARATUS_HPP
#define QMEAS_APPARATUS_HPP

#include "qmeas/instrument.hpp"

namespace qmeas {

/// Measurement model (K, sigma, U, B) together with the observable A it
/// claims to measure.  outcome_map sends each probe outcome index to the
/// corresponding measured outcome index, or -1 for sentinel outcomes that
/// must carry zero probability.
struct ApparatusModel {
  Index dimH = 0;
  Index dimK = 0;
  DensityOperator sigma;  // on K
  Matrix U;               // on H (x) K
  Observable probe;       // on K
  Observable measured;    // on H
  std::vector<int> outcome_map;
};

inline ApparatusModel make_apparatus_model(Index dimH, Index dimK, DensityOperator sigma,
                                           Matrix U, Observable probe, Observable measured,
                                           std::vector<int> outcome_map = {},
                                           const NumericPolicy& pol = default_policy()) {
  if (sigma.dim() != dimK || probe.dim != dimK || measured.dim != dimH ||
      U.rows() != dimH * dimK || U.cols() != dimH * dimK)
    throw std::invalid_argument("ApparatusModel: dimension mismatch");
  if (!is_unitary(U, pol.unitary_tol))
    throw std::invalid_argument("ApparatusModel: U not unitary");
  if (!validate(sigma, pol))
    throw std::invalid_argument("ApparatusModel: sigma not a density operator");
  if (outcome_map.empty() && probe.num_outcomes() == measured.num_outcomes()) {
    for (Index b = 0; b < probe.num_outcomes(); ++b)
      outcome_map.push_back(static_cast<int>(b));
  }
  return {dimH, dimK, std::move(sigma), std::move(U), std::move(probe),
          std::move(measured), std::move(outcome_map)};
}

/// U (rho (x) sigma) U^dag on the composite space.
inline Matrix evolved_composite(const ApparatusModel& m, const Matrix& rho) {
  return m.U * tensor(rho, m.sigma.op) * m.U.adjoint();
}

inline Matrix probe_projector(const ApparatusModel& m, const OutcomeSet& s) {
  return tensor(Matrix::Identity(m.dimH, m.dimH), projection_of(m.probe, s));
}

inline std::vector<double> apparatus_outcome_distribution(const ApparatusModel& m,
                                                          const DensityOperator& rho) {
  if (rho.dim() != m.dimH)
    throw std::invalid_argument("apparatus_outcome_distribution: dimension mismatch");
  const Matrix w = evolved_composite(m, rho.op);
  std::vector<double> p;
  for (Index b = 0; b < m.probe.num_outcomes(); ++b)
    p.push_back((probe_projector(m, OutcomeSet::single(m.probe.num_outcomes(), b)) * w)
                    .trace()
                    .real());
  return p;
}

struct MeasuresReport {
  double max_violation = 0.0;  // over the full operator basis of priors
  double sentinel_leak = 0.0;  // probability mass on sentinel probe outcomes
  bool passes(double tol) const { return max_violation <= tol && sentinel_leak <= 1e-12; }
};

/// Verify that the model's outcome statistics reproduce the Born statistics
/// of the measured observable on a complete operator basis of priors.
inline MeasuresReport measures_check(const ApparatusModel& m,
                                     const NumericPolicy& pol = default_policy()) {
  if (m.outcome_map.empty())
    throw std::invalid_argument("no outcome correspondence");
  MeasuresReport rep;
  const Index nb = m.probe.num_outcomes();
  const Index na = m.measured.num_outcomes();
  for (Index i = 0; i < m.dimH; ++i)
    for (Index j = 0; j < m.dimH; ++j) {
      Matrix eij = Matrix::Zero(m.dimH, m.dimH);
      eij(i, j) = 1.0;
      const Matrix w = evolved_composite(m, eij);
      std::vector<Complex> per_a(na, Complex(0.0));
      for (Index b = 0; b < nb; ++b) {
        const Complex t =
            (probe_projector(m, OutcomeSet::single(nb, b)) * w).trace();
        const int a = m.outcome_map[b];
        if (a < 0)
          rep.sentinel_leak = std::max(rep.sentinel_leak, std::abs(t));
        else
          per_a[a] += t;
      }
      for (Index a = 0; a < na; ++a) {
        const Complex born = (m.measured.projections[a] * eij).trace();
        rep.max_violation = std::max(rep.max_violation, std::abs(per_a[a] - born));
      }
    }
  (void)pol;
  return rep;
}

inline DensityOperator nonselective_state(const ApparatusModel& m,
                                          const DensityOperator& rho) {
  if (rho.dim() != m.dimH)
    throw std::invalid_argument("nonselective_state: dimension mismatch");
  return {partial_trace_probe(evolved_composite(m, rho.op), m.dimH, m.dimK)};
}

/// Object state conditional on the probe outcome landing in s.
inline DensityOperator conditional_state(const ApparatusModel& m, const OutcomeSet& s,
                                         const DensityOperator& rho,
                                         const NumericPolicy& pol = default_policy()) {
  if (rho.dim() != m.dimH)
    throw std::invalid_argument("conditional_state: dimension mismatch");
  const Matrix t = partial_trace_probe(probe_projector(m, s) * evolved_composite(m, rho.op),
                                       m.dimH, m.dimK);
  return normalize_state(t, pol);
}

/// Joint distribution of a follow-up X measurement and the probe outcome;
/// rows index X outcomes, columns probe outcomes.
inline Eigen::MatrixXd joint_distribution(const ApparatusModel& m, const Observable& x_obs,
                                          const DensityOperator& rho) {
  if (x_obs.dim != m.dimH || rho.dim() != m.dimH)
    throw std::invalid_argument("joint_distribution: dimension mismatch");
  const Matrix w = evolved_composite(m, rho.op);
  Eigen::MatrixXd out(x_obs.num_outcomes(), m.probe.num_outcomes());
  for (Index x = 0; x < x_obs.num_outcomes(); ++x)
    for (Index b = 0; b < m.probe.num_outcomes(); ++b)
      out(x, b) = (tensor(x_obs.projections[x],
                          m.probe.projections[b]) *
                   w)
                      .trace()
                      .real();
  return out;
}

/// Operational distribution of the model: per measured outcome, the CP map
/// rho -> Tr_K[(I (x) E^B) U (rho (x) sigma) U^dag], computed on the
/// operator basis and Kraus-decomposed through the Choi eigendecomposition.
inline Instrument extract_instrument(const ApparatusModel& m,
                                     const NumericPolicy& pol = default_policy()) {
  if (!measures_check(m, pol).passes(pol.state_tol))
    throw std::domain_error("not an A-measurement");
  const Index d = m.dimH;
  const Index na = m.measured.num_outcomes();
  std::vector<Matrix> chois(na, Matrix::Zero(d * d, d * d));
  // Columns of U restricted to object basis ket i: evolving Eij (x) sigma
  // costs three small products instead of a full composite conjugation.
  std::vector<Matrix> slabs;
  for (Index i = 0; i < d; ++i) {
    Matrix s(d * m.dimK, m.dimK);
    for (Index k = 0; k < m.dimK; ++k) s.col(k) = m.U.col(i * m.dimK + k);
    slabs.push_back(std::move(s));
  }
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      const Matrix w = slabs[i] * m.sigma.op * slabs[j].adjoint();
      for (Index b = 0; b < m.probe.num_outcomes(); ++b) {
        const int a = m.outcome_map.empty() ? static_cast<int>(b) : m.outcome_map[b];
        if (a < 0) continue;
        const Matrix block = partial_trace_probe(
            probe_projector(m, OutcomeSet::single(m.probe.num_outcomes(), b)) * w, d,
            m.dimK);
        for (Index r = 0; r < d; ++r)
          for (Index c = 0; c < d; ++c) chois[a](r * d + i, c * d + j) += block(r, c);
      }
    }
  std::vector<CPMap> atoms;
  for (Index a = 0; a < na; ++a)
    atoms.push_back(make_cpmap(kraus_from_choi(chois[a], d, pol)));
  return make_instrument(m.measured, std::move(atoms));
}

/// Build a model apparatus whose operational distribution is the given
/// instrument: probe basis kets label the Kraus operators, the interaction
/// is a unitary completion of the isometry psi -> sum (M psi) (x) |a,k>,
/// and the probe observable groups kets by outcome.
inline ApparatusModel dilate_instrument(const Instrument& ins,
                                        const NumericPolicy& pol = default_policy()) {
  const AxiomReport ax = verify_axioms(ins, pol);
  if (!ax.all_ok())
    throw std::domain_error("dilate_instrument: instrument violates the axioms");
  const Index d = ins.dim();
  Index total_kraus = 0;
  for (const CPMap& atom : ins.atoms) total_kraus += static_cast<Index>(atom.kraus.size());
  const Index dK = total_kraus;

  // Isometry V psi = sum_{a,k} (M_{a,k} psi) (x) |a,k>.
  Matrix V = Matrix::Zero(d * dK, d);
  Index slot = 0;
  std::vector<int> ket_outcome(dK);
  for (Index a = 0; a < ins.observable.num_outcomes(); ++a)
    for (const Matrix& mk : ins.atoms[a].kraus) {
      for (Index x = 0; x < d; ++x)
        for (Index i = 0; i < d; ++i) V(x * dK + slot, i) = mk(x, i);
      ket_outcome[slot] = static_cast<int>(a);
      ++slot;
    }

  // U (psi (x) e0) = V psi: the d columns at probe index 0 are fixed;
  // complete the rest against the canonical basis with pivoting.
  const Index D = d * dK;
  Matrix U = Matrix::Zero(D, D);
  std::vector<Vector> cols;
  for (Index i = 0; i < d; ++i) cols.push_back(V.col(i));
  std::vector<Vector> extra;
  for (Index c = 0; c < D && static_cast<Index>(cols.size()) < D; ++c) {
    Vector v = Vector::Zero(D);
    v(c) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : cols) v -= (q.adjoint() * v)(0, 0) * q;
    if (v.norm() < pol.completion_residual) continue;
    v.normalize();
    cols.push_back(v);
    extra.push_back(v);
  }
  if (static_cast<Index>(cols.size()) < D)
    throw std::domain_error("dilate_instrument: unitary completion failed");
  for (Index i = 0; i < d; ++i) U.col(i * dK + 0) = V.col(i);
  Index e = 0;
  for (Index i = 0; i < d; ++i)
    for (Index k = 1; k < dK; ++k) U.col(i * dK + k) = extra[e++];

  Observable probe;
  probe.dim = dK;
  std::vector<int> outcome_map;
  for (Index a = 0; a < ins.observable.num_outcomes(); ++a) {
    Matrix p = Matrix::Zero(dK, dK);
    for (Index k = 0; k < dK; ++k)
      if (ket_outcome[k] == static_cast<int>(a)) p(k, k) = 1.0;
    probe.outcomes.push_back(ins.observable.outcomes[a]);
    probe.projections.push_back(std::move(p));
    outcome_map.push_back(static_cast<int>(a));
  }

  Vector ready = Vector::Zero(dK);
  ready(0) = 1.0;
  return make_apparatus_model(d, dK, from_vector(ready), std::move(U), std::move(probe),
                              ins.observable, std::move(outcome_map), pol);
}

/// The projection-postulate guess for the composite state conditional on
/// the probe outcome landing in s.  Kept as a comparison target; the
/// library's own conditioning never uses it.
inline DensityOperator naive_composite_state(const ApparatusModel& m, const OutcomeSet& s,
                                             const DensityOperator& rho,
                                             const NumericPolicy& pol = default_policy()) {
  const Matrix p = probe_projector(m, s);
  return normalize_state(p * evolved_composite(m, rho.op) * p, pol);
}

struct NonMixtureReport {
  double composite_distance = 0.0;  // naive composite state vs partition mixture
  double object_distance = 0.0;     // conditioned object states, same partition
};

/// Witness that the projection-postulate composite state fails the mixture
/// identity over a partition while the properly conditioned object states
/// satisfy it.
inline NonMixtureReport demonstrate_non_mixture(const ApparatusModel& m, const OutcomeSet& s,
                                                const OutcomeSet& part1, const OutcomeSet& part2,
                                                const DensityOperator& rho,
                                                const NumericPolicy& pol = default_policy()) {
  for (Index b = 0; b < s.size(); ++b) {
    const bool in_union = part1.contains(b) || part2.contains(b);
    if (in_union != s.contains(b) || (part1.contains(b) && part2.contains(b)))
      throw std::invalid_argument("demonstrate_non_mixture: not a partition of s");
  }
  const Matrix w = evolved_composite(m, rho.op);
  auto prob = [&](const OutcomeSet& set) {
    return (probe_projector(m, set) * w).trace().real();
  };
  const double p1 = prob(part1), p2 = prob(part2);
  if (p1 <= pol.probability_floor || p2 <= pol.probability_floor)
    throw std::domain_error("conditioning on null event");

  const DensityOperator whole = naive_composite_state(m, s, rho, pol);
  const DensityOperator n1 = naive_composite_state(m, part1, rho, pol);
  const DensityOperator n2 = naive_composite_state(m, part2, rho, pol);
  Matrix mix = (p1 * n1.op + p2 * n2.op) / (p1 + p2);

  NonMixtureReport rep;
  rep.composite_distance = trace_distance(whole.op, mix);

  const DensityOperator ow = conditional_state(m, s, rho, pol);
  const DensityOperator o1 = conditional_state(m, part1, rho, pol);
  const DensityOperator o2 = conditional_state(m, part2, rho, pol);
  rep.object_distance = trace_distance(ow.op, (p1 * o1.op + p2 * o2.op) / (p1 + p2));
  return rep;
}

}  // namespace qmeas

#endif
