#ifndef QMEAS_INSTRUMENT_HPP
#define QMEAS_INSTRUMENT_HPP

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "qmeas/observable.hpp"

namespace qmeas {

/// Completely positive map in Kraus form: rho -> sum_k M_k rho M_k^dag.
struct CPMap {
  Index dim_in = 0;
  Index dim_out = 0;
  std::vector<Matrix> kraus;

  Matrix apply(const Matrix& rho) const {
    Matrix out = Matrix::Zero(dim_out, dim_out);
    for (const Matrix& m : kraus) out += m * rho * m.adjoint();
    return out;
  }
};

inline CPMap make_cpmap(std::vector<Matrix> kraus) {
  if (kraus.empty()) throw std::invalid_argument("CPMap: empty Kraus list");
  CPMap m;
  m.dim_out = kraus.front().rows();
  m.dim_in = kraus.front().cols();
  for (const Matrix& k : kraus)
    if (k.rows() != m.dim_out || k.cols() != m.dim_in)
      throw std::invalid_argument("CPMap: inconsistent Kraus dimensions");
  m.kraus = std::move(kraus);
  return m;
}

/// Choi matrix sum_ij T(|i><j|) (x) |i><j| of a raw linear map; the escape
/// hatch for maps that are not completely positive (negative testing).
inline Matrix choi_of_map(const std::function<Matrix(const Matrix&)>& t, Index dim_in) {
  Matrix first = t(Matrix::Zero(dim_in, dim_in));
  const Index dim_out = first.rows();
  Matrix choi = Matrix::Zero(dim_out * dim_in, dim_out * dim_in);
  for (Index i = 0; i < dim_in; ++i)
    for (Index j = 0; j < dim_in; ++j) {
      Matrix eij = Matrix::Zero(dim_in, dim_in);
      eij(i, j) = 1.0;
      Matrix block = t(eij);
      for (Index a = 0; a < dim_out; ++a)
        for (Index b = 0; b < dim_out; ++b)
          choi(a * dim_in + i, b * dim_in + j) += block(a, b);
    }
  return choi;
}

inline Matrix choi_matrix(const CPMap& m) {
  Matrix choi = Matrix::Zero(m.dim_out * m.dim_in, m.dim_out * m.dim_in);
  for (const Matrix& k : m.kraus) {
    Vector v(m.dim_out * m.dim_in);
    for (Index a = 0; a < m.dim_out; ++a)
      for (Index i = 0; i < m.dim_in; ++i) v(a * m.dim_in + i) = k(a, i);
    choi += v * v.adjoint();
  }
  return choi;
}

/// Kraus operators from a Choi eigendecomposition; eigenvalues below the
/// rank cutoff are dropped.
inline std::vector<Matrix> kraus_from_choi(const Matrix& choi, Index dim_in,
                                           const NumericPolicy& pol = default_policy()) {
  const Index dim_out = choi.rows() / dim_in;
  Eigen::SelfAdjointEigenSolver<Matrix> es((choi + choi.adjoint()) / 2.0);
  std::vector<Matrix> kraus;
  for (Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam < -1e-9)
      throw std::domain_error("kraus_from_choi: Choi matrix not PSD");
    if (lam <= pol.rank_cutoff) continue;
    Matrix m(dim_out, dim_in);
    for (Index a = 0; a < dim_out; ++a)
      for (Index i = 0; i < dim_in; ++i)
        m(a, i) = std::sqrt(lam) * es.eigenvectors()(a * dim_in + i, k);
    kraus.push_back(std::move(m));
  }
  if (kraus.empty()) kraus.push_back(Matrix::Zero(dim_out, dim_in));
  return kraus;
}

/// CP-map-valued measure on a finite outcome set, stored atomically: one CP
/// map per outcome of the measured observable.  Set-maps are atom sums.
struct Instrument {
  Observable observable;
  std::vector<CPMap> atoms;

  Index dim() const { return observable.dim; }
};

inline Instrument make_instrument(Observable obs, std::vector<CPMap> atoms) {
  if (static_cast<Index>(atoms.size()) != obs.num_outcomes())
    throw std::invalid_argument("Instrument: one atom per outcome required");
  for (const CPMap& a : atoms)
    if (a.dim_in != obs.dim || a.dim_out != obs.dim)
      throw std::invalid_argument("Instrument: atom dimension mismatch");
  return {std::move(obs), std::move(atoms)};
}

/// The projection-postulate baseline: atoms rho -> E_a rho E_a.
inline Instrument von_neumann_instrument(const Observable& obs) {
  std::vector<CPMap> atoms;
  for (const Matrix& p : obs.projections) atoms.push_back(make_cpmap({p}));
  return {obs, std::move(atoms)};
}

inline Matrix apply(const Instrument& ins, const OutcomeSet& s, const DensityOperator& rho) {
  if (rho.dim() != ins.dim())
    throw std::invalid_argument("apply: dimension mismatch");
  if (s.size() != ins.observable.num_outcomes())
    throw std::invalid_argument("apply: outcome set mismatch");
  Matrix out = Matrix::Zero(ins.dim(), ins.dim());
  for (Index a = 0; a < s.size(); ++a)
    if (s.contains(a)) out += ins.atoms[a].apply(rho.op);
  return out;
}

inline std::vector<double> outcome_distribution(const Instrument& ins,
                                                const DensityOperator& rho) {
  if (rho.dim() != ins.dim())
    throw std::invalid_argument("outcome_distribution: dimension mismatch");
  std::vector<double> p;
  for (const CPMap& atom : ins.atoms) p.push_back(atom.apply(rho.op).trace().real());
  return p;
}

inline DensityOperator selective_state(const Instrument& ins, const OutcomeSet& s,
                                       const DensityOperator& rho,
                                       const NumericPolicy& pol = default_policy()) {
  return normalize_state(apply(ins, s, rho), pol);
}

/// Per-outcome posterior states; outcomes with probability at or below the
/// floor are left empty.
inline std::vector<std::optional<DensityOperator>> posterior_family(
    const Instrument& ins, const DensityOperator& rho,
    const NumericPolicy& pol = default_policy()) {
  std::vector<std::optional<DensityOperator>> out;
  for (Index a = 0; a < ins.observable.num_outcomes(); ++a) {
    Matrix t = ins.atoms[a].apply(rho.op);
    const double p = t.trace().real();
    if (p > pol.probability_floor)
      out.emplace_back(DensityOperator{t / p});
    else
      out.emplace_back(std::nullopt);
  }
  return out;
}

struct AxiomReport {
  bool cp_ok = false;
  bool additivity_ok = false;
  bool compat_ok = false;
  double min_choi_eigenvalue = 0.0;  // most negative over atoms
  double additivity_violation = 0.0;
  double compat_violation = 0.0;

  bool all_ok() const { return cp_ok && additivity_ok && compat_ok; }
};

/// Check complete positivity (Choi criterion per atom), additivity over
/// seeded random partitions, and A-compatibility over the full operator
/// basis |i><j|.
inline AxiomReport verify_axioms(const Instrument& ins,
                                 const NumericPolicy& pol = default_policy(),
                                 std::uint64_t seed = 0, int partitions = 32) {
  AxiomReport rep;
  const Index d = ins.dim();
  const Index n = ins.observable.num_outcomes();

  double min_eig = 0.0;
  for (const CPMap& atom : ins.atoms) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(choi_matrix(atom));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  rep.min_choi_eigenvalue = min_eig;
  rep.cp_ok = min_eig >= -pol.state_tol;

  // Additivity is guaranteed by the atom representation; assert it
  // numerically on random two-part splits of random subsets.
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  DensityOperator probe{Matrix::Identity(d, d) / static_cast<double>(d)};
  double add_viol = 0.0;
  for (int r = 0; r < partitions; ++r) {
    OutcomeSet whole = OutcomeSet::empty(n), part1 = OutcomeSet::empty(n),
               part2 = OutcomeSet::empty(n);
    for (Index a = 0; a < n; ++a) {
      if (!coin(rng)) continue;
      whole.flags[a] = 1;
      (coin(rng) ? part1 : part2).flags[a] = 1;
    }
    Matrix diff = apply(ins, whole, probe) - apply(ins, part1, probe) - apply(ins, part2, probe);
    add_viol = std::max(add_viol, diff.cwiseAbs().maxCoeff());
  }
  rep.additivity_violation = add_viol;
  rep.additivity_ok = add_viol <= 1e-12;

  double compat_viol = 0.0;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Matrix eij = Matrix::Zero(d, d);
      eij(i, j) = 1.0;
      for (Index a = 0; a < n; ++a) {
        const Complex lhs = ins.atoms[a].apply(eij).trace();
        const Complex rhs = (ins.observable.projections[a] * eij).trace();
        compat_viol = std::max(compat_viol, std::abs(lhs - rhs));
      }
    }
  rep.compat_violation = compat_viol;
  rep.compat_ok = compat_viol <= pol.state_tol;
  return rep;
}

/// Instrument realizing a prescribed posterior family: outcome a leaves the
/// object in family[a] regardless of the prior state, with Born statistics
/// of the measured observable.
inline Instrument controlled_posterior_instrument(
    const Observable& obs, const std::vector<DensityOperator>& family,
    const NumericPolicy& pol = default_policy()) {
  if (static_cast<Index>(family.size()) != obs.num_outcomes())
    throw std::invalid_argument("controlled_posterior_instrument: one state per outcome");
  std::vector<CPMap> atoms;
  for (Index a = 0; a < obs.num_outcomes(); ++a) {
    if (!validate(family[a], pol) || family[a].dim() != obs.dim)
      throw std::invalid_argument("controlled_posterior_instrument: invalid family member");
    // Orthonormal basis of ran E_a.
    Eigen::SelfAdjointEigenSolver<Matrix> pe(obs.projections[a]);
    std::vector<Vector> range_basis;
    for (Index k = 0; k < pe.eigenvalues().size(); ++k)
      if (pe.eigenvalues()(k) > 0.5) range_basis.push_back(pe.eigenvectors().col(k));
    Eigen::SelfAdjointEigenSolver<Matrix> fe(family[a].op);
    std::vector<Matrix> kraus;
    for (Index j = 0; j < fe.eigenvalues().size(); ++j) {
      const double lam = fe.eigenvalues()(j);
      if (lam <= pol.rank_cutoff) continue;
      for (const Vector& am : range_basis)
        kraus.push_back(std::sqrt(lam) * fe.eigenvectors().col(j) * am.adjoint());
    }
    atoms.push_back(make_cpmap(std::move(kraus)));
  }
  return {obs, std::move(atoms)};
}

/// Largest atomwise Choi distance between two instruments over the same
/// outcome list.
inline double instrument_distance(const Instrument& a, const Instrument& b) {
  if (a.observable.num_outcomes() != b.observable.num_outcomes() || a.dim() != b.dim())
    throw std::invalid_argument("instrument_distance: shape mismatch");
  double d = 0.0;
  for (Index i = 0; i < a.observable.num_outcomes(); ++i)
    d = std::max(d, (choi_matrix(a.atoms[i]) - choi_matrix(b.atoms[i])).norm());
  return d;
}

}  // namespace qmeas

#endif
