#ifndef QMEAS_SCENARIO_HPP
#define QMEAS_SCENARIO_HPP

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qmeas/position_model.hpp"

namespace qmeas {

using Json = nlohmann::ordered_json;

/// File could not be read or is not structurally a scenario (CLI exit 2).
struct ScenarioParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario is well-formed but semantically invalid (CLI exit 3).
struct ScenarioValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Report {
  Json body;
  bool pass = false;
};

namespace detail {

inline Complex parse_complex(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ScenarioParseError("complex numbers must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Vector parse_vector(const Json& j) {
  if (!j.is_array() || j.empty()) throw ScenarioParseError("expected a nonempty vector");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = parse_complex(j[i]);
  return v;
}

inline Matrix parse_matrix(const Json& j) {
  if (!j.is_array() || j.empty()) throw ScenarioParseError("expected a nonempty matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ScenarioParseError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_complex(j[r][c]);
  }
  return m;
}

inline Json dump_complex(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Json dump_matrix(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(dump_complex(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ScenarioParseError(std::string("missing field: ") + key);
  return j.at(key);
}

inline NumericPolicy policy_from(const Json& j) {
  NumericPolicy pol;
  if (!j.contains("tolerances")) return pol;
  const Json& t = j.at("tolerances");
  auto set = [&](const char* k, double& field) {
    if (t.contains(k)) field = t.at(k).get<double>();
  };
  set("hermitian_tol", pol.hermitian_tol);
  set("degeneracy_threshold", pol.degeneracy_threshold);
  set("unitary_tol", pol.unitary_tol);
  set("state_tol", pol.state_tol);
  set("norm_tol", pol.norm_tol);
  set("probability_floor", pol.probability_floor);
  set("rank_cutoff", pol.rank_cutoff);
  return pol;
}

inline OutcomeSet parse_outcome_set(const Json& j, Index n) {
  OutcomeSet s = OutcomeSet::empty(n);
  if (!j.is_array()) throw ScenarioParseError("outcome sets must be index arrays");
  for (const auto& e : j) {
    const Index i = e.get<Index>();
    if (i < 0 || i >= n) throw ScenarioValidationError("outcome index out of range");
    s.flags[i] = 1;
  }
  return s;
}

struct CheckList {
  Json checks = Json::array();
  bool all_pass = true;

  // comparison: "<=" means value must not exceed threshold, ">" the reverse.
  void add(const std::string& name, double value, double threshold,
           const std::string& comparison) {
    const bool ok = comparison == ">" ? value > threshold : value <= threshold;
    checks.push_back(Json{{"name", name},
                          {"value", value},
                          {"threshold", threshold},
                          {"comparison", comparison},
                          {"pass", ok}});
    all_pass = all_pass && ok;
  }
};

inline Json distribution_json(const std::vector<double>& outcomes,
                              const std::vector<double>& probs) {
  Json d = Json::array();
  for (std::size_t i = 0; i < probs.size(); ++i)
    d.push_back(Json{{"outcome", outcomes[i]}, {"probability", probs[i]}});
  return d;
}

inline Instrument instrument_from_json(const Json& j, const NumericPolicy& pol) {
  Observable obs;
  try {
    obs = from_hermitian(parse_matrix(require(j, "observable")), pol);
  } catch (const std::invalid_argument& e) {
    throw ScenarioValidationError(e.what());
  }
  const Json& kraus = require(j, "kraus");
  if (!kraus.is_array() || static_cast<Index>(kraus.size()) != obs.num_outcomes())
    throw ScenarioValidationError("kraus: one operator list per outcome required");
  std::vector<CPMap> atoms;
  for (const auto& list : kraus) {
    if (!list.is_array() || list.empty())
      throw ScenarioParseError("kraus: each outcome needs a nonempty operator list");
    std::vector<Matrix> ops;
    for (const auto& mj : list) ops.push_back(parse_matrix(mj));
    try {
      atoms.push_back(make_cpmap(std::move(ops)));
    } catch (const std::invalid_argument& e) {
      throw ScenarioValidationError(e.what());
    }
  }
  try {
    return make_instrument(std::move(obs), std::move(atoms));
  } catch (const std::invalid_argument& e) {
    throw ScenarioValidationError(e.what());
  }
}

inline Vector normalized_vector_from(const Json& j, const char* key, Index dim) {
  Vector v = parse_vector(require(j, key));
  if (v.size() != dim) throw ScenarioValidationError(std::string(key) + ": wrong dimension");
  if (!is_normalized(v)) throw ScenarioValidationError(std::string(key) + ": not normalized");
  return v;
}

}  // namespace detail

inline Report run_scenario_json(const Json& scenario) {
  using namespace detail;
  const std::string kind = require(scenario, "kind").get<std::string>();
  const NumericPolicy pol = policy_from(scenario);
  const std::uint64_t seed =
      scenario.contains("seed") ? scenario.at("seed").get<std::uint64_t>() : 0;
  const int reps =
      scenario.contains("repetitions") ? scenario.at("repetitions").get<int>() : 32;

  CheckList cl;
  Json body;
  body["kind"] = kind;
  body["scenario"] = scenario;

  if (kind == "instrument-verify") {
    const Instrument ins = instrument_from_json(scenario, pol);
    const AxiomReport ax = verify_axioms(ins, pol, seed, reps);
    cl.add("choi_min_eigenvalue", ax.min_choi_eigenvalue, -pol.state_tol, ">");
    cl.add("additivity_violation", ax.additivity_violation, 1e-12, "<=");
    cl.add("compatibility_violation", ax.compat_violation, pol.state_tol, "<=");
    if (scenario.contains("prior")) {
      DensityOperator rho{parse_matrix(scenario.at("prior"))};
      if (!validate(rho, pol)) throw ScenarioValidationError("prior: not a density operator");
      body["distribution"] =
          distribution_json(ins.observable.outcomes, outcome_distribution(ins, rho));
    }
  } else if (kind == "dilate") {
    const Instrument ins = instrument_from_json(scenario, pol);
    const ApparatusModel model = dilate_instrument(ins, pol);
    const MeasuresReport mc = measures_check(model, pol);
    cl.add("measures_check_violation", mc.max_violation, pol.state_tol, "<=");
    cl.add("sentinel_leak", mc.sentinel_leak, 1e-12, "<=");
    const Instrument round = extract_instrument(model, pol);
    cl.add("round_trip_choi_distance", instrument_distance(ins, round), 1e-9, "<=");
    body["probe_dimension"] = model.dimK;
  } else if (kind == "position-demo") {
    const GridSystem g = make_grid(require(scenario, "N").get<Index>());
    const Vector phi = normalized_vector_from(scenario, "phi", g.N);
    const Vector psi = normalized_vector_from(scenario, "psi", g.N);
    const ApparatusModel model = build_position_apparatus(g, phi, pol);
    const DensityOperator rho = from_vector(psi, pol);
    const std::vector<double> dist = apparatus_outcome_distribution(model, rho);
    double dist_err = 0.0;
    for (Index y = 0; y < g.N; ++y)
      dist_err = std::max(dist_err, std::abs(dist[y] - std::norm(psi(y))));
    cl.add("distribution_vs_position_density", dist_err, 1e-12, "<=");
    const TranslatedPosteriorReport tp = verify_translated_posteriors(g, phi, rho, pol);
    cl.add("translated_posterior_distance", tp.max_trace_distance, 1e-10, "<=");
    if (scenario.contains("psi2")) {
      const Vector psi2 = normalized_vector_from(scenario, "psi2", g.N);
      const DensityOperator rho2 = from_vector(psi2, pol);
      double fam = 0.0;
      const std::vector<double> dist2 = apparatus_outcome_distribution(model, rho2);
      for (Index a = 0; a < g.N; ++a) {
        if (dist[a] <= pol.probability_floor || dist2[a] <= pol.probability_floor) continue;
        fam = std::max(fam, trace_distance(
                                conditional_state(model, OutcomeSet::single(g.N, a), rho, pol),
                                conditional_state(model, OutcomeSet::single(g.N, a), rho2, pol)));
      }
      cl.add("prior_independence_distance", fam, 1e-10, "<=");
    }
    body["distribution"] = distribution_json(model.probe.outcomes, dist);
  } else if (kind == "momentum-demo") {
    const GridSystem g = make_grid(require(scenario, "N").get<Index>());
    const Index p = require(scenario, "p").get<Index>();
    if (p < 0 || p >= g.N) throw ScenarioValidationError("p: momentum index out of range");
    const MomentumDemoReport rep = momentum_nondisturbance_demo(g, p, pol);
    cl.add("posterior_fidelity_deficit", 1.0 - rep.min_posterior_fidelity, 1e-10, "<=");
    cl.add("uniformity_deviation", rep.max_distribution_deviation, 1e-12, "<=");
    cl.add("nonselective_distance", rep.nonselective_distance, 1e-10, "<=");
    cl.add("contrast_fidelity", rep.contrast_fidelity, 0.99, "<=");
    std::vector<double> outs, probs;
    for (Index a = 0; a < g.N; ++a) {
      outs.push_back(static_cast<double>(a));
      probs.push_back(1.0 / static_cast<double>(g.N));
    }
    body["distribution"] = distribution_json(outs, probs);
  } else if (kind == "non-mixture-demo") {
    const GridSystem g = make_grid(require(scenario, "N").get<Index>());
    const Vector phi = normalized_vector_from(scenario, "phi", g.N);
    const Vector psi = normalized_vector_from(scenario, "psi", g.N);
    const OutcomeSet s = parse_outcome_set(require(scenario, "set"), g.N);
    const Json& pj = require(scenario, "partition");
    if (!pj.is_array() || pj.size() != 2)
      throw ScenarioParseError("partition must hold exactly two outcome sets");
    const OutcomeSet p1 = parse_outcome_set(pj[0], g.N);
    const OutcomeSet p2 = parse_outcome_set(pj[1], g.N);
    const ApparatusModel model = build_position_apparatus(g, phi, pol);
    NonMixtureReport rep;
    try {
      rep = demonstrate_non_mixture(model, s, p1, p2, from_vector(psi, pol), pol);
    } catch (const std::invalid_argument& e) {
      throw ScenarioValidationError(e.what());
    }
    cl.add("composite_non_mixture_distance", rep.composite_distance, 0.01, ">");
    cl.add("object_mixture_identity_distance", rep.object_distance, 1e-10, "<=");
  } else if (kind == "joint-distribution") {
    const GridSystem g = make_grid(require(scenario, "N").get<Index>());
    const Vector phi = normalized_vector_from(scenario, "phi", g.N);
    const Vector psi = normalized_vector_from(scenario, "psi", g.N);
    const ApparatusModel model = build_position_apparatus(g, phi, pol);
    const DensityOperator rho = from_vector(psi, pol);
    const Observable x_obs = grid_observable(g.N);
    const Eigen::MatrixXd joint = joint_distribution(model, x_obs, rho);
    cl.add("total_probability_deviation", std::abs(joint.sum() - 1.0), 1e-10, "<=");
    const std::vector<double> marg = apparatus_outcome_distribution(model, rho);
    double marg_err = 0.0, fact_err = 0.0;
    for (Index b = 0; b < g.N; ++b) {
      marg_err = std::max(marg_err, std::abs(joint.col(b).sum() - marg[b]));
      if (marg[b] <= 1e-6) continue;
      const DensityOperator cond =
          conditional_state(model, OutcomeSet::single(g.N, b), rho, pol);
      for (Index x = 0; x < g.N; ++x) {
        const double rhs =
            (x_obs.projections[x] * cond.op).trace().real() * marg[b];
        fact_err = std::max(fact_err, std::abs(joint(x, b) - rhs));
      }
    }
    cl.add("marginal_deviation", marg_err, 1e-10, "<=");
    cl.add("factorization_residual", fact_err, 1e-10, "<=");
    Json rows = Json::array();
    for (Index x = 0; x < g.N; ++x) {
      Json row = Json::array();
      for (Index b = 0; b < g.N; ++b) row.push_back(joint(x, b));
      rows.push_back(row);
    }
    body["joint"] = rows;
  } else {
    throw ScenarioParseError("unknown scenario kind: " + kind);
  }

  body["checks"] = cl.checks;
  body["verdict"] = cl.all_pass ? "PASS" : "FAIL";
  return {std::move(body), cl.all_pass};
}

inline Json load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError("cannot open scenario file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioParseError(std::string("invalid JSON: ") + e.what());
  }
  return j;
}

inline Report run_scenario(const std::string& path) {
  Json j = load_scenario_file(path);
  try {
    return run_scenario_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioParseError(std::string("malformed scenario: ") + e.what());
  }
}

/// Tab-separated outcome table: value, probability, cumulative; 17
/// significant digits per number.
inline std::string emit_distribution_table(const Report& report) {
  if (!report.body.contains("distribution"))
    throw std::invalid_argument("emit_distribution_table: report has no distribution");
  auto fmt = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  std::string out = "outcome\tprobability\tcumulative\n";
  double cum = 0.0;
  for (const auto& row : report.body.at("distribution")) {
    const double p = row.at("probability").get<double>();
    cum += p;
    out += fmt(row.at("outcome").get<double>()) + "\t" + fmt(p) + "\t" + fmt(cum) + "\n";
  }
  return out;
}

}  // namespace qmeas

#endif
