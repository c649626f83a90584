#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/errors.hpp"
#include "cfglyph/graph.hpp"
#include "cfglyph/rng.hpp"

namespace cfglyph {

// ─── Structural model ────────────────────────────────────────────────────────
//
// One structural equation per attribute. Values live in model units: continuous
// attributes are affinely scaled to [0, 1], binary attributes are 0/1,
// categorical attributes are class indices. Noise values are the exogenous
// inputs that reproduce an observed row: a residual for linear-Gaussian
// attributes and a uniform draw for the probability-integral forms.

using AttributeVector = std::map<std::string, double>;
using NoiseVector = std::map<std::string, double>;

enum class EquationKind {
  LinearGaussian,   // a = clip01(intercept + sum_j coeff_j * parent_j + eps)
  Cpt,              // a = 1[u <= table[parent configuration]]
  CategoricalRoot,  // a = k with u in [cum_k, cum_{k+1})
  UniformRoot,      // a = u, marginal uniform on [0, 1]
};

struct Equation {
  EquationKind kind = EquationKind::LinearGaussian;
  double intercept = 0.0;            // LinearGaussian
  std::vector<double> coeffs;        // LinearGaussian, one per parent in order
  double sigma = 0.0;                // LinearGaussian, > 0
  std::vector<double> table;         // Cpt, indexed by parent configuration
  std::vector<double> probs;         // CategoricalRoot, sums to 1

  static Equation linear_gaussian(double intercept, std::vector<double> coeffs, double sigma) {
    Equation eq;
    eq.kind = EquationKind::LinearGaussian;
    eq.intercept = intercept;
    eq.coeffs = std::move(coeffs);
    eq.sigma = sigma;
    return eq;
  }
  static Equation cpt(std::vector<double> table) {
    Equation eq;
    eq.kind = EquationKind::Cpt;
    eq.table = std::move(table);
    return eq;
  }
  static Equation categorical_root(std::vector<double> probs) {
    Equation eq;
    eq.kind = EquationKind::CategoricalRoot;
    eq.probs = std::move(probs);
    return eq;
  }
  static Equation uniform_root() {
    Equation eq;
    eq.kind = EquationKind::UniformRoot;
    return eq;
  }
};

struct StructuralModel {
  CausalGraph graph;
  std::vector<Equation> equations;  // aligned with graph declaration order
};

// ─── Value scaling ───────────────────────────────────────────────────────────

/// Raw units to model units. Binary and categorical values pass through after
/// a domain check.
inline double scale(const AttributeSpec& spec, double raw) {
  switch (spec.kind) {
    case AttributeKind::Continuous:
      if (!(raw >= spec.raw_lo && raw <= spec.raw_hi))
        throw OutOfRangeError("'" + spec.name + "' value " + std::to_string(raw) +
                              " outside [" + std::to_string(spec.raw_lo) + ", " +
                              std::to_string(spec.raw_hi) + "]");
      return (raw - spec.raw_lo) / (spec.raw_hi - spec.raw_lo);
    case AttributeKind::Binary:
      if (raw != 0.0 && raw != 1.0)
        throw OutOfRangeError("'" + spec.name + "' binary value must be 0 or 1");
      return raw;
    case AttributeKind::Categorical:
      if (raw != std::floor(raw) || raw < 0.0 || raw >= spec.cardinality)
        throw OutOfRangeError("'" + spec.name + "' class must be an integer in [0, " +
                              std::to_string(spec.cardinality) + ")");
      return raw;
  }
  return raw;
}

/// Model units back to raw units; inverse of scale up to rounding.
inline double unscale(const AttributeSpec& spec, double value) {
  switch (spec.kind) {
    case AttributeKind::Continuous:
      if (!(value >= 0.0 && value <= 1.0))
        throw OutOfRangeError("'" + spec.name + "' scaled value " +
                              std::to_string(value) + " outside [0, 1]");
      return spec.raw_lo + value * (spec.raw_hi - spec.raw_lo);
    case AttributeKind::Binary:
    case AttributeKind::Categorical:
      return scale(spec, value);  // same domain check, identity map
  }
  return value;
}

// ─── Internal evaluation helpers ─────────────────────────────────────────────

namespace detail {

inline double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

/// Linear form in fixed parent order; the summation order is part of the
/// model's observable behavior because counterfactual equality checks are
/// bitwise.
inline double linear_form(const Equation& eq, const CausalGraph& g,
                          std::size_t attr, const AttributeVector& values) {
  double acc = eq.intercept;
  const auto& par = g.parents_of(attr);
  for (std::size_t j = 0; j < par.size(); ++j)
    acc += eq.coeffs[j] * values.at(g.spec(par[j]).name);
  return acc;
}

/// Mixed-radix parent configuration number; the first parent varies fastest.
inline std::size_t config_index(const CausalGraph& g, std::size_t attr,
                                const AttributeVector& values) {
  std::size_t idx = 0, stride = 1;
  for (std::size_t p : g.parents_of(attr)) {
    const AttributeSpec& ps = g.spec(p);
    const std::size_t card =
        ps.kind == AttributeKind::Categorical ? static_cast<std::size_t>(ps.cardinality) : 2;
    idx += static_cast<std::size_t>(values.at(ps.name)) * stride;
    stride *= card;
  }
  return idx;
}

inline std::size_t config_count(const CausalGraph& g, std::size_t attr) {
  std::size_t n = 1;
  for (std::size_t p : g.parents_of(attr)) {
    const AttributeSpec& ps = g.spec(p);
    n *= ps.kind == AttributeKind::Categorical ? static_cast<std::size_t>(ps.cardinality) : 2;
  }
  return n;
}

/// Counterfactual value of a linear-Gaussian attribute. When the supplied
/// noise is exactly the abduction residual of the observed row, the update is
/// applied as a delta on the observed child value; unchanged parents then
/// reproduce the observation bit for bit instead of reintroducing rounding.
inline double eval_linear_cf(double child_obs, double lin_obs, double lin_cf,
                             double eps) {
  if (child_obs - lin_obs == eps) return clip01(child_obs + (lin_cf - lin_obs));
  return clip01(lin_cf + eps);
}

/// Counterfactual class of a probability-integral equation.
inline double eval_cpt(double p, double u) { return u <= p ? 1.0 : 0.0; }

inline double eval_categorical(const std::vector<double>& probs, double u) {
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return static_cast<double>(k);
  }
  return static_cast<double>(probs.size() - 1);
}

inline void check_conforms(const CausalGraph& g, const AttributeVector& a,
                           const char* what) {
  for (const auto& [name, value] : a) {
    if (!g.has(name))
      throw UnknownAttributeError(std::string(what) + " names unknown attribute '" + name + "'");
    const AttributeSpec& spec = g.spec(g.index_of(name));
    switch (spec.kind) {
      case AttributeKind::Continuous:
        if (!(value >= 0.0 && value <= 1.0))
          throw OutOfRangeError(std::string(what) + " '" + name + "' outside [0, 1]");
        break;
      case AttributeKind::Binary:
        if (value != 0.0 && value != 1.0)
          throw OutOfRangeError(std::string(what) + " '" + name + "' must be 0 or 1");
        break;
      case AttributeKind::Categorical:
        if (value != std::floor(value) || value < 0.0 || value >= spec.cardinality)
          throw OutOfRangeError(std::string(what) + " '" + name + "' must be a class index");
        break;
    }
  }
  for (const AttributeSpec& spec : g.attributes())
    if (a.find(spec.name) == a.end())
      throw UnknownAttributeError(std::string(what) + " is missing attribute '" + spec.name + "'");
}

}  // namespace detail

inline void validate_model(const StructuralModel& m) {
  if (m.equations.size() != m.graph.size())
    throw ConfigError("model has " + std::to_string(m.equations.size()) +
                      " equations for " + std::to_string(m.graph.size()) + " attributes");
  for (std::size_t i = 0; i < m.graph.size(); ++i) {
    const AttributeSpec& spec = m.graph.spec(i);
    const Equation& eq = m.equations[i];
    switch (eq.kind) {
      case EquationKind::LinearGaussian:
        if (spec.kind != AttributeKind::Continuous)
          throw ConfigError("'" + spec.name + "' is not continuous");
        if (eq.coeffs.size() != m.graph.parents_of(i).size())
          throw ConfigError("'" + spec.name + "' has wrong coefficient count");
        if (!(eq.sigma > 0.0))
          throw ConfigError("'" + spec.name + "' needs noise_std > 0");
        break;
      case EquationKind::Cpt: {
        if (spec.kind != AttributeKind::Binary)
          throw ConfigError("'" + spec.name + "' is not binary");
        if (eq.table.size() != detail::config_count(m.graph, i))
          throw ConfigError("'" + spec.name + "' has wrong CPT size");
        for (double p : eq.table)
          if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("'" + spec.name + "' has CPT entry outside [0, 1]");
        break;
      }
      case EquationKind::CategoricalRoot: {
        if (spec.kind != AttributeKind::Categorical)
          throw ConfigError("'" + spec.name + "' is not categorical");
        if (eq.probs.size() != static_cast<std::size_t>(spec.cardinality))
          throw ConfigError("'" + spec.name + "' has wrong class count");
        double sum = 0.0;
        for (double p : eq.probs) {
          if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("'" + spec.name + "' has class probability outside [0, 1]");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw ConfigError("'" + spec.name + "' class probabilities sum to " + std::to_string(sum));
        break;
      }
      case EquationKind::UniformRoot:
        if (spec.kind != AttributeKind::Continuous)
          throw ConfigError("'" + spec.name + "' is not continuous");
        if (!m.graph.parents_of(i).empty())
          throw ConfigError("'" + spec.name + "' has parents but a uniform root equation");
        break;
    }
  }
}

// ─── Fitting ─────────────────────────────────────────────────────────────────

struct FitConfig {
  double laplace_alpha = 1.0;  // additive smoothing for CPT and class counts
};

/// Maximum-likelihood fit of one equation per attribute: smoothed frequency
/// tables for binary and categorical attributes, ordinary least squares with a
/// residual noise estimate for continuous ones.
inline StructuralModel fit_scm(const CausalGraph& graph,
                               const std::vector<AttributeVector>& rows,
                               const FitConfig& config = {}) {
  if (rows.empty()) throw EmptyInputError("fit_scm needs at least one row");
  if (config.laplace_alpha < 0.0) throw ConfigError("laplace_alpha must be >= 0");
  for (const AttributeVector& row : rows) detail::check_conforms(graph, row, "row");

  StructuralModel model;
  model.graph = graph;
  model.equations.resize(graph.size());
  const double alpha = config.laplace_alpha;
  const double n = static_cast<double>(rows.size());

  for (std::size_t i = 0; i < graph.size(); ++i) {
    const AttributeSpec& spec = graph.spec(i);
    Equation& eq = model.equations[i];

    if (spec.kind == AttributeKind::Binary) {
      eq.kind = EquationKind::Cpt;
      const std::size_t configs = detail::config_count(graph, i);
      std::vector<double> ones(configs, 0.0), total(configs, 0.0);
      for (const AttributeVector& row : rows) {
        const std::size_t c = detail::config_index(graph, i, row);
        total[c] += 1.0;
        ones[c] += row.at(spec.name);
      }
      eq.table.resize(configs);
      for (std::size_t c = 0; c < configs; ++c) {
        if (total[c] == 0.0 && alpha == 0.0)
          throw EmptyConfigurationError("'" + spec.name + "' has no rows for parent configuration " +
                                        std::to_string(c));
        eq.table[c] = (ones[c] + alpha) / (total[c] + 2.0 * alpha);
      }
    } else if (spec.kind == AttributeKind::Categorical) {
      eq.kind = EquationKind::CategoricalRoot;
      const std::size_t k = static_cast<std::size_t>(spec.cardinality);
      std::vector<double> counts(k, 0.0);
      for (const AttributeVector& row : rows)
        counts[static_cast<std::size_t>(row.at(spec.name))] += 1.0;
      eq.probs.resize(k);
      for (std::size_t c = 0; c < k; ++c)
        eq.probs[c] = (counts[c] + alpha) / (n + static_cast<double>(k) * alpha);
    } else {
      // Ordinary least squares on (1, parents) via the normal equations.
      eq.kind = EquationKind::LinearGaussian;
      const auto& par = graph.parents_of(i);
      const std::size_t p = par.size() + 1;
      std::vector<double> xtx(p * p, 0.0), xty(p, 0.0), x(p);
      for (const AttributeVector& row : rows) {
        x[0] = 1.0;
        for (std::size_t j = 0; j < par.size(); ++j)
          x[j + 1] = row.at(graph.spec(par[j]).name);
        const double y = row.at(spec.name);
        for (std::size_t r = 0; r < p; ++r) {
          xty[r] += x[r] * y;
          for (std::size_t c = 0; c < p; ++c) xtx[r * p + c] += x[r] * x[c];
        }
      }
      // Gaussian elimination with partial pivoting; a pivot below the relative
      // threshold means collinear or constant regressors.
      double scale_ref = 0.0;
      for (std::size_t r = 0; r < p; ++r)
        scale_ref = std::max(scale_ref, std::abs(xtx[r * p + r]));
      std::vector<double> beta = xty;
      std::vector<double> a = xtx;
      for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
          if (std::abs(a[r * p + col]) > std::abs(a[piv * p + col])) piv = r;
        if (std::abs(a[piv * p + col]) <= 1e-10 * scale_ref)
          throw SingularDesignError("'" + spec.name + "' has a rank-deficient design matrix");
        if (piv != col) {
          for (std::size_t c = 0; c < p; ++c) std::swap(a[piv * p + c], a[col * p + c]);
          std::swap(beta[piv], beta[col]);
        }
        for (std::size_t r = 0; r < p; ++r) {
          if (r == col) continue;
          const double f = a[r * p + col] / a[col * p + col];
          for (std::size_t c = col; c < p; ++c) a[r * p + c] -= f * a[col * p + c];
          beta[r] -= f * beta[col];
        }
      }
      for (std::size_t r = 0; r < p; ++r) beta[r] /= a[r * p + r];

      eq.intercept = beta[0];
      eq.coeffs.assign(beta.begin() + 1, beta.end());
      double ss = 0.0;
      for (const AttributeVector& row : rows) {
        double pred = eq.intercept;
        for (std::size_t j = 0; j < par.size(); ++j)
          pred += eq.coeffs[j] * row.at(graph.spec(par[j]).name);
        const double r = row.at(spec.name) - pred;
        ss += r * r;
      }
      // Biased (1/n) estimate; floored so a perfectly linear fit still yields
      // a valid equation.
      eq.sigma = std::max(std::sqrt(ss / n), 1e-12);
    }
  }
  return model;
}

// ─── Simulation ──────────────────────────────────────────────────────────────

struct SimulatedData {
  std::vector<AttributeVector> rows;
  std::vector<NoiseVector> noise;  // the exogenous draws behind each row
};

/// Draws n rows in topological order, storing the noise that produced each.
inline SimulatedData simulate(const StructuralModel& model, std::size_t n, Rng& rng) {
  validate_model(model);
  SimulatedData out;
  out.rows.resize(n);
  out.noise.resize(n);
  const CausalGraph& g = model.graph;
  for (std::size_t r = 0; r < n; ++r) {
    AttributeVector& row = out.rows[r];
    NoiseVector& noise = out.noise[r];
    for (std::size_t i : g.topo_order()) {
      const AttributeSpec& spec = g.spec(i);
      const Equation& eq = model.equations[i];
      switch (eq.kind) {
        case EquationKind::LinearGaussian: {
          const double eps = eq.sigma * rng.normal();
          row[spec.name] = detail::clip01(detail::linear_form(eq, g, i, row) + eps);
          noise[spec.name] = eps;
          break;
        }
        case EquationKind::Cpt: {
          const double u = rng.uniform();
          row[spec.name] = detail::eval_cpt(eq.table[detail::config_index(g, i, row)], u);
          noise[spec.name] = u;
          break;
        }
        case EquationKind::CategoricalRoot: {
          const double u = rng.uniform();
          row[spec.name] = detail::eval_categorical(eq.probs, u);
          noise[spec.name] = u;
          break;
        }
        case EquationKind::UniformRoot: {
          const double u = rng.uniform();
          row[spec.name] = u;
          noise[spec.name] = u;
          break;
        }
      }
    }
  }
  return out;
}

// ─── Abduction ───────────────────────────────────────────────────────────────

/// Recovers exogenous noise that reproduces the observed row: the linear
/// residual for linear-Gaussian attributes (clipping ignored), and the
/// midpoint of the matching probability interval for the discrete forms.
inline NoiseVector abduct_noise(const StructuralModel& model, const AttributeVector& a) {
  validate_model(model);
  detail::check_conforms(model.graph, a, "observation");
  NoiseVector noise;
  const CausalGraph& g = model.graph;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const AttributeSpec& spec = g.spec(i);
    const Equation& eq = model.equations[i];
    const double value = a.at(spec.name);
    switch (eq.kind) {
      case EquationKind::LinearGaussian:
        noise[spec.name] = value - detail::linear_form(eq, g, i, a);
        break;
      case EquationKind::Cpt: {
        const double p = eq.table[detail::config_index(g, i, a)];
        noise[spec.name] = value == 1.0 ? p / 2.0 : (1.0 + p) / 2.0;
        break;
      }
      case EquationKind::CategoricalRoot: {
        double lo = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(value); ++k) lo += eq.probs[k];
        noise[spec.name] = lo + eq.probs[static_cast<std::size_t>(value)] / 2.0;
        break;
      }
      case EquationKind::UniformRoot:
        noise[spec.name] = value;
        break;
    }
  }
  return noise;
}

// ─── Counterfactual prediction ───────────────────────────────────────────────

namespace detail {

inline double eval_counterfactual(const StructuralModel& model, std::size_t i,
                                  const AttributeVector& observed,
                                  const AttributeVector& current,
                                  const NoiseVector& noise) {
  const CausalGraph& g = model.graph;
  const AttributeSpec& spec = g.spec(i);
  const Equation& eq = model.equations[i];
  const double u = noise.at(spec.name);
  switch (eq.kind) {
    case EquationKind::LinearGaussian:
      return eval_linear_cf(observed.at(spec.name),
                            linear_form(eq, g, i, observed),
                            linear_form(eq, g, i, current), u);
    case EquationKind::Cpt:
      return eval_cpt(eq.table[config_index(g, i, current)], u);
    case EquationKind::CategoricalRoot:
      return eval_categorical(eq.probs, u);
    case EquationKind::UniformRoot:
      return u;
  }
  return 0.0;
}

inline void check_targets(const CausalGraph& g, const AttributeVector& targets) {
  if (targets.empty()) return;
  AttributeVector probe;
  for (const auto& [name, value] : targets) {
    if (!g.has(name))
      throw UnknownAttributeError("intervention names unknown attribute '" + name + "'");
    probe[name] = value;
  }
  // Reuse the kind checks without requiring a full vector.
  for (const auto& [name, value] : probe) {
    const AttributeSpec& spec = g.spec(g.index_of(name));
    switch (spec.kind) {
      case AttributeKind::Continuous:
        if (!(value >= 0.0 && value <= 1.0))
          throw OutOfRangeError("intervention '" + name + "' outside [0, 1]");
        break;
      case AttributeKind::Binary:
        if (value != 0.0 && value != 1.0)
          throw OutOfRangeError("intervention '" + name + "' must be 0 or 1");
        break;
      case AttributeKind::Categorical:
        if (value != std::floor(value) || value < 0.0 || value >= spec.cardinality)
          throw OutOfRangeError("intervention '" + name + "' must be a class index");
        break;
    }
  }
}

}  // namespace detail

/// Intervention followed by gated propagation. Target attributes take their
/// new values; a descendant is recomputed, with the supplied noise, only once
/// every parent of it that is itself a descendant has been recomputed, so each
/// affected attribute is evaluated exactly once even through diamonds.
/// Attributes outside targets and their descendants are returned unchanged.
inline AttributeVector predict_attributes(const StructuralModel& model,
                                          const AttributeVector& a,
                                          const AttributeVector& targets,
                                          const NoiseVector& noise) {
  validate_model(model);
  const CausalGraph& g = model.graph;
  detail::check_conforms(g, a, "observation");
  detail::check_targets(g, targets);

  AttributeVector out = a;
  if (targets.empty()) return out;

  std::vector<std::string> target_names;
  std::set<std::size_t> target_idx;
  for (const auto& [name, value] : targets) {
    target_names.push_back(name);
    target_idx.insert(g.index_of(name));
    out[name] = value;
  }
  const std::set<std::size_t> affected = descendants(g, target_names);

  std::vector<bool> changed(g.size(), false);
  for (std::size_t t : target_idx) changed[t] = true;

  std::vector<std::size_t> frontier;
  for (std::size_t t : target_idx)
    for (std::size_t c : g.children_of(t)) frontier.push_back(c);

  std::size_t head = 0;
  while (head < frontier.size()) {
    const std::size_t j = frontier[head++];
    if (changed[j] || target_idx.count(j)) continue;
    bool pending_parent = false;
    for (std::size_t p : g.parents_of(j)) {
      if (affected.count(p) && !changed[p]) {
        pending_parent = true;
        break;
      }
    }
    if (pending_parent) continue;  // re-enqueued when that parent changes
    out[g.spec(j).name] = detail::eval_counterfactual(model, j, a, out, noise);
    changed[j] = true;
    for (std::size_t c : g.children_of(j)) frontier.push_back(c);
  }
  return out;
}

/// Reference implementation of the same counterfactual: cut the arrows into
/// the targets, then re-evaluate every equation in topological order with the
/// supplied noise. No frontier, no gating; kept deliberately plain as a
/// cross-check for predict_attributes.
inline AttributeVector oracle_counterfactual(const StructuralModel& model,
                                             const AttributeVector& a,
                                             const AttributeVector& targets,
                                             const NoiseVector& noise) {
  validate_model(model);
  const CausalGraph& g = model.graph;
  detail::check_conforms(g, a, "observation");
  detail::check_targets(g, targets);
  if (targets.empty()) return a;

  std::vector<std::string> target_names;
  for (const auto& [name, value] : targets) target_names.push_back(name);
  const CausalGraph cut = mutilate(g, target_names);

  AttributeVector out;
  for (std::size_t i : cut.topo_order()) {
    const std::string& name = cut.spec(i).name;
    auto t = targets.find(name);
    if (t != targets.end()) {
      out[name] = t->second;
      continue;
    }
    // Parent sets of non-target attributes are identical in both graphs, so
    // the original model's equations evaluate unchanged.
    out[name] = detail::eval_counterfactual(model, g.index_of(name), a, out, noise);
  }
  return out;
}

// ─── Model serialization ─────────────────────────────────────────────────────

inline nlohmann::ordered_json model_to_json(const StructuralModel& model) {
  validate_model(model);
  nlohmann::ordered_json out;
  out["version"] = "scm-1";
  out["graph"] = graph_to_json(model.graph);
  nlohmann::ordered_json eqs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < model.graph.size(); ++i) {
    const Equation& eq = model.equations[i];
    nlohmann::ordered_json j;
    j["name"] = model.graph.spec(i).name;
    switch (eq.kind) {
      case EquationKind::LinearGaussian:
        j["type"] = "linear_gaussian";
        j["intercept"] = eq.intercept;
        j["coefficients"] = eq.coeffs;
        j["noise_std"] = eq.sigma;
        break;
      case EquationKind::Cpt:
        j["type"] = "cpt";
        j["table"] = eq.table;
        break;
      case EquationKind::CategoricalRoot:
        j["type"] = "categorical_root";
        j["probs"] = eq.probs;
        break;
      case EquationKind::UniformRoot:
        j["type"] = "uniform_root";
        break;
    }
    eqs.push_back(std::move(j));
  }
  out["equations"] = std::move(eqs);
  return out;
}

inline StructuralModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("version", "") != std::string("scm-1"))
    throw FormatError("model file must declare version scm-1");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "version" && it.key() != "graph" && it.key() != "equations")
      throw FormatError("model file has unknown field '" + it.key() + "'");
  if (!j.contains("graph") || !j.contains("equations"))
    throw FormatError("model file needs 'graph' and 'equations'");

  StructuralModel model;
  model.graph = graph_from_json(j["graph"]);
  if (!j["equations"].is_array() || j["equations"].size() != model.graph.size())
    throw FormatError("model file needs one equation per attribute");
  model.equations.resize(model.graph.size());
  for (const auto& je : j["equations"]) {
    if (!je.is_object() || !je.contains("name") || !je.contains("type"))
      throw FormatError("equation entry needs 'name' and 'type'");
    const std::string name = je["name"].get<std::string>();
    const std::string type = je["type"].get<std::string>();
    Equation eq;
    std::set<std::string> allowed = {"name", "type"};
    if (type == "linear_gaussian") {
      eq.kind = EquationKind::LinearGaussian;
      eq.intercept = je.at("intercept").get<double>();
      eq.coeffs = je.at("coefficients").get<std::vector<double>>();
      eq.sigma = je.at("noise_std").get<double>();
      allowed.insert({"intercept", "coefficients", "noise_std"});
    } else if (type == "cpt") {
      eq.kind = EquationKind::Cpt;
      eq.table = je.at("table").get<std::vector<double>>();
      allowed.insert("table");
    } else if (type == "categorical_root") {
      eq.kind = EquationKind::CategoricalRoot;
      eq.probs = je.at("probs").get<std::vector<double>>();
      allowed.insert("probs");
    } else if (type == "uniform_root") {
      eq.kind = EquationKind::UniformRoot;
    } else {
      throw FormatError("equation '" + name + "' has unknown type '" + type + "'");
    }
    for (auto it = je.begin(); it != je.end(); ++it)
      if (!allowed.count(it.key()))
        throw FormatError("equation '" + name + "' has unknown field '" + it.key() + "'");
    model.equations[model.graph.index_of(name)] = std::move(eq);
  }
  validate_model(model);
  return model;
}

}  // namespace cfglyph
