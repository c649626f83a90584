#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/errors.hpp"

namespace cfglyph {

// ─── Attribute graph ─────────────────────────────────────────────────────────
//
// A causal graph over named image attributes. Attribute order is declaration
// order and is load-bearing: topological sorts break ties by it, and every
// downstream iteration (fitting, simulation, encoding) walks it, which is what
// makes seeded runs reproducible.

enum class AttributeKind { Binary, Continuous, Categorical };

inline const char* kind_name(AttributeKind k) {
  switch (k) {
    case AttributeKind::Binary: return "binary";
    case AttributeKind::Continuous: return "continuous";
    case AttributeKind::Categorical: return "categorical";
  }
  return "?";
}

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::Binary;
  double raw_lo = 0.0;           // continuous only, raw_lo < raw_hi
  double raw_hi = 1.0;
  int cardinality = 0;           // categorical only, >= 2
  std::vector<std::string> parents;

  static AttributeSpec binary(std::string n, std::vector<std::string> par = {}) {
    AttributeSpec s;
    s.name = std::move(n);
    s.kind = AttributeKind::Binary;
    s.parents = std::move(par);
    return s;
  }
  static AttributeSpec continuous(std::string n, double lo, double hi,
                                  std::vector<std::string> par = {}) {
    AttributeSpec s;
    s.name = std::move(n);
    s.kind = AttributeKind::Continuous;
    s.raw_lo = lo;
    s.raw_hi = hi;
    s.parents = std::move(par);
    return s;
  }
  static AttributeSpec categorical(std::string n, int k) {
    AttributeSpec s;
    s.name = std::move(n);
    s.kind = AttributeKind::Categorical;
    s.cardinality = k;
    return s;
  }
};

class CausalGraph {
public:
  const std::vector<AttributeSpec>& attributes() const { return attrs_; }
  std::size_t size() const { return attrs_.size(); }
  const AttributeSpec& spec(std::size_t i) const { return attrs_[i]; }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw UnknownAttributeError("no attribute named '" + name + "'");
    return it->second;
  }

  const std::vector<std::size_t>& parents_of(std::size_t i) const {
    return parent_idx_[i];
  }
  const std::vector<std::size_t>& children_of(std::size_t i) const {
    return child_idx_[i];
  }

  /// Indices in a valid evaluation order; ties broken by declaration order.
  const std::vector<std::size_t>& topo_order() const { return topo_; }

  friend CausalGraph build_graph(std::vector<AttributeSpec> attrs);

private:
  std::vector<AttributeSpec> attrs_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parent_idx_;
  std::vector<std::vector<std::size_t>> child_idx_;
  std::vector<std::size_t> topo_;
};

/// Validates the attribute list and wires up the graph. Rejects unknown or
/// duplicate parents, cycles (naming one edge on the cycle), categorical
/// attributes with parents, and parent kinds the equation forms cannot
/// handle (categorical under continuous, continuous under binary).
inline CausalGraph build_graph(std::vector<AttributeSpec> attrs) {
  CausalGraph g;
  g.attrs_ = std::move(attrs);
  const std::size_t n = g.attrs_.size();

  for (std::size_t i = 0; i < n; ++i) {
    const AttributeSpec& a = g.attrs_[i];
    if (a.name.empty()) throw ConfigError("attribute at position " + std::to_string(i) + " has an empty name");
    if (!g.index_.emplace(a.name, i).second)
      throw ConfigError("duplicate attribute name '" + a.name + "'");
    if (a.kind == AttributeKind::Continuous && !(a.raw_lo < a.raw_hi))
      throw ConfigError("attribute '" + a.name + "' needs raw_lo < raw_hi");
    if (a.kind == AttributeKind::Categorical && a.cardinality < 2)
      throw ConfigError("attribute '" + a.name + "' needs cardinality >= 2");
    if (a.kind == AttributeKind::Categorical && !a.parents.empty())
      throw ConfigError("categorical attribute '" + a.name + "' must be a root");
  }

  g.parent_idx_.resize(n);
  g.child_idx_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AttributeSpec& a = g.attrs_[i];
    std::set<std::string> seen;
    for (const std::string& p : a.parents) {
      auto it = g.index_.find(p);
      if (it == g.index_.end())
        throw UnknownParentError("attribute '" + a.name + "' lists unknown parent '" + p + "'");
      if (!seen.insert(p).second)
        throw ConfigError("attribute '" + a.name + "' lists parent '" + p + "' twice");
      if (it->second == i)
        throw CycleError("attribute '" + a.name + "' is its own parent");
      if (a.kind == AttributeKind::Continuous &&
          g.attrs_[it->second].kind == AttributeKind::Categorical)
        throw ConfigError("continuous attribute '" + a.name +
                          "' cannot have categorical parent '" + p + "'");
      if (a.kind == AttributeKind::Binary &&
          g.attrs_[it->second].kind == AttributeKind::Continuous)
        throw ConfigError("binary attribute '" + a.name +
                          "' cannot have continuous parent '" + p +
                          "' (its table needs discrete configurations)");
      g.parent_idx_[i].push_back(it->second);
      g.child_idx_[it->second].push_back(i);
    }
  }

  // Kahn's algorithm; the lowest-index ready node goes first so the order is a
  // pure function of the declaration.
  std::vector<std::size_t> indeg(n);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = g.parent_idx_[i].size();
  std::vector<bool> emitted(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!emitted[i] && indeg[i] == 0) {
        pick = i;
        break;
      }
    }
    if (pick == n) {
      // Some unemitted node closes a cycle; report one offending edge.
      for (std::size_t i = 0; i < n; ++i) {
        if (emitted[i]) continue;
        for (std::size_t p : g.parent_idx_[i]) {
          if (!emitted[p])
            throw CycleError("cycle through edge " + g.attrs_[p].name + " -> " +
                             g.attrs_[i].name);
        }
      }
      throw CycleError("cycle detected");
    }
    emitted[pick] = true;
    g.topo_.push_back(pick);
    for (std::size_t c : g.child_idx_[pick]) --indeg[c];
  }
  return g;
}

/// All strict descendants of the named attributes (the roots themselves are
/// excluded unless reachable from another listed root).
inline std::set<std::size_t> descendants(const CausalGraph& g,
                                         const std::vector<std::string>& roots) {
  std::set<std::size_t> out;
  std::vector<std::size_t> frontier;
  for (const std::string& r : roots) frontier.push_back(g.index_of(r));
  std::size_t head = 0;
  std::vector<bool> queued(g.size(), false);
  while (head < frontier.size()) {
    const std::size_t cur = frontier[head++];
    for (std::size_t c : g.children_of(cur)) {
      out.insert(c);
      if (!queued[c]) {
        queued[c] = true;
        frontier.push_back(c);
      }
    }
  }
  return out;
}

/// Copy of the graph with all arrows into the named attributes removed.
inline CausalGraph mutilate(const CausalGraph& g,
                            const std::vector<std::string>& targets) {
  std::set<std::size_t> cut;
  for (const std::string& t : targets) cut.insert(g.index_of(t));
  std::vector<AttributeSpec> attrs = g.attributes();
  for (std::size_t i : cut) attrs[i].parents.clear();
  return build_graph(std::move(attrs));
}

// ─── Schema serialization ────────────────────────────────────────────────────
//
// {"attributes": [{"name", "kind", "raw_range"?, "cardinality"?, "parents"}]}
// Unknown fields are rejected rather than ignored so schema typos fail loudly.

inline nlohmann::ordered_json graph_to_json(const CausalGraph& g) {
  nlohmann::ordered_json attrs = nlohmann::ordered_json::array();
  for (const AttributeSpec& a : g.attributes()) {
    nlohmann::ordered_json j;
    j["name"] = a.name;
    j["kind"] = kind_name(a.kind);
    if (a.kind == AttributeKind::Continuous)
      j["raw_range"] = {a.raw_lo, a.raw_hi};
    if (a.kind == AttributeKind::Categorical) j["cardinality"] = a.cardinality;
    j["parents"] = a.parents;
    attrs.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["attributes"] = std::move(attrs);
  return out;
}

inline CausalGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_array())
    throw FormatError("graph schema needs an 'attributes' array");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "attributes")
      throw FormatError("graph schema has unknown field '" + it.key() + "'");

  std::vector<AttributeSpec> attrs;
  for (const auto& ja : j["attributes"]) {
    if (!ja.is_object()) throw FormatError("attribute entry must be an object");
    AttributeSpec a;
    bool saw_range = false, saw_card = false;
    for (auto it = ja.begin(); it != ja.end(); ++it) {
      const std::string& key = it.key();
      if (key == "name") {
        a.name = it.value().get<std::string>();
      } else if (key == "kind") {
        const std::string k = it.value().get<std::string>();
        if (k == "binary") a.kind = AttributeKind::Binary;
        else if (k == "continuous") a.kind = AttributeKind::Continuous;
        else if (k == "categorical") a.kind = AttributeKind::Categorical;
        else throw FormatError("unknown attribute kind '" + k + "'");
      } else if (key == "raw_range") {
        if (!it.value().is_array() || it.value().size() != 2)
          throw FormatError("raw_range must be [lo, hi]");
        a.raw_lo = it.value()[0].get<double>();
        a.raw_hi = it.value()[1].get<double>();
        saw_range = true;
      } else if (key == "cardinality") {
        a.cardinality = it.value().get<int>();
        saw_card = true;
      } else if (key == "parents") {
        a.parents = it.value().get<std::vector<std::string>>();
      } else {
        throw FormatError("attribute entry has unknown field '" + key + "'");
      }
    }
    if (a.name.empty()) throw FormatError("attribute entry is missing 'name'");
    if (saw_range && a.kind != AttributeKind::Continuous)
      throw FormatError("raw_range is only valid on continuous attribute '" + a.name + "'");
    if (saw_card && a.kind != AttributeKind::Categorical)
      throw FormatError("cardinality is only valid on categorical attribute '" + a.name + "'");
    if (a.kind == AttributeKind::Continuous && !saw_range)
      throw FormatError("continuous attribute '" + a.name + "' is missing raw_range");
    if (a.kind == AttributeKind::Categorical && !saw_card)
      throw FormatError("categorical attribute '" + a.name + "' is missing cardinality");
    attrs.push_back(std::move(a));
  }
  return build_graph(std::move(attrs));
}

}  // namespace cfglyph
