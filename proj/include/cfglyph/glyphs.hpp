#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cfglyph/classifier.hpp"
#include "cfglyph/dataset.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/graph.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/rng.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Glyph domain defaults ───────────────────────────────────────────────────
//
// The synthetic corpus everything is validated on. Thickness drives
// intensity through the ground-truth model (heavier strokes are inked
// darker); slant and shape are free. The t→i edge is what separates a
// counterfactual audit from a pixel-space one: changing intensity by
// intervention leaves thickness alone, while the generating process never
// does the reverse.

inline CausalGraph default_graph() {
  return build_graph({
      AttributeSpec::continuous("t", 1.0, 5.0),
      AttributeSpec::continuous("i", 0.3, 1.0, {"t"}),
      AttributeSpec::continuous("s", -1.0, 1.0),
      AttributeSpec::categorical("l", 4),
  });
}

/// The model the corpus is actually drawn from. Fitted models are compared
/// against these coefficients.
inline StructuralModel ground_truth_scm() {
  StructuralModel model;
  model.graph = default_graph();
  model.equations.resize(4);
  model.equations[model.graph.index_of("t")] = Equation::uniform_root();
  // Scaled units: heavier strokes carry most of the intensity signal.
  model.equations[model.graph.index_of("i")] = Equation::linear_gaussian(0.25, {0.60}, 0.05);
  model.equations[model.graph.index_of("s")] = Equation::uniform_root();
  // Symmetric shapes dominate so the slant measurement, whose moment formula
  // carries an inherent offset on the diagonal and L skeletons, keeps a
  // stable error median over the corpus.
  model.equations[model.graph.index_of("l")] = Equation::categorical_root({0.40, 0.10, 0.40, 0.10});
  return model;
}

struct GenConfig {
  std::size_t n = 1000;
  unsigned long long seed = 1;
  RenderParams params;
  LabelRule rule;
};

/// Simulates attributes, renders each row with a fresh latent, and assigns
/// labels. The container keeps the true latents, so an oracle codec can be
/// built from it.
inline DatasetContainer generate_dataset(const GenConfig& config) {
  if (config.n == 0) throw ConfigError("dataset size must be >= 1");
  const StructuralModel model = ground_truth_scm();
  validate_model(model);

  Rng master(config.seed);
  Rng sim_rng = master.fork(1), latent_rng = master.fork(2), label_rng = master.fork(3);

  DatasetContainer data;
  data.graph = model.graph;
  data.width = config.params.width;
  data.height = config.params.height;
  data.seed = config.seed;
  data.latent_dim = config.params.latent_dim;

  const SimulatedData sim = simulate(model, config.n, sim_rng);
  data.attrs_raw.reserve(config.n);
  for (const AttributeVector& row : sim.rows) {
    AttributeVector raw;
    for (const AttributeSpec& spec : model.graph.attributes())
      raw[spec.name] = unscale(spec, row.at(spec.name));
    data.attrs_raw.push_back(std::move(raw));
  }
  data.latents.reserve(config.n);
  data.images.reserve(config.n);
  for (std::size_t r = 0; r < config.n; ++r) {
    data.latents.push_back(latent_rng.normals(config.params.latent_dim));
    data.images.push_back(render(data.attrs_raw[r], data.latents[r], config.params));
  }
  data.targets = assign_labels(config.rule, model.graph, data.attrs_raw, label_rng);
  return data;
}

/// Renders a corpus whose attributes are drawn uniformly and independently
/// over their raw ranges, ignoring the causal couplings. Codec training data:
/// the conditioning input then covers every attribute combination, including
/// ones the observational distribution visits only in its tails. No labels.
inline DatasetContainer uniform_attribute_dataset(std::size_t n, unsigned long long seed,
                                                  const RenderParams& params = {}) {
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  DatasetContainer data;
  data.graph = default_graph();
  data.width = params.width;
  data.height = params.height;
  data.seed = seed;
  data.latent_dim = params.latent_dim;

  Rng master(seed);
  Rng attr_rng = master.fork(1), latent_rng = master.fork(2);
  data.attrs_raw.reserve(n);
  data.latents.reserve(n);
  data.images.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    AttributeVector raw;
    for (const AttributeSpec& spec : data.graph.attributes()) {
      if (spec.kind == AttributeKind::Categorical) {
        raw[spec.name] = static_cast<double>(attr_rng.below(static_cast<std::uint64_t>(spec.cardinality)));
      } else if (spec.kind == AttributeKind::Binary) {
        raw[spec.name] = static_cast<double>(attr_rng.below(2));
      } else {
        raw[spec.name] = spec.raw_lo + (spec.raw_hi - spec.raw_lo) * attr_rng.uniform();
      }
    }
    data.attrs_raw.push_back(std::move(raw));
    data.latents.push_back(latent_rng.normals(params.latent_dim));
    data.images.push_back(render(data.attrs_raw[r], data.latents[r], params));
  }
  return data;
}

}  // namespace cfglyph
