#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/codec.hpp"
#include "cfglyph/dataset.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/io.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Counterfactual engine ───────────────────────────────────────────────────
//
// Ties the pieces together: abduct the attribute noise, intervene, propagate,
// then decode the unchanged latent under the counterfactual attributes. Each
// result carries the factual reconstruction alongside the counterfactual so
// downstream comparisons never mix a generated image with a real one.

struct InterventionSpec {
  AttributeVector targets;  // attribute name -> new value, raw units
  std::string label;        // empty = derived from targets

  std::string display() const {
    if (!label.empty()) return label;
    std::string out = "do(";
    bool first = true;
    for (const auto& [name, value] : targets) {
      out += (first ? "" : ",") + name + "=" + fmt_double(value);
      first = false;
    }
    return out + ")";
  }
};

struct CfPair {
  std::size_t row = 0;
  bool skipped = false;          // intervention was redundant for this row
  InterventionSpec intervention;
  AttributeVector a, a_c;        // model units
  Image x_r, x_c;                // reconstruction and counterfactual
};

/// Continuous targets this close to the observed raw value count as already
/// satisfied; discrete targets must match exactly.
inline constexpr double kRedundancyTolerance = 1e-9;

/// True when every target is already satisfied by the observed raw row, so
/// the intervention cannot move any attribute.
inline bool intervention_redundant(const CausalGraph& graph, const AttributeVector& raw_row,
                                   const AttributeVector& targets_raw) {
  for (const auto& [name, target] : targets_raw) {
    const AttributeSpec& spec = graph.spec(graph.index_of(name));
    const double observed = raw_row.at(name);
    if (spec.kind == AttributeKind::Continuous) {
      if (std::abs(target - observed) > kRedundancyTolerance) return false;
    } else {
      if (target != observed) return false;
    }
  }
  return true;
}

namespace detail {

inline AttributeVector scale_targets(const StructuralModel& model, const InterventionSpec& spec) {
  if (spec.targets.empty()) throw ConfigError("intervention has no targets");
  AttributeVector scaled;
  for (const auto& [name, raw] : spec.targets)
    scaled[name] = scale(model.graph.spec(model.graph.index_of(name)), raw);
  return scaled;
}

}  // namespace detail

/// Full abduction/intervention/prediction pass for one image.
inline CfPair counterfactual(const Codec& codec, const StructuralModel& model,
                             const Image& x, const AttributeVector& a,
                             const InterventionSpec& spec) {
  const AttributeVector targets_scaled = detail::scale_targets(model, spec);
  const NoiseVector noise = abduct_noise(model, a);
  CfPair pair;
  pair.intervention = spec;
  pair.a = a;
  pair.a_c = predict_attributes(model, a, targets_scaled, noise);

  const std::vector<double> z = codec.encode(x, a);
  pair.x_r = codec.decode(z, a);
  pair.x_c = codec.decode(z, pair.a_c);
  return pair;
}

/// Counterfactuals of every intervention on every dataset row, ordered row
/// by row with the specs cycling fastest. With filter_redundant set, pairs
/// whose raw targets the row already satisfies keep their attribute vectors
/// but are flagged and their images are not generated.
inline std::vector<CfPair> cf_batch(const Codec& codec, const StructuralModel& model,
                                    const DatasetContainer& data,
                                    const std::vector<InterventionSpec>& specs,
                                    bool filter_redundant = false) {
  if (data.size() == 0) throw EmptyInputError("cf_batch needs a non-empty dataset");
  if (specs.empty()) throw ConfigError("cf_batch needs at least one intervention");
  std::vector<AttributeVector> targets_scaled;
  targets_scaled.reserve(specs.size());
  for (const InterventionSpec& spec : specs)
    targets_scaled.push_back(detail::scale_targets(model, spec));

  std::vector<CfPair> out;
  out.reserve(data.size() * specs.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const AttributeVector a = data.scaled_row(r);
    const NoiseVector noise = abduct_noise(model, a);
    // The encoding and the reconstruction are per-row work; rows whose every
    // intervention is redundant never touch the codec.
    bool encoded = false;
    std::vector<double> z;
    Image x_r;
    for (std::size_t si = 0; si < specs.size(); ++si) {
      CfPair pair;
      pair.row = r;
      pair.intervention = specs[si];
      pair.a = a;
      pair.a_c = predict_attributes(model, a, targets_scaled[si], noise);
      if (filter_redundant &&
          intervention_redundant(model.graph, data.attrs_raw[r], specs[si].targets)) {
        pair.skipped = true;
      } else {
        if (!encoded) {
          z = codec.encode(data.images[r], a);
          x_r = codec.decode(z, a);
          encoded = true;
        }
        pair.x_r = x_r;
        pair.x_c = codec.decode(z, pair.a_c);
      }
      out.push_back(std::move(pair));
    }
  }
  return out;
}

inline std::vector<CfPair> cf_batch(const Codec& codec, const StructuralModel& model,
                                    const DatasetContainer& data, const InterventionSpec& spec,
                                    bool filter_redundant = false) {
  return cf_batch(codec, model, data, std::vector<InterventionSpec>{spec}, filter_redundant);
}

// ─── Pair persistence ────────────────────────────────────────────────────────
//
// A pair set on disk is a manifest of (row, intervention label, skipped)
// entries plus two float32 image files holding the non-skipped entries in
// manifest order. Attribute vectors are not stored; audits and mitigation
// work on the images alone.

inline void write_pairs(const std::filesystem::path& dir, const std::vector<CfPair>& pairs) {
  if (pairs.empty()) throw EmptyInputError("no pairs to write");
  std::filesystem::create_directories(dir);
  int width = 0, height = 0;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  std::string xr, xc;
  for (const CfPair& pair : pairs) {
    nlohmann::ordered_json entry;
    entry["row"] = pair.row;
    entry["label"] = pair.intervention.display();
    entry["skipped"] = pair.skipped;
    entries.push_back(std::move(entry));
    if (pair.skipped) continue;
    if (width == 0) {
      width = pair.x_r.width;
      height = pair.x_r.height;
    }
    if (pair.x_r.width != width || pair.x_c.width != width || pair.x_r.height != height ||
        pair.x_c.height != height)
      throw DimensionError("pair images differ in size");
    xr += f32_bytes(pair.x_r.pixels);
    xc += f32_bytes(pair.x_c.pixels);
  }
  nlohmann::ordered_json manifest;
  manifest["version"] = "pairs-1";
  manifest["width"] = width;
  manifest["height"] = height;
  manifest["entries"] = std::move(entries);
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
  atomic_write(dir / "base.f32", xr);
  atomic_write(dir / "counterfactual.f32", xc);
}

struct StoredPairs {
  std::string intervention;   // label of the first entry; the cf driver
                              // writes one intervention per directory
  std::vector<CfPair> pairs;  // skipped entries carry no images
};

inline StoredPairs read_pairs(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  if (manifest.value("version", "") != std::string("pairs-1"))
    throw FormatError("pair manifest must declare version pairs-1");
  const int width = manifest.at("width").get<int>();
  const int height = manifest.at("height").get<int>();
  const auto& entries = manifest.at("entries");

  std::size_t stored = 0;
  for (const auto& entry : entries) stored += entry.at("skipped").get<bool>() ? 0 : 1;
  const std::vector<double> xr = f32_values(read_file(dir / "base.f32"));
  const std::vector<double> xc = f32_values(read_file(dir / "counterfactual.f32"));
  const std::size_t per_image = static_cast<std::size_t>(width) * height;
  if (xr.size() != stored * per_image || xc.size() != stored * per_image)
    throw FormatError("pair image files do not match the manifest entry count");

  StoredPairs out;
  std::size_t i = 0;
  for (const auto& entry : entries) {
    CfPair pair;
    pair.row = entry.at("row").get<std::size_t>();
    pair.intervention.label = entry.at("label").get<std::string>();
    pair.skipped = entry.at("skipped").get<bool>();
    if (!pair.skipped) {
      pair.x_r = Image(width, height);
      pair.x_c = Image(width, height);
      std::copy(xr.begin() + i * per_image, xr.begin() + (i + 1) * per_image,
                pair.x_r.pixels.begin());
      std::copy(xc.begin() + i * per_image, xc.begin() + (i + 1) * per_image,
                pair.x_c.pixels.begin());
      ++i;
    }
    out.pairs.push_back(std::move(pair));
  }
  if (!out.pairs.empty()) out.intervention = out.pairs.front().intervention.label;
  return out;
}

// ─── Target-versus-measured sweep ────────────────────────────────────────────

struct SweepPoint {
  std::size_t row = 0;
  double target = 0.0;    // raw units
  double measured = 0.0;  // raw units, from the counterfactual image
};

struct SweepResult {
  std::string attribute;
  std::vector<SweepPoint> points;
  double median_abs_error = 0.0;
  // Same sweep through the ground-truth renderer instead of the codec;
  // filled only when the dataset stores true latents. The gap between the two
  // medians is the codec's own contribution to the error.
  bool has_reference = false;
  double reference_median_abs_error = 0.0;
  std::size_t blank_images = 0;
};

namespace detail {

inline double measured_field(const Measurement& m, const std::string& attribute) {
  if (attribute == "t") return m.thickness;
  if (attribute == "i") return m.intensity;
  if (attribute == "s") return m.slant;
  throw ConfigError("attribute '" + attribute + "' has no pixel measurement");
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw EmptyInputError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Sets one attribute to each target value on each row, measures the
/// counterfactual image, and reports the median absolute gap between target
/// and measurement. Blank counterfactual images are counted and excluded.
inline SweepResult cf_measurement_sweep(const Codec& codec, const StructuralModel& model,
                                        const DatasetContainer& data,
                                        const std::string& attribute,
                                        const std::vector<double>& targets_raw,
                                        const RenderParams& params,
                                        bool with_reference = false) {
  if (data.size() == 0) throw EmptyInputError("sweep needs a non-empty dataset");
  if (targets_raw.empty()) throw EmptyInputError("sweep needs at least one target");
  const AttributeSpec& aspec = model.graph.spec(model.graph.index_of(attribute));
  if (aspec.kind != AttributeKind::Continuous)
    throw ConfigError("sweep attribute '" + attribute + "' must be continuous");

  SweepResult result;
  result.attribute = attribute;
  result.has_reference = with_reference && !data.latents.empty();
  std::vector<double> errors, ref_errors;

  for (std::size_t r = 0; r < data.size(); ++r) {
    const AttributeVector a = data.scaled_row(r);
    const NoiseVector noise = abduct_noise(model, a);
    const std::vector<double> z = codec.encode(data.images[r], a);
    for (double target : targets_raw) {
      AttributeVector targets_scaled;
      targets_scaled[attribute] = scale(aspec, target);
      const AttributeVector a_c = predict_attributes(model, a, targets_scaled, noise);
      const Image x_c = codec.decode(z, a_c);
      try {
        const Measurement m = measure(x_c, params);
        SweepPoint point;
        point.row = r;
        point.target = target;
        point.measured = detail::measured_field(m, attribute);
        errors.push_back(std::abs(point.measured - point.target));
        result.points.push_back(point);
      } catch (const BlankImageError&) {
        ++result.blank_images;
        continue;
      }
      if (result.has_reference) {
        AttributeVector raw;
        for (const AttributeSpec& spec : model.graph.attributes())
          raw[spec.name] = unscale(spec, a_c.at(spec.name));
        const Measurement ref = measure(render(raw, data.latents[r], params), params);
        ref_errors.push_back(std::abs(detail::measured_field(ref, attribute) - target));
      }
    }
  }
  if (errors.empty()) throw EmptyInputError("every sweep image came back blank");
  result.median_abs_error = detail::median(errors);
  if (result.has_reference) result.reference_median_abs_error = detail::median(ref_errors);
  return result;
}

}  // namespace cfglyph
