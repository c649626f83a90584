#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfglyph/graph.hpp"
#include "cfglyph/io.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Dataset container ───────────────────────────────────────────────────────
//
// One dataset is a directory: a JSON manifest, raw little-endian float32
// images, an attribute CSV in raw units, optional per-row latent codes, and
// optional classifier targets. Attributes are held in raw units in memory too,
// so a write/read cycle of a loaded container is byte-identical; model-unit
// rows are derived on demand through the schema.

struct DatasetContainer {
  CausalGraph graph;
  int width = 28;
  int height = 28;
  std::uint64_t seed = 0;
  std::vector<Image> images;
  std::vector<AttributeVector> attrs_raw;        // raw units, keyed by name
  std::vector<std::vector<double>> latents;      // empty when z was not stored
  std::vector<int> targets;                      // classifier labels, may be empty
  int latent_dim = 0;

  std::size_t size() const { return images.size(); }

  /// Rows converted to model units (continuous scaled to [0, 1]).
  std::vector<AttributeVector> scaled_rows() const {
    std::vector<AttributeVector> out(attrs_raw.size());
    for (std::size_t r = 0; r < attrs_raw.size(); ++r)
      for (const AttributeSpec& spec : graph.attributes())
        out[r][spec.name] = scale(spec, attrs_raw[r].at(spec.name));
    return out;
  }

  AttributeVector scaled_row(std::size_t r) const {
    AttributeVector out;
    for (const AttributeSpec& spec : graph.attributes())
      out[spec.name] = scale(spec, attrs_raw[r].at(spec.name));
    return out;
  }
};

/// FNV-1a over the canonical schema JSON; binds trained artifacts to the
/// schema they were produced from.
inline std::uint64_t schema_hash(const CausalGraph& g) {
  const std::string text = graph_to_json(g).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void write_dataset(const std::filesystem::path& dir, const DatasetContainer& d) {
  const std::size_t n = d.size();
  if (d.attrs_raw.size() != n || (!d.latents.empty() && d.latents.size() != n) ||
      (!d.targets.empty() && d.targets.size() != n))
    throw DimensionError("dataset arrays disagree on row count");
  std::filesystem::create_directories(dir);

  nlohmann::ordered_json manifest;
  manifest["version"] = "cfg-1";
  manifest["width"] = d.width;
  manifest["height"] = d.height;
  manifest["n"] = n;
  manifest["seed"] = d.seed;
  manifest["stored_z"] = !d.latents.empty();
  manifest["latent_dim"] = d.latent_dim;
  manifest["has_targets"] = !d.targets.empty();
  manifest["attribute_units"] = "raw";
  manifest["schema"] = graph_to_json(d.graph);
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string pixels;
  pixels.reserve(n * static_cast<std::size_t>(d.width) * d.height * 4);
  for (const Image& img : d.images) {
    if (img.width != d.width || img.height != d.height)
      throw DimensionError("image size does not match the container");
    pixels += f32_bytes(img.pixels);
  }
  atomic_write(dir / "images.f32", pixels);

  std::ostringstream csv;
  bool first = true;
  for (const AttributeSpec& spec : d.graph.attributes()) {
    csv << (first ? "" : ",") << spec.name;
    first = false;
  }
  csv << "\n";
  for (const AttributeVector& row : d.attrs_raw) {
    first = true;
    for (const AttributeSpec& spec : d.graph.attributes()) {
      csv << (first ? "" : ",") << fmt_double(row.at(spec.name));
      first = false;
    }
    csv << "\n";
  }
  atomic_write(dir / "attributes.csv", csv.str());

  if (!d.latents.empty()) {
    std::string z;
    for (const auto& row : d.latents) {
      if (static_cast<int>(row.size()) != d.latent_dim)
        throw DimensionError("latent row size does not match latent_dim");
      z += f32_bytes(row);
    }
    atomic_write(dir / "latents.f32", z);
  }
  if (!d.targets.empty()) {
    std::ostringstream out;
    out << "y\n";
    for (int y : d.targets) out << y << "\n";
    atomic_write(dir / "labels.csv", out.str());
  }
}

inline DatasetContainer read_dataset(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  if (manifest.value("version", "") != std::string("cfg-1"))
    throw FormatError("dataset manifest must declare version cfg-1");

  DatasetContainer d;
  d.width = manifest.at("width").get<int>();
  d.height = manifest.at("height").get<int>();
  d.seed = manifest.at("seed").get<std::uint64_t>();
  d.latent_dim = manifest.at("latent_dim").get<int>();
  d.graph = graph_from_json(manifest.at("schema"));
  const std::size_t n = manifest.at("n").get<std::size_t>();

  const std::vector<double> pixels = f32_values(read_file(dir / "images.f32"));
  const std::size_t per_image = static_cast<std::size_t>(d.width) * d.height;
  if (pixels.size() != n * per_image)
    throw FormatError("images.f32 holds " + std::to_string(pixels.size()) +
                      " values, expected " + std::to_string(n * per_image));
  d.images.assign(n, Image(d.width, d.height));
  for (std::size_t r = 0; r < n; ++r)
    std::copy(pixels.begin() + r * per_image, pixels.begin() + (r + 1) * per_image,
              d.images[r].pixels.begin());

  // Attribute CSV: header then one raw-unit row per image.
  std::istringstream csv(read_file(dir / "attributes.csv"));
  std::string line;
  if (!std::getline(csv, line)) throw FormatError("attributes.csv is empty");
  std::vector<std::string> names;
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) names.push_back(cell);
  }
  for (const std::string& name : names)
    if (!d.graph.has(name)) throw FormatError("attributes.csv has unknown column '" + name + "'");
  if (names.size() != d.graph.size())
    throw FormatError("attributes.csv column count does not match the schema");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    AttributeVector row;
    std::istringstream cells(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(cells, cell, ',')) {
      if (col >= names.size()) throw FormatError("attributes.csv row has too many cells");
      row[names[col++]] = std::strtod(cell.c_str(), nullptr);
    }
    if (col != names.size()) throw FormatError("attributes.csv row has too few cells");
    d.attrs_raw.push_back(std::move(row));
  }
  if (d.attrs_raw.size() != n)
    throw FormatError("attributes.csv holds " + std::to_string(d.attrs_raw.size()) +
                      " rows, expected " + std::to_string(n));

  if (manifest.at("stored_z").get<bool>()) {
    const std::vector<double> z = f32_values(read_file(dir / "latents.f32"));
    if (z.size() != n * static_cast<std::size_t>(d.latent_dim))
      throw FormatError("latents.f32 size does not match n * latent_dim");
    d.latents.assign(n, std::vector<double>(d.latent_dim));
    for (std::size_t r = 0; r < n; ++r)
      std::copy(z.begin() + r * d.latent_dim, z.begin() + (r + 1) * d.latent_dim,
                d.latents[r].begin());
  }
  if (manifest.value("has_targets", false)) {
    std::istringstream labels(read_file(dir / "labels.csv"));
    if (!std::getline(labels, line) || line != "y")
      throw FormatError("labels.csv must start with header 'y'");
    while (std::getline(labels, line)) {
      if (line.empty()) continue;
      d.targets.push_back(std::stoi(line));
    }
    if (d.targets.size() != n) throw FormatError("labels.csv row count does not match n");
  }
  return d;
}

}  // namespace cfglyph
