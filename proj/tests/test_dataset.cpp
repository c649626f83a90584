#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "cfglyph/dataset.hpp"
#include "cfglyph/glyphs.hpp"
#include "cfglyph/io.hpp"
#include "cfglyph/rng.hpp"
#include "support/tempdir.hpp"

using namespace cfglyph;
using cfglyph::testsupport::TempDir;

namespace {

/// Tiny container with f32-exact tensor values, so a single write/read round
/// trip is bitwise lossless.
DatasetContainer exact_container() {
  DatasetContainer d;
  d.graph = default_graph();
  d.width = 4;
  d.height = 4;
  d.seed = 99;
  d.latent_dim = 2;
  for (int r = 0; r < 3; ++r) {
    Image img(4, 4);
    for (int k = 0; k < 16; ++k)
      img.pixels[static_cast<std::size_t>(k)] = static_cast<double>((k + r) % 16) / 16.0;
    d.images.push_back(img);
    d.attrs_raw.push_back({{"t", 1.0 + r}, {"i", 0.5}, {"s", -0.25}, {"l", static_cast<double>(r)}});
    d.latents.push_back({0.5 * r, -1.5});
    d.targets.push_back(r % 2);
  }
  return d;
}

}  // namespace

// ─── Primitive formats ───────────────────────────────────────────────────────

TEST_CASE("fmt_double survives a parse round trip") {
  Rng rng(14);
  for (int k = 0; k < 1000; ++k) {
    const double v = k % 2 == 0 ? rng.normal() * 1e3 : rng.uniform(-1.0, 1.0);
    CHECK(std::strtod(fmt_double(v).c_str(), nullptr) == v);
  }
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(1.0) == "1");
  CHECK(fmt_double(-0.25) == "-0.25");
  CHECK(std::strtod(fmt_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("f32 byte codec round trips and is idempotent") {
  const std::vector<double> exact = {0.0, 1.0, -0.5, 0.25, 1024.0};
  CHECK(f32_values(f32_bytes(exact)) == exact);

  Rng rng(15);
  std::vector<double> noisy;
  for (int k = 0; k < 100; ++k) noisy.push_back(rng.normal());
  const std::string once = f32_bytes(noisy);
  // Quantization happens exactly once; re-encoding the decoded values is stable.
  CHECK(f32_bytes(f32_values(once)) == once);
  CHECK(once.size() == noisy.size() * 4);

  CHECK_THROWS_AS(f32_values("abc"), FormatError);
}

TEST_CASE("atomic_write leaves no temp file behind") {
  TempDir tmp;
  const auto target = tmp.path / "payload.bin";
  atomic_write(target, std::string("hello\0world", 11));
  CHECK(read_file(target) == std::string("hello\0world", 11));
  CHECK(!std::filesystem::exists(tmp.path / "payload.bin.tmp"));
  CHECK_THROWS_AS(read_file(tmp.path / "missing.bin"), IoError);
}

TEST_CASE("pgm export writes an 8-bit P5 raster") {
  TempDir tmp;
  Image img(3, 2);
  img.pixels = {0.0, 0.5, 1.0, 0.25, 2.0, -1.0};  // out-of-range values clip
  const auto path = tmp.path / "img.pgm";
  export_pgm(img, path);
  const std::string bytes = read_file(path);
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(bytes.substr(0, header.size()) == header);
  const auto px = [&](int k) {
    return static_cast<unsigned char>(bytes[header.size() + static_cast<std::size_t>(k)]);
  };
  CHECK(px(0) == 0);
  CHECK(px(1) == 128);  // round(127.5) away from zero
  CHECK(px(2) == 255);
  CHECK(px(3) == 64);
  CHECK(px(4) == 255);
  CHECK(px(5) == 0);
}

// ─── Schema hashing ──────────────────────────────────────────────────────────

TEST_CASE("schema hash is stable and sensitive") {
  const CausalGraph g = default_graph();
  CHECK(schema_hash(g) == schema_hash(default_graph()));
  const CausalGraph other = build_graph({
      AttributeSpec::continuous("t", 1.0, 6.0),  // widened range
      AttributeSpec::continuous("i", 0.3, 1.0, {"t"}),
      AttributeSpec::continuous("s", -1.0, 1.0),
      AttributeSpec::categorical("l", 4),
  });
  CHECK(schema_hash(g) != schema_hash(other));
}

// ─── Container round trips ───────────────────────────────────────────────────

TEST_CASE("dataset write and read reproduce every tensor") {
  TempDir tmp;
  const DatasetContainer d = exact_container();
  write_dataset(tmp.path, d);
  const DatasetContainer back = read_dataset(tmp.path);

  REQUIRE(back.size() == d.size());
  CHECK(back.width == d.width);
  CHECK(back.height == d.height);
  CHECK(back.seed == d.seed);
  CHECK(back.latent_dim == d.latent_dim);
  CHECK(graph_to_json(back.graph) == graph_to_json(d.graph));
  for (std::size_t r = 0; r < d.size(); ++r) {
    CHECK(back.images[r].pixels == d.images[r].pixels);
    CHECK(back.latents[r] == d.latents[r]);
    CHECK(back.targets[r] == d.targets[r]);
    for (const AttributeSpec& spec : d.graph.attributes())
      CHECK(back.attrs_raw[r].at(spec.name) == d.attrs_raw[r].at(spec.name));
  }
}

TEST_CASE("rewriting a read dataset is byte identical") {
  TempDir a, b;
  GenConfig config;
  config.n = 5;
  config.seed = 21;
  write_dataset(a.path, generate_dataset(config));
  write_dataset(b.path, read_dataset(a.path));
  for (const char* name : {"manifest.json", "images.f32", "attributes.csv",
                           "latents.f32", "labels.csv"}) {
    INFO(name);
    CHECK(read_file(a.path / name) == read_file(b.path / name));
  }
}

TEST_CASE("dataset without latents or labels skips those files") {
  TempDir tmp;
  DatasetContainer d = exact_container();
  d.latents.clear();
  d.targets.clear();
  d.latent_dim = 0;
  write_dataset(tmp.path, d);
  CHECK(!std::filesystem::exists(tmp.path / "latents.f32"));
  CHECK(!std::filesystem::exists(tmp.path / "labels.csv"));
  const DatasetContainer back = read_dataset(tmp.path);
  CHECK(back.latents.empty());
  CHECK(back.targets.empty());
  CHECK(back.size() == 3);
}

TEST_CASE("scaled rows convert continuous attributes to model units") {
  const DatasetContainer d = exact_container();
  const AttributeVector row = d.scaled_row(2);
  CHECK(row.at("t") == 0.5);      // raw 3 in [1, 5]
  CHECK(row.at("l") == 2.0);      // classes pass through
  CHECK(row.at("s") == 0.375);    // raw -0.25 in [-1, 1]
  CHECK(d.scaled_rows()[2].at("i") == row.at("i"));
}

// ─── Corruption detection ────────────────────────────────────────────────────

TEST_CASE("mismatched array lengths are rejected at write time") {
  TempDir tmp;
  DatasetContainer d = exact_container();
  d.attrs_raw.pop_back();
  CHECK_THROWS_AS(write_dataset(tmp.path, d), DimensionError);

  DatasetContainer e = exact_container();
  e.images[1] = Image(5, 5);
  CHECK_THROWS_AS(write_dataset(tmp.path, e), DimensionError);

  DatasetContainer f = exact_container();
  f.latents[0] = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(write_dataset(tmp.path, f), DimensionError);
}

TEST_CASE("corrupted files are rejected at read time") {
  TempDir tmp;
  write_dataset(tmp.path, exact_container());

  SECTION("truncated image payload") {
    std::string bytes = read_file(tmp.path / "images.f32");
    bytes.resize(bytes.size() - 4);
    atomic_write(tmp.path / "images.f32", bytes);
    CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
  }
  SECTION("wrong manifest version") {
    auto manifest = nlohmann::json::parse(read_file(tmp.path / "manifest.json"));
    manifest["version"] = "cfg-0";
    atomic_write(tmp.path / "manifest.json", manifest.dump(2) + "\n");
    CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
  }
  SECTION("missing attribute rows") {
    atomic_write(tmp.path / "attributes.csv", "t,i,s,l\n1,0.5,-0.25,0\n");
    CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
  }
  SECTION("bad labels header") {
    atomic_write(tmp.path / "labels.csv", "label\n0\n1\n0\n");
    CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
  }
  SECTION("latent payload size mismatch") {
    atomic_write(tmp.path / "latents.f32", std::string(8, '\0'));
    CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
  }
}
