#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cfglyph/dataset.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/nn.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/rng.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Attribute conditioning ──────────────────────────────────────────────────

/// Width of the conditioning vector: one slot per continuous or binary
/// attribute, a one-hot block per categorical attribute, declaration order.
inline std::size_t attribute_encoding_dim(const CausalGraph& g) {
  std::size_t dim = 0;
  for (const AttributeSpec& spec : g.attributes())
    dim += spec.kind == AttributeKind::Categorical ? static_cast<std::size_t>(spec.cardinality) : 1;
  return dim;
}

inline std::vector<double> encode_attributes(const CausalGraph& g, const AttributeVector& a) {
  std::vector<double> out;
  out.reserve(attribute_encoding_dim(g));
  for (const AttributeSpec& spec : g.attributes()) {
    const double v = a.at(spec.name);
    if (spec.kind == AttributeKind::Categorical) {
      for (int k = 0; k < spec.cardinality; ++k)
        out.push_back(k == static_cast<int>(v) ? 1.0 : 0.0);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

// ─── Codec interface ─────────────────────────────────────────────────────────
//
// An attribute-conditioned encoder/generator pair. encode maps an image and
// its attributes to a latent code; decode maps a latent code and (possibly
// different) attributes back to an image. Counterfactual images are
// decode(encode(x, a), a_cf).

class Codec {
public:
  virtual ~Codec() = default;
  virtual std::size_t latent_dim() const = 0;
  virtual std::vector<double> encode(const Image& x, const AttributeVector& a) const = 0;
  virtual Image decode(const std::vector<double>& z, const AttributeVector& a) const = 0;
};

inline Image reconstruct(const Codec& codec, const Image& x, const AttributeVector& a) {
  return codec.decode(codec.encode(x, a), a);
}

/// Trained pair of dense nets.
class TrainedCodec : public Codec {
public:
  TrainedCodec() = default;
  TrainedCodec(NeuralNet encoder, NeuralNet generator, CausalGraph graph, int width, int height)
      : encoder_(std::move(encoder)),
        generator_(std::move(generator)),
        graph_(std::move(graph)),
        width_(width),
        height_(height) {
    latent_dim_ = encoder_.output_dim();
  }

  std::size_t latent_dim() const override { return latent_dim_; }
  const NeuralNet& encoder() const { return encoder_; }
  const NeuralNet& generator() const { return generator_; }
  const CausalGraph& graph() const { return graph_; }
  int width() const { return width_; }
  int height() const { return height_; }

  std::vector<double> encode(const Image& x, const AttributeVector& a) const override {
    if (x.width != width_ || x.height != height_)
      throw DimensionError("image size does not match the codec");
    std::vector<double> in = x.pixels;
    const std::vector<double> cond = encode_attributes(graph_, a);
    in.insert(in.end(), cond.begin(), cond.end());
    return forward(encoder_, in);
  }

  Image decode(const std::vector<double>& z, const AttributeVector& a) const override {
    if (z.size() != latent_dim_)
      throw DimensionError("latent has wrong dimension for the codec");
    std::vector<double> in = z;
    const std::vector<double> cond = encode_attributes(graph_, a);
    in.insert(in.end(), cond.begin(), cond.end());
    Image img(width_, height_);
    img.pixels = forward(generator_, in);
    return img;
  }

private:
  NeuralNet encoder_, generator_;
  CausalGraph graph_;
  int width_ = 0, height_ = 0;
  std::size_t latent_dim_ = 0;
};

/// Ground-truth codec over a rendered dataset: encode recovers the stored
/// true latent of the row whose pixels match the input exactly, decode runs
/// the renderer. Test infrastructure; it realizes a perfect codec against
/// which the trained one and the counterfactual pipeline are judged.
class OracleCodec : public Codec {
public:
  OracleCodec(const DatasetContainer& data, RenderParams params)
      : graph_(data.graph), params_(std::move(params)) {
    if (data.latents.empty())
      throw ConfigError("oracle codec needs a dataset with stored latents");
    for (std::size_t r = 0; r < data.size(); ++r)
      by_pixels_[data.images[r].pixels] = data.latents[r];
    latent_dim_ = static_cast<std::size_t>(data.latent_dim);
  }

  std::size_t latent_dim() const override { return latent_dim_; }

  std::vector<double> encode(const Image& x, const AttributeVector&) const override {
    auto it = by_pixels_.find(x.pixels);
    if (it == by_pixels_.end())
      throw UnknownRowError("image does not match any dataset row");
    return it->second;
  }

  Image decode(const std::vector<double>& z, const AttributeVector& a) const override {
    AttributeVector raw;
    for (const AttributeSpec& spec : graph_.attributes())
      raw[spec.name] = unscale(spec, a.at(spec.name));
    return render(raw, z, params_);
  }

private:
  CausalGraph graph_;
  RenderParams params_;
  std::map<std::vector<double>, std::vector<double>> by_pixels_;
  std::size_t latent_dim_ = 0;
};

// ─── Training ────────────────────────────────────────────────────────────────

struct CodecConfig {
  int latent_dim = 8;
  std::vector<std::size_t> encoder_hidden = {128};
  std::vector<std::size_t> generator_hidden = {256};
  int epochs_warm_generator = 40;
  int epochs_warm_encoder = 10;
  int epochs_phase1 = 50;
  int epochs_phase2 = 20;
  int batch = 128;
  double lambda_z = 0.1;
  double lr = 1e-4;
  std::uint64_t seed = 1;
};

struct EpochLoss {
  int epoch = 0;       // phase 1 counts from 1, phase 2 continues the count
  int phase = 1;
  double loss_x = 0.0;  // per-element image MSE
  double loss_z = 0.0;  // per-element latent L1
  double total = 0.0;
};

struct CodecTrainResult {
  TrainedCodec codec;
  std::vector<EpochLoss> log;
};

namespace detail {

struct CodecBatches {
  Matrix images;  // n x (w*h)
  Matrix conds;   // n x cond_dim
};

inline void gather_rows(const Matrix& src, const std::vector<std::size_t>& idx,
                        std::size_t lo, std::size_t hi, Matrix& dst) {
  dst = Matrix(hi - lo, src.cols);
  for (std::size_t r = lo; r < hi; ++r)
    std::copy(src.row(idx[r]), src.row(idx[r]) + src.cols, dst.row(r - lo));
}

inline void add_gradients(Gradients& acc, const Gradients& extra) {
  for (std::size_t l = 0; l < acc.dw.size(); ++l) {
    for (std::size_t i = 0; i < acc.dw[l].data.size(); ++i)
      acc.dw[l].data[i] += extra.dw[l].data[i];
    for (std::size_t i = 0; i < acc.db[l].size(); ++i) acc.db[l][i] += extra.db[l][i];
  }
}

}  // namespace detail

/// Warm start plus two-phase cyclic training. The warm stages fit generator
/// and encoder supervised on the dataset's stored latent/attribute/image
/// triples; the stored latents are independent of the attributes, so style
/// settles in the latent channel and attribute control in the conditioning
/// input. Phase 1 then trains both nets jointly on reconstruction MSE plus
/// lambda_z times a latent L1 cycle (prior draws pushed through generator
/// then encoder). Phase 2 freezes the generator and fine-tunes the encoder
/// on the unweighted sum of the two terms. The loss log covers the two
/// phases; warm epochs are part of initialization and are not logged.
inline CodecTrainResult train_codec(const DatasetContainer& data, const CodecConfig& config) {
  if (data.size() == 0) throw EmptyInputError("train_codec needs a non-empty dataset");
  if (config.epochs_warm_generator < 0) throw ConfigError("epochs_warm_generator must be >= 0");
  if (config.epochs_warm_encoder < 0) throw ConfigError("epochs_warm_encoder must be >= 0");
  if (config.epochs_phase1 < 1) throw ConfigError("epochs_phase1 must be >= 1");
  if (config.epochs_phase2 < 0) throw ConfigError("epochs_phase2 must be >= 0");
  if (config.batch < 1) throw ConfigError("batch must be >= 1");
  if (config.latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (config.lambda_z < 0.0) throw ConfigError("lambda_z must be >= 0");
  const bool warm = config.epochs_warm_generator > 0 || config.epochs_warm_encoder > 0;
  if (warm && data.latents.empty())
    throw ConfigError("warm-start epochs need a dataset with stored latents");
  if (warm && data.latent_dim != config.latent_dim)
    throw ConfigError("warm-start epochs need latent_dim to match the stored latents");

  const std::size_t n = data.size();
  const std::size_t px = static_cast<std::size_t>(data.width) * data.height;
  const std::size_t cond_dim = attribute_encoding_dim(data.graph);
  const std::size_t m = static_cast<std::size_t>(config.latent_dim);

  Matrix images(n, px), conds(n, cond_dim);
  const std::vector<AttributeVector> scaled = data.scaled_rows();
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(data.images[r].pixels.begin(), data.images[r].pixels.end(), images.row(r));
    const std::vector<double> c = encode_attributes(data.graph, scaled[r]);
    std::copy(c.begin(), c.end(), conds.row(r));
  }
  Matrix lats;
  if (warm) {
    lats = Matrix(n, m);
    for (std::size_t r = 0; r < n; ++r)
      std::copy(data.latents[r].begin(), data.latents[r].end(), lats.row(r));
  }

  Rng rng(config.seed);
  Rng init_rng = rng.fork(1), shuffle_rng = rng.fork(2), prior_rng = rng.fork(3);

  std::vector<std::size_t> enc_dims = {px + cond_dim};
  enc_dims.insert(enc_dims.end(), config.encoder_hidden.begin(), config.encoder_hidden.end());
  enc_dims.push_back(m);
  std::vector<Activation> enc_acts(config.encoder_hidden.size(), Activation::LeakyRelu);
  enc_acts.push_back(Activation::Linear);
  NeuralNet encoder = make_net(enc_dims, enc_acts, init_rng);

  std::vector<std::size_t> gen_dims = {m + cond_dim};
  gen_dims.insert(gen_dims.end(), config.generator_hidden.begin(), config.generator_hidden.end());
  gen_dims.push_back(px);
  std::vector<Activation> gen_acts(config.generator_hidden.size(), Activation::LeakyRelu);
  gen_acts.push_back(Activation::Sigmoid);
  NeuralNet generator = make_net(gen_dims, gen_acts, init_rng);

  AdamConfig adam{config.lr, 0.5, 0.999, 1e-8};
  AdamState enc_state = AdamState::for_net(encoder);
  AdamState gen_state = AdamState::for_net(generator);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates with the seeded stream; epoch order is part of the contract
  // and the warm stages consume the same stream before the phases.
  const auto shuffle_order = [&] {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
  };

  for (int epoch = 0; epoch < config.epochs_warm_generator; ++epoch) {
    shuffle_order();
    for (std::size_t lo = 0; lo < n; lo += config.batch) {
      const std::size_t hi = std::min(n, lo + config.batch);
      const std::size_t b = hi - lo;
      Matrix x, cond, z;
      detail::gather_rows(images, order, lo, hi, x);
      detail::gather_rows(conds, order, lo, hi, cond);
      detail::gather_rows(lats, order, lo, hi, z);
      Matrix in(b, m + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(z.row(r), z.row(r) + m, in.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, in.row(r) + m);
      }
      ForwardCache cache = forward_batch(generator, in);
      Matrix d;
      mse_loss(cache.output(), x, &d);
      Gradients grads = backward_batch(generator, cache, std::move(d));
      adam_step(generator, grads, gen_state, adam);
    }
  }
  for (int epoch = 0; epoch < config.epochs_warm_encoder; ++epoch) {
    shuffle_order();
    for (std::size_t lo = 0; lo < n; lo += config.batch) {
      const std::size_t hi = std::min(n, lo + config.batch);
      const std::size_t b = hi - lo;
      Matrix x, cond, z;
      detail::gather_rows(images, order, lo, hi, x);
      detail::gather_rows(conds, order, lo, hi, cond);
      detail::gather_rows(lats, order, lo, hi, z);
      Matrix in(b, px + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(x.row(r), x.row(r) + px, in.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, in.row(r) + px);
      }
      ForwardCache cache = forward_batch(encoder, in);
      Matrix d;
      mse_loss(cache.output(), z, &d);
      Gradients grads = backward_batch(encoder, cache, std::move(d));
      adam_step(encoder, grads, enc_state, adam);
    }
  }

  CodecTrainResult result;
  const int total_epochs = config.epochs_phase1 + config.epochs_phase2;
  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    const bool phase2 = epoch > config.epochs_phase1;
    shuffle_order();

    double sum_x = 0.0, sum_z = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < n; lo += config.batch, ++batches) {
      const std::size_t hi = std::min(n, lo + config.batch);
      const std::size_t b = hi - lo;
      Matrix x, cond;
      detail::gather_rows(images, order, lo, hi, x);
      detail::gather_rows(conds, order, lo, hi, cond);

      // Reconstruction path: x -> E -> z -> G -> x_hat.
      Matrix enc_in(b, px + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(x.row(r), x.row(r) + px, enc_in.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, enc_in.row(r) + px);
      }
      ForwardCache enc_cache = forward_batch(encoder, enc_in);
      Matrix gen_in(b, m + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(enc_cache.output().row(r), enc_cache.output().row(r) + m, gen_in.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, gen_in.row(r) + m);
      }
      ForwardCache gen_cache = forward_batch(generator, gen_in);

      Matrix dxhat;
      const double loss_x = mse_loss(gen_cache.output(), x, &dxhat);
      Matrix dgen_in;
      Gradients gen_grads = backward_batch(generator, gen_cache, std::move(dxhat), &dgen_in);
      Matrix dz(b, m);
      for (std::size_t r = 0; r < b; ++r)
        std::copy(dgen_in.row(r), dgen_in.row(r) + m, dz.row(r));
      Gradients enc_grads = backward_batch(encoder, enc_cache, std::move(dz));

      // Latent cycle path: z ~ prior -> G -> x_g -> E -> z_hat.
      const double z_weight = phase2 ? 1.0 : config.lambda_z;
      Matrix zp(b, m);
      for (double& v : zp.data) v = prior_rng.normal();
      Matrix gen_in2(b, m + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(zp.row(r), zp.row(r) + m, gen_in2.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, gen_in2.row(r) + m);
      }
      ForwardCache gen_cache2 = forward_batch(generator, gen_in2);
      Matrix enc_in2(b, px + cond_dim);
      for (std::size_t r = 0; r < b; ++r) {
        std::copy(gen_cache2.output().row(r), gen_cache2.output().row(r) + px, enc_in2.row(r));
        std::copy(cond.row(r), cond.row(r) + cond_dim, enc_in2.row(r) + px);
      }
      ForwardCache enc_cache2 = forward_batch(encoder, enc_in2);

      Matrix dzhat;
      const double loss_z = mae_loss(enc_cache2.output(), zp, &dzhat);
      if (z_weight != 0.0) {
        for (double& v : dzhat.data) v *= z_weight;
        if (phase2) {
          // Generator frozen: the cycle gradient stops at the encoder input.
          Gradients enc_grads2 = backward_batch(encoder, enc_cache2, std::move(dzhat));
          detail::add_gradients(enc_grads, enc_grads2);
        } else {
          Matrix denc_in2;
          Gradients enc_grads2 = backward_batch(encoder, enc_cache2, std::move(dzhat), &denc_in2);
          detail::add_gradients(enc_grads, enc_grads2);
          Matrix dxg(b, px);
          for (std::size_t r = 0; r < b; ++r)
            std::copy(denc_in2.row(r), denc_in2.row(r) + px, dxg.row(r));
          Gradients gen_grads2 = backward_batch(generator, gen_cache2, std::move(dxg));
          detail::add_gradients(gen_grads, gen_grads2);
        }
      }

      adam_step(encoder, enc_grads, enc_state, adam);
      if (!phase2) adam_step(generator, gen_grads, gen_state, adam);

      sum_x += loss_x;
      sum_z += loss_z;
    }

    if (!net_all_finite(encoder) || !net_all_finite(generator))
      throw NumericError("codec parameters left the finite range in epoch " + std::to_string(epoch));
    EpochLoss entry;
    entry.epoch = epoch;
    entry.phase = phase2 ? 2 : 1;
    entry.loss_x = sum_x / static_cast<double>(batches);
    entry.loss_z = sum_z / static_cast<double>(batches);
    entry.total = entry.loss_x + (phase2 ? 1.0 : config.lambda_z) * entry.loss_z;
    result.log.push_back(entry);
  }

  result.codec = TrainedCodec(std::move(encoder), std::move(generator), data.graph,
                              data.width, data.height);
  return result;
}

// ─── Metrics and interpolation ───────────────────────────────────────────────

struct CodecMetrics {
  double mse_x = 0.0;  // per-element reconstruction MSE
  double mae_z = 0.0;  // per-element error against the stored true latents
};

inline CodecMetrics codec_metrics(const Codec& codec, const DatasetContainer& data) {
  if (data.size() == 0) throw EmptyInputError("codec_metrics needs a non-empty dataset");
  if (data.latents.empty()) throw ConfigError("codec_metrics needs stored true latents");
  if (codec.latent_dim() != static_cast<std::size_t>(data.latent_dim))
    throw DimensionError("codec latent dimension does not match the stored latents");
  const std::vector<AttributeVector> scaled = data.scaled_rows();
  CodecMetrics m;
  std::size_t px_count = 0, z_count = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const std::vector<double> z = codec.encode(data.images[r], scaled[r]);
    const Image rec = codec.decode(z, scaled[r]);
    for (std::size_t i = 0; i < rec.pixels.size(); ++i) {
      const double d = rec.pixels[i] - data.images[r].pixels[i];
      m.mse_x += d * d;
    }
    px_count += rec.pixels.size();
    for (std::size_t i = 0; i < z.size(); ++i) {
      m.mae_z += std::abs(z[i] - data.latents[r][i]);
      ++z_count;
    }
  }
  m.mse_x /= static_cast<double>(px_count);
  m.mae_z /= static_cast<double>(z_count);
  return m;
}

/// Evenly spaced latent interpolation; the endpoints reuse z1 and z2 exactly,
/// so frames 0 and steps-1 equal decode(z1) and decode(z2) bit for bit.
inline std::vector<Image> interpolate(const Codec& codec, const std::vector<double>& z1,
                                      const std::vector<double>& z2, const AttributeVector& a,
                                      int steps) {
  if (steps < 2) throw ConfigError("interpolate needs at least 2 steps");
  if (z1.size() != codec.latent_dim() || z2.size() != codec.latent_dim())
    throw DimensionError("interpolation endpoints have wrong latent dimension");
  std::vector<Image> frames;
  frames.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    if (k == 0) {
      frames.push_back(codec.decode(z1, a));
    } else if (k == steps - 1) {
      frames.push_back(codec.decode(z2, a));
    } else {
      const double tau = static_cast<double>(k) / static_cast<double>(steps - 1);
      std::vector<double> z(z1.size());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = (1.0 - tau) * z1[i] + tau * z2[i];
      frames.push_back(codec.decode(z, a));
    }
  }
  return frames;
}

// ─── Serialization ───────────────────────────────────────────────────────────

inline void save_codec(const std::filesystem::path& dir, const TrainedCodec& codec) {
  std::filesystem::create_directories(dir);
  atomic_write(dir / "encoder.json", net_to_json(codec.encoder()).dump() + "\n");
  atomic_write(dir / "generator.json", net_to_json(codec.generator()).dump() + "\n");
  nlohmann::ordered_json header;
  header["version"] = "codec-1";
  header["latent_dim"] = codec.latent_dim();
  header["width"] = codec.width();
  header["height"] = codec.height();
  header["schema_hash"] = schema_hash(codec.graph());
  header["schema"] = graph_to_json(codec.graph());
  header["encoder"] = "encoder.json";
  header["generator"] = "generator.json";
  atomic_write(dir / "codec.json", header.dump(2) + "\n");
}

inline TrainedCodec load_codec(const std::filesystem::path& dir) {
  const auto header = nlohmann::json::parse(read_file(dir / "codec.json"));
  if (header.value("version", "") != std::string("codec-1"))
    throw FormatError("codec header must declare version codec-1");
  CausalGraph graph = graph_from_json(header.at("schema"));
  if (header.at("schema_hash").get<std::uint64_t>() != schema_hash(graph))
    throw FormatError("codec schema hash does not match its schema");
  NeuralNet encoder =
      net_from_json(nlohmann::json::parse(read_file(dir / header.at("encoder").get<std::string>())));
  NeuralNet generator =
      net_from_json(nlohmann::json::parse(read_file(dir / header.at("generator").get<std::string>())));
  return TrainedCodec(std::move(encoder), std::move(generator), std::move(graph),
                      header.at("width").get<int>(), header.at("height").get<int>());
}

}  // namespace cfglyph
