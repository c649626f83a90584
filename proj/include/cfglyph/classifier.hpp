#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "cfglyph/cfengine.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/graph.hpp"
#include "cfglyph/nn.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/rng.hpp"

namespace cfglyph {

// ─── Label rule and classifiers ──────────────────────────────────────────────
//
// The audited model is a small MLP over raw pixels. Its training labels come
// from a synthetic rule that leans mostly on intensity, so the corpus has a
// known dependence for the audit to find. A second, multiclass net predicts
// the glyph shape; it is used to check that counterfactuals land on the
// intended shape.

// y = 1 when w_i * i_scaled + w_s * (1 - |s_raw|) + noise clears the threshold.
struct LabelRule {
  double intensity_weight = 0.8;
  double straightness_weight = 0.2;
  double threshold = 0.55;
  double noise_std = 0.05;
};

/// Draws one binary label per attribute row. Rows are raw units; intensity is
/// rescaled to [0,1] before weighting.
inline std::vector<int> assign_labels(const LabelRule& rule, const CausalGraph& graph,
                                      const std::vector<AttributeVector>& attrs_raw,
                                      Rng& rng) {
  if (!std::isfinite(rule.intensity_weight) || !std::isfinite(rule.straightness_weight) ||
      !std::isfinite(rule.threshold))
    throw ConfigError("label rule has a non-finite parameter");
  if (rule.noise_std < 0.0) throw ConfigError("label noise std must be >= 0");
  const AttributeSpec& ispec = graph.spec(graph.index_of("i"));
  graph.index_of("s");  // both rule attributes must exist in the schema

  std::vector<int> labels;
  labels.reserve(attrs_raw.size());
  for (const AttributeVector& row : attrs_raw) {
    const double score = rule.intensity_weight * scale(ispec, row.at("i")) +
                         rule.straightness_weight * (1.0 - std::abs(row.at("s"))) +
                         rule.noise_std * rng.normal();
    labels.push_back(score > rule.threshold ? 1 : 0);
  }
  return labels;
}

namespace detail {

inline Matrix image_matrix(const std::vector<Image>& images) {
  if (images.empty()) throw EmptyInputError("no images given");
  const std::size_t px = images[0].pixels.size();
  Matrix out(images.size(), px);
  for (std::size_t r = 0; r < images.size(); ++r) {
    if (images[r].pixels.size() != px) throw DimensionError("images differ in size");
    std::copy(images[r].pixels.begin(), images[r].pixels.end(), out.row(r));
  }
  return out;
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Binary head is linear; the probability applies the sigmoid explicitly, so
// the logit is always available without re-running the net.
struct Classifier {
  NeuralNet net;

  double logit(const Image& x) const {
    if (x.pixels.size() != net.input_dim()) throw DimensionError("image size does not match the classifier input");
    return forward(net, x.pixels)[0];
  }
  double probability(const Image& x) const { return detail::stable_sigmoid(logit(x)); }
  int hard_label(const Image& x, double threshold = 0.5) const {
    return probability(x) > threshold ? 1 : 0;
  }
};

struct ClassifierConfig {
  std::vector<std::size_t> hidden = {128, 64};
  int epochs = 30;
  std::size_t batch = 128;
  double holdout_fraction = 0.2;  // final rows, split by position
  AdamConfig adam{.lr = 1e-3, .beta1 = 0.9};
  unsigned long long seed = 1;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
};

struct ClassifierTrainResult {
  Classifier classifier;
  double held_out_accuracy = 0.0;
  std::vector<EpochRecord> log;
};

namespace detail {

inline void check_clf_config(const ClassifierConfig& config, std::size_t n) {
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch < 1) throw ConfigError("batch size must be >= 1");
  if (config.hidden.empty()) throw ConfigError("classifier needs at least one hidden layer");
  const std::size_t n_hold = static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(n));
  if (n_hold == 0 || n_hold >= n) throw ConfigError("holdout fraction leaves no train or no holdout rows");
}

inline std::size_t holdout_start(double fraction, std::size_t n) {
  return n - static_cast<std::size_t>(fraction * static_cast<double>(n));
}

}  // namespace detail

/// Binary-cross-entropy training on logits with Adam. The last
/// holdout_fraction of the rows never enters training and supplies the
/// reported accuracy.
inline ClassifierTrainResult train_classifier(const std::vector<Image>& images,
                                              const std::vector<int>& labels,
                                              const ClassifierConfig& config) {
  if (images.size() != labels.size()) throw DimensionError("images and labels differ in length");
  const Matrix all = detail::image_matrix(images);
  detail::check_clf_config(config, all.rows);
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("binary labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) throw DegenerateDataError("training labels contain a single class");

  const std::size_t n_train = detail::holdout_start(config.holdout_fraction, all.rows);
  Rng rng(config.seed);
  Rng init_rng = rng.fork(1), shuffle_rng = rng.fork(2);

  std::vector<std::size_t> dims = {all.cols};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(1);
  std::vector<Activation> acts(config.hidden.size(), Activation::LeakyRelu);
  acts.push_back(Activation::Linear);
  NeuralNet net = make_net(dims, acts, init_rng);
  AdamState adam = AdamState::for_net(net);

  ClassifierTrainResult result;
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n_train; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < n_train; lo += config.batch) {
      const std::size_t hi = std::min(n_train, lo + config.batch);
      const std::size_t b = hi - lo;
      Matrix x;
      detail::gather_rows(all, order, lo, hi, x);
      ForwardCache cache = forward_batch(net, x);
      const Matrix& out = cache.output();

      // Stable logit form of BCE: max(l,0) - l*y + log(1 + exp(-|l|)).
      Matrix grad(b, 1);
      double batch_loss = 0.0;
      for (std::size_t r = 0; r < b; ++r) {
        const double l = out.data[r];
        const double y = static_cast<double>(labels[order[lo + r]]);
        batch_loss += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
        grad.data[r] = (detail::stable_sigmoid(l) - y) / static_cast<double>(b);
      }
      loss_sum += batch_loss;
      Gradients grads = backward_batch(net, cache, grad);
      adam_step(net, grads, adam, config.adam);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n_train);
    if (!std::isfinite(epoch_loss) || !net_all_finite(net))
      throw NumericError("classifier training diverged at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, epoch_loss});
  }

  result.classifier.net = std::move(net);
  std::size_t correct = 0;
  for (std::size_t r = n_train; r < all.rows; ++r)
    if (result.classifier.hard_label(images[r]) == labels[r]) ++correct;
  result.held_out_accuracy = static_cast<double>(correct) / static_cast<double>(all.rows - n_train);
  return result;
}

// ─── Shape classifier ────────────────────────────────────────────────────────

struct LabelClassifier {
  NeuralNet net;  // softmax head, one column per class

  std::vector<double> class_probs(const Image& x) const {
    if (x.pixels.size() != net.input_dim()) throw DimensionError("image size does not match the classifier input");
    return forward(net, x.pixels);
  }
  // Ties resolve to the lowest class index.
  int predict(const Image& x) const {
    const std::vector<double> p = class_probs(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

struct LabelClassifierTrainResult {
  LabelClassifier classifier;
  double held_out_accuracy = 0.0;
  std::vector<EpochRecord> log;
};

inline LabelClassifierTrainResult train_label_classifier(const std::vector<Image>& images,
                                                         const std::vector<int>& labels,
                                                         std::size_t n_classes,
                                                         const ClassifierConfig& config) {
  if (images.size() != labels.size()) throw DimensionError("images and labels differ in length");
  if (n_classes < 2) throw ConfigError("a label classifier needs at least two classes");
  const Matrix all = detail::image_matrix(images);
  detail::check_clf_config(config, all.rows);
  std::set<int> distinct;
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw ConfigError("class label " + std::to_string(y) + " is outside [0, " + std::to_string(n_classes) + ")");
    distinct.insert(y);
  }
  if (distinct.size() < 2) throw ConfigError("training labels contain a single class");

  const std::size_t n_train = detail::holdout_start(config.holdout_fraction, all.rows);
  Rng rng(config.seed);
  Rng init_rng = rng.fork(1), shuffle_rng = rng.fork(2);

  std::vector<std::size_t> dims = {all.cols};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(n_classes);
  std::vector<Activation> acts(config.hidden.size(), Activation::LeakyRelu);
  acts.push_back(Activation::Softmax);
  NeuralNet net = make_net(dims, acts, init_rng);
  AdamState adam = AdamState::for_net(net);

  LabelClassifierTrainResult result;
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n_train; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < n_train; lo += config.batch) {
      const std::size_t hi = std::min(n_train, lo + config.batch);
      Matrix x;
      detail::gather_rows(all, order, lo, hi, x);
      std::vector<int> y(hi - lo);
      for (std::size_t r = lo; r < hi; ++r) y[r - lo] = labels[order[r]];

      ForwardCache cache = forward_batch(net, x);
      Matrix grad;
      loss_sum += softmax_xent_loss(cache.output(), y, &grad) * static_cast<double>(hi - lo);
      Gradients grads = backward_batch(net, cache, grad);
      adam_step(net, grads, adam, config.adam);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n_train);
    if (!std::isfinite(epoch_loss) || !net_all_finite(net))
      throw NumericError("label classifier training diverged at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, epoch_loss});
  }

  result.classifier.net = std::move(net);
  std::size_t correct = 0;
  for (std::size_t r = n_train; r < all.rows; ++r)
    if (result.classifier.predict(images[r]) == labels[r]) ++correct;
  result.held_out_accuracy = static_cast<double>(correct) / static_cast<double>(all.rows - n_train);
  return result;
}

/// Fraction of counterfactual images whose predicted shape equals the class
/// the intervention asked for. Skipped pairs do not count.
inline double cf_label_agreement(const LabelClassifier& clf, const std::vector<CfPair>& pairs,
                                 int target_class) {
  std::size_t total = 0, hits = 0;
  for (const CfPair& pair : pairs) {
    if (pair.skipped) continue;
    ++total;
    if (clf.predict(pair.x_c) == target_class) ++hits;
  }
  if (total == 0) throw EmptyInputError("no counterfactual pairs to score");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace cfglyph
