#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cfglyph/cfengine.hpp"
#include "cfglyph/classifier.hpp"
#include "cfglyph/codec.hpp"
#include "cfglyph/errors.hpp"
#include "cfglyph/renderer.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Bias measurement ────────────────────────────────────────────────────────
//
// The audit compares the classifier's verdict on a reconstruction with its
// verdict on the matching counterfactual. Bias is the signed rate of
// decision flips: p(0→1) − p(1→0) over all pairs, equivalently
// p_flip · (p_01 − p_10). Both routes are computed and must agree.

struct LabelPair {
  int y_r = 0;
  int y_c = 0;
};

struct ScatterPoint {
  double prob_r = 0.0;
  double prob_c = 0.0;
  int y_r = 0;
  int y_c = 0;
};

struct BiasReport {
  std::string label;              // which intervention or baseline produced the pairs
  std::size_t n_pairs = 0;        // after skip filtering
  double p_flip = 0.0;            // p(y_r != y_c)
  double p_01 = 0.0;              // p(y_r=0, y_c=1 | flip); 0 when nothing flips
  double p_10 = 0.0;
  double bias = 0.0;              // p(0,1) − p(1,0), in [−1, 1]
  bool significant = false;       // |bias| above the significance threshold
  std::vector<ScatterPoint> scatter;  // raw probabilities, empty for label-only audits
};

inline constexpr double kBiasSignificance = 0.05;

inline BiasReport bias_from_labels(const std::vector<LabelPair>& pairs,
                                   const std::string& label = "",
                                   double significance = kBiasSignificance) {
  if (pairs.empty()) throw EmptyInputError("bias needs at least one label pair");
  std::size_t n01 = 0, n10 = 0;
  for (const LabelPair& p : pairs) {
    if (p.y_r == 0 && p.y_c == 1) ++n01;
    if (p.y_r == 1 && p.y_c == 0) ++n10;
  }
  const double n = static_cast<double>(pairs.size());
  const std::size_t flips = n01 + n10;

  BiasReport report;
  report.label = label;
  report.n_pairs = pairs.size();
  report.p_flip = static_cast<double>(flips) / n;
  if (flips > 0) {
    report.p_01 = static_cast<double>(n01) / static_cast<double>(flips);
    report.p_10 = static_cast<double>(n10) / static_cast<double>(flips);
  }
  // Joint-count route, and the flip-times-conditional route it must equal.
  report.bias = (static_cast<double>(n01) - static_cast<double>(n10)) / n;
  const double via_flip = report.p_flip * (report.p_01 - report.p_10);
  if (std::abs(report.bias - via_flip) > 1e-12)
    throw NumericError("bias decompositions disagree beyond 1e-12");
  report.significant = std::abs(report.bias) > significance;
  return report;
}

/// Classifies both images of every non-skipped pair and reduces to a
/// BiasReport, keeping the raw probabilities for scatter plots.
inline BiasReport audit_intervention(const Classifier& clf, const std::vector<CfPair>& pairs,
                                     const std::string& label = "", double threshold = 0.5,
                                     double significance = kBiasSignificance) {
  std::vector<LabelPair> labels;
  std::vector<ScatterPoint> scatter;
  for (const CfPair& pair : pairs) {
    if (pair.skipped) continue;
    ScatterPoint point;
    point.prob_r = clf.probability(pair.x_r);
    point.prob_c = clf.probability(pair.x_c);
    point.y_r = point.prob_r > threshold ? 1 : 0;
    point.y_c = point.prob_c > threshold ? 1 : 0;
    scatter.push_back(point);
    labels.push_back({point.y_r, point.y_c});
  }
  if (labels.empty()) throw EmptyInputError("every counterfactual pair was skipped");
  BiasReport report = bias_from_labels(labels, label, significance);
  report.scatter = std::move(scatter);
  return report;
}

// ─── Pixel-space baselines ───────────────────────────────────────────────────

// The baselines the audit is compared against: transforms with no causal
// model behind them. The base image here is the real one, not a
// reconstruction.
struct BaselineTransform {
  enum class Kind { Flip, Brightness };
  Kind kind = Kind::Flip;
  double factor = 1.0;  // brightness only

  std::string display() const {
    if (kind == Kind::Flip) return "horizontal_flip";
    return "brightness(" + fmt_double(factor) + ")";
  }
};

inline BiasReport audit_baseline(const Classifier& clf, const DatasetContainer& data,
                                 const BaselineTransform& transform, double threshold = 0.5,
                                 double significance = kBiasSignificance) {
  if (data.size() == 0) throw EmptyInputError("baseline audit needs a non-empty dataset");
  std::vector<LabelPair> labels;
  std::vector<ScatterPoint> scatter;
  for (const Image& x : data.images) {
    const Image xt = transform.kind == BaselineTransform::Kind::Flip
                         ? flip_horizontal(x)
                         : adjust_brightness(x, transform.factor);
    ScatterPoint point;
    point.prob_r = clf.probability(x);
    point.prob_c = clf.probability(xt);
    point.y_r = point.prob_r > threshold ? 1 : 0;
    point.y_c = point.prob_c > threshold ? 1 : 0;
    scatter.push_back(point);
    labels.push_back({point.y_r, point.y_c});
  }
  BiasReport report = bias_from_labels(labels, transform.display(), significance);
  report.scatter = std::move(scatter);
  return report;
}

// ─── Counterfactual importance ───────────────────────────────────────────────

struct ImportanceReport {
  std::vector<std::string> attributes;     // order as requested
  std::vector<std::vector<double>> local;  // [input][attribute]
  std::vector<double> global_score;        // mean of local over inputs
  std::vector<std::string> ranking;        // descending global score, ties by name
  bool soft = false;                       // probabilities instead of hard labels
};

/// Per input and binary attribute: the classifier's answer with the attribute
/// forced on minus forced off, both through the counterfactual engine. Hard
/// labels by default; soft mode keeps raw probability differences.
inline ImportanceReport explain(const Classifier& clf, const Codec& codec,
                                const StructuralModel& model, const DatasetContainer& data,
                                const std::vector<std::string>& attributes,
                                bool soft = false, double threshold = 0.5) {
  if (data.size() == 0) throw EmptyInputError("explain needs a non-empty dataset");
  if (attributes.empty()) throw EmptyInputError("explain needs at least one attribute");
  std::vector<std::size_t> idx;
  for (const std::string& name : attributes) {
    const std::size_t i = model.graph.index_of(name);
    if (model.graph.spec(i).kind != AttributeKind::Binary)
      throw NonBinaryAttributeError("attribute '" + name + "' is not binary");
    idx.push_back(i);
  }

  ImportanceReport report;
  report.attributes = attributes;
  report.soft = soft;
  report.global_score.assign(attributes.size(), 0.0);

  for (std::size_t r = 0; r < data.size(); ++r) {
    const AttributeVector a = data.scaled_row(r);
    const NoiseVector noise = abduct_noise(model, a);
    const std::vector<double> z = codec.encode(data.images[r], a);
    std::vector<double> row_scores;
    for (std::size_t k = 0; k < attributes.size(); ++k) {
      double answer[2];
      for (int value = 0; value <= 1; ++value) {
        AttributeVector target;
        target[attributes[k]] = static_cast<double>(value);
        const AttributeVector a_c = predict_attributes(model, a, target, noise);
        const double p = clf.probability(codec.decode(z, a_c));
        answer[value] = soft ? p : (p > threshold ? 1.0 : 0.0);
      }
      const double score = answer[1] - answer[0];
      row_scores.push_back(score);
      report.global_score[k] += score;
    }
    report.local.push_back(std::move(row_scores));
  }
  for (double& g : report.global_score) g /= static_cast<double>(data.size());

  std::vector<std::size_t> order(attributes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a_i, std::size_t b_i) {
    if (report.global_score[a_i] != report.global_score[b_i])
      return report.global_score[a_i] > report.global_score[b_i];
    return attributes[a_i] < attributes[b_i];
  });
  for (std::size_t i : order) report.ranking.push_back(attributes[i]);
  return report;
}

// ─── Mitigation ──────────────────────────────────────────────────────────────

struct MitigationConfig {
  double lambda = 1.0;           // weight on the logit-matching regularizer
  double accuracy_floor = 0.80;  // checkpoints below this are never selected
  int epochs = 10;
  std::size_t batch = 128;
  double holdout_fraction = 0.2;  // final image rows, for checkpoint accuracy
  double pair_train_fraction = 0.8;  // leading cf pairs fine-tune, the rest validate
  AdamConfig adam{.lr = 1e-4, .beta1 = 0.9};
  unsigned long long seed = 1;
};

struct MitigationResult {
  Classifier classifier;
  int chosen_epoch = 0;
  double held_out_accuracy = 0.0;  // of the chosen checkpoint
  double validation_bias = 0.0;    // of the chosen checkpoint
  std::vector<EpochRecord> log;    // combined loss per epoch
};

namespace detail {

inline double holdout_accuracy(const NeuralNet& net, const Matrix& x,
                               const std::vector<int>& labels, std::size_t lo) {
  ForwardCache cache = forward_batch(net, x);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const int y = stable_sigmoid(cache.output().data[r]) > 0.5 ? 1 : 0;
    if (y == labels[lo + r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows);
}

inline double pair_bias(const NeuralNet& net, const Matrix& xr, const Matrix& xc) {
  ForwardCache cr = forward_batch(net, xr);
  ForwardCache cc = forward_batch(net, xc);
  std::vector<LabelPair> labels(xr.rows);
  for (std::size_t r = 0; r < xr.rows; ++r) {
    labels[r].y_r = stable_sigmoid(cr.output().data[r]) > 0.5 ? 1 : 0;
    labels[r].y_c = stable_sigmoid(cc.output().data[r]) > 0.5 ? 1 : 0;
  }
  return bias_from_labels(labels).bias;
}

}  // namespace detail

/// Fine-tunes the classifier on label loss plus λ times the squared gap
/// between its logits on each reconstruction and its counterfactual. Among
/// the per-epoch checkpoints whose held-out accuracy clears the floor, the
/// one with the smallest validation-pair |bias| wins.
inline MitigationResult mitigate(const Classifier& clf, const std::vector<Image>& images,
                                 const std::vector<int>& labels,
                                 const std::vector<CfPair>& pairs,
                                 const MitigationConfig& config) {
  if (images.size() != labels.size()) throw DimensionError("images and labels differ in length");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch < 1) throw ConfigError("batch size must be >= 1");
  if (config.lambda < 0.0) throw ConfigError("lambda must be >= 0");

  const Matrix all = detail::image_matrix(images);
  const std::size_t n_train = detail::holdout_start(config.holdout_fraction, all.rows);
  if (n_train == 0 || n_train >= all.rows)
    throw ConfigError("holdout fraction leaves no train or no holdout rows");

  std::vector<const CfPair*> live;
  for (const CfPair& pair : pairs)
    if (!pair.skipped) live.push_back(&pair);
  // Leading pairs by position fine-tune; trailing pairs pick the checkpoint.
  const std::size_t n_pair_train =
      static_cast<std::size_t>(config.pair_train_fraction * static_cast<double>(live.size()));
  if (n_pair_train == 0 || n_pair_train >= live.size())
    throw EmptyInputError("pair split leaves no fine-tune or no validation pairs");

  const std::size_t px = all.cols;
  Matrix train_r(n_pair_train, px), train_c(n_pair_train, px);
  Matrix val_r(live.size() - n_pair_train, px), val_c(live.size() - n_pair_train, px);
  for (std::size_t i = 0; i < live.size(); ++i) {
    Matrix& mr = i < n_pair_train ? train_r : val_r;
    Matrix& mc = i < n_pair_train ? train_c : val_c;
    const std::size_t r = i < n_pair_train ? i : i - n_pair_train;
    if (live[i]->x_r.pixels.size() != px || live[i]->x_c.pixels.size() != px)
      throw DimensionError("counterfactual pair image size does not match the corpus");
    std::copy(live[i]->x_r.pixels.begin(), live[i]->x_r.pixels.end(), mr.row(r));
    std::copy(live[i]->x_c.pixels.begin(), live[i]->x_c.pixels.end(), mc.row(r));
  }
  Matrix holdout(all.rows - n_train, px);
  for (std::size_t r = n_train; r < all.rows; ++r)
    std::copy(all.row(r), all.row(r) + px, holdout.row(r - n_train));

  NeuralNet net = clf.net;
  if (net.input_dim() != px) throw DimensionError("classifier input does not match the images");
  AdamState adam = AdamState::for_net(net);
  Rng rng(config.seed);
  Rng shuffle_rng = rng.fork(2);

  std::vector<std::size_t> order(n_train), pair_order(n_pair_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
  for (std::size_t i = 0; i < n_pair_train; ++i) pair_order[i] = i;

  MitigationResult result;
  bool found = false;
  double best_abs_bias = 0.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n_train; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t i = n_pair_train; i > 1; --i)
      std::swap(pair_order[i - 1], pair_order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0, pair_cursor = 0;
    for (std::size_t lo = 0; lo < n_train; lo += config.batch, ++batches) {
      const std::size_t hi = std::min(n_train, lo + config.batch);
      const std::size_t b = hi - lo;
      Matrix x;
      detail::gather_rows(all, order, lo, hi, x);
      ForwardCache cache = forward_batch(net, x);
      Matrix grad(b, 1);
      double batch_loss = 0.0;
      for (std::size_t r = 0; r < b; ++r) {
        const double l = cache.output().data[r];
        const double y = static_cast<double>(labels[order[lo + r]]);
        batch_loss += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
        grad.data[r] = (detail::stable_sigmoid(l) - y) / static_cast<double>(b);
      }
      batch_loss /= static_cast<double>(b);
      Gradients grads = backward_batch(net, cache, grad);

      if (config.lambda > 0.0) {
        // Pair batch of the same size, cycling through the shuffled pairs.
        Matrix pr(b, px), pc(b, px);
        for (std::size_t r = 0; r < b; ++r) {
          const std::size_t p = pair_order[pair_cursor];
          pair_cursor = (pair_cursor + 1) % n_pair_train;
          std::copy(train_r.row(p), train_r.row(p) + px, pr.row(r));
          std::copy(train_c.row(p), train_c.row(p) + px, pc.row(r));
        }
        ForwardCache cache_r = forward_batch(net, pr);
        ForwardCache cache_c = forward_batch(net, pc);
        Matrix grad_r(b, 1), grad_c(b, 1);
        double reg = 0.0;
        for (std::size_t r = 0; r < b; ++r) {
          const double d = cache_r.output().data[r] - cache_c.output().data[r];
          reg += d * d;
          grad_r.data[r] = config.lambda * 2.0 * d / static_cast<double>(b);
          grad_c.data[r] = -grad_r.data[r];
        }
        batch_loss += config.lambda * reg / static_cast<double>(b);
        detail::add_gradients(grads, backward_batch(net, cache_r, grad_r));
        detail::add_gradients(grads, backward_batch(net, cache_c, grad_c));
      }
      adam_step(net, grads, adam, config.adam);
      loss_sum += batch_loss;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    if (!std::isfinite(epoch_loss) || !net_all_finite(net))
      throw NumericError("mitigation diverged at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, epoch_loss});

    const double acc = detail::holdout_accuracy(net, holdout, labels, n_train);
    if (acc < config.accuracy_floor) continue;
    const double bias = detail::pair_bias(net, val_r, val_c);
    if (!found || std::abs(bias) < best_abs_bias) {
      found = true;
      best_abs_bias = std::abs(bias);
      result.classifier.net = net;
      result.chosen_epoch = epoch;
      result.held_out_accuracy = acc;
      result.validation_bias = bias;
    }
  }
  if (!found)
    throw NoFeasibleCheckpointError("no checkpoint reached held-out accuracy " +
                                    fmt_double(config.accuracy_floor));
  return result;
}

}  // namespace cfglyph
