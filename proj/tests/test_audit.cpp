#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cfglyph/audit.hpp"
#include "cfglyph/cfengine.hpp"
#include "cfglyph/classifier.hpp"
#include "cfglyph/codec.hpp"
#include "cfglyph/glyphs.hpp"
#include "cfglyph/nn.hpp"
#include "support/datasets.hpp"

using namespace cfglyph;
using cfglyph::testsupport::slice;

namespace {

const DatasetContainer& corpus() {
  static const DatasetContainer data = [] {
    GenConfig gen;
    gen.n = 1500;
    gen.seed = 31;
    return generate_dataset(gen);
  }();
  return data;
}

const StructuralModel& model() {
  static const StructuralModel m = ground_truth_scm();
  return m;
}

const OracleCodec& oracle() {
  static const OracleCodec codec(corpus(), RenderParams{});
  return codec;
}

/// Classifier trained on the rule-generated labels; the rule leans on
/// intensity, so an intensity intervention must move its decisions.
const ClassifierTrainResult& planted() {
  static const ClassifierTrainResult result = [] {
    ClassifierConfig config;
    config.hidden = {128, 64};
    config.epochs = 50;
    config.batch = 128;
    config.holdout_fraction = 0.2;
    config.adam.lr = 2e-3;
    config.seed = 6;
    return train_classifier(corpus().images, corpus().targets, config);
  }();
  return result;
}

InterventionSpec do_raw(const std::string& name, double value) {
  InterventionSpec spec;
  spec.targets[name] = value;
  return spec;
}

/// do(i=0.95) on the 300 rows the classifier never trained on.
const std::vector<CfPair>& bright_pairs() {
  static const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 1200, 1500), do_raw("i", 0.95));
  return pairs;
}

std::vector<LabelPair> pairs_from_counts(std::size_t n00, std::size_t n01, std::size_t n10,
                                         std::size_t n11) {
  std::vector<LabelPair> out;
  for (std::size_t k = 0; k < n00; ++k) out.push_back({0, 0});
  for (std::size_t k = 0; k < n01; ++k) out.push_back({0, 1});
  for (std::size_t k = 0; k < n10; ++k) out.push_back({1, 0});
  for (std::size_t k = 0; k < n11; ++k) out.push_back({1, 1});
  return out;
}

/// Single linear unit over the four pixels of a 2 by 2 image.
Classifier pixel_classifier(std::vector<double> weights, double bias) {
  Classifier clf;
  Rng rng(1);
  clf.net = make_net({weights.size(), 1}, {Activation::Linear}, rng);
  std::copy(weights.begin(), weights.end(), clf.net.layers[0].w.row(0));
  clf.net.layers[0].b[0] = bias;
  return clf;
}

/// Codec whose decoded image spells out the two binary attributes in its
/// first two pixels; the latent carries nothing.
class AttributeStencilCodec : public Codec {
public:
  std::size_t latent_dim() const override { return 1; }
  std::vector<double> encode(const Image&, const AttributeVector&) const override {
    return {0.0};
  }
  Image decode(const std::vector<double>&, const AttributeVector& a) const override {
    Image img(2, 2);
    img.pixels = {a.at("a"), a.at("b"), 0.0, 0.0};
    return img;
  }
};

/// Two independent binary roots, each a coin flip.
StructuralModel binary_pair_model() {
  StructuralModel m;
  m.graph = build_graph({AttributeSpec::binary("a"), AttributeSpec::binary("b")});
  m.equations = {Equation::cpt({0.5}), Equation::cpt({0.5})};
  return m;
}

DatasetContainer binary_pair_rows() {
  DatasetContainer data;
  data.graph = build_graph({AttributeSpec::binary("a"), AttributeSpec::binary("b")});
  data.width = 2;
  data.height = 2;
  data.attrs_raw = {{{"a", 1.0}, {"b", 0.0}}, {{"a", 0.0}, {"b", 1.0}}};
  data.images = {Image(2, 2), Image(2, 2)};
  return data;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("bias is the signed flip-count difference over all pairs") {
  // 1000 flips among 5556 pairs, 937 of them favorable: the flip rate is
  // 0.180 and the bias lands near 0.157.
  const BiasReport narrow = bias_from_labels(pairs_from_counts(3000, 937, 63, 1556), "narrow");
  CHECK(narrow.n_pairs == 5556);
  CHECK(narrow.label == "narrow");
  CHECK(narrow.bias == (937.0 - 63.0) / 5556.0);
  CHECK_THAT(narrow.bias, Catch::Matchers::WithinAbs(0.158, 0.002));
  CHECK_THAT(narrow.p_flip, Catch::Matchers::WithinAbs(0.180, 0.001));
  CHECK(narrow.p_01 == 937.0 / 1000.0);
  CHECK(narrow.p_10 == 63.0 / 1000.0);
  CHECK(narrow.significant);

  // 1000 flips among 13699 pairs leaning slightly unfavorable.
  const BiasReport faint = bias_from_labels(pairs_from_counts(9000, 436, 564, 3699));
  CHECK(faint.n_pairs == 13699);
  CHECK(faint.bias == (436.0 - 564.0) / 13699.0);
  CHECK_THAT(faint.bias, Catch::Matchers::WithinAbs(-0.009, 0.002));
  CHECK_FALSE(faint.significant);
}

TEST_CASE("the flip-rate decomposition matches the joint counts on random multisets") {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng.below(60) + 1;
    std::vector<LabelPair> pairs(n);
    for (LabelPair& p : pairs) {
      p.y_r = static_cast<int>(rng.below(2));
      p.y_c = static_cast<int>(rng.below(2));
    }
    const BiasReport report = bias_from_labels(pairs);
    CHECK(report.bias >= -1.0);
    CHECK(report.bias <= 1.0);
    CHECK(std::abs(report.bias) <= report.p_flip);
    CHECK_THAT(report.bias, Catch::Matchers::WithinAbs(
                                report.p_flip * (report.p_01 - report.p_10), 1e-12));
    if (report.p_flip > 0.0)
      CHECK_THAT(report.p_01 + report.p_10, Catch::Matchers::WithinAbs(1.0, 1e-12));
    else
      CHECK(report.p_01 + report.p_10 == 0.0);
  }
}

TEST_CASE("balanced flips cancel and swapping the labels negates the bias") {
  const BiasReport balanced = bias_from_labels(pairs_from_counts(10, 7, 7, 4));
  CHECK(balanced.bias == 0.0);
  CHECK(balanced.p_flip == 14.0 / 28.0);
  CHECK_FALSE(balanced.significant);

  std::vector<LabelPair> forward = pairs_from_counts(5, 9, 2, 11);
  std::vector<LabelPair> swapped = forward;
  for (LabelPair& p : swapped) std::swap(p.y_r, p.y_c);
  CHECK(bias_from_labels(swapped).bias == -bias_from_labels(forward).bias);
}

TEST_CASE("the significance threshold is configurable and strict") {
  // Bias exactly 0.25: above a 0.2 threshold, not above 0.25 itself.
  const std::vector<LabelPair> pairs = pairs_from_counts(2, 1, 0, 1);
  CHECK(bias_from_labels(pairs, "", 0.2).significant);
  CHECK_FALSE(bias_from_labels(pairs, "", 0.25).significant);
  CHECK_FALSE(bias_from_labels(pairs, "", 0.3).significant);
}

TEST_CASE("bias needs at least one live pair") {
  CHECK_THROWS_AS(bias_from_labels({}), EmptyInputError);

  std::vector<CfPair> all_skipped = cf_batch(oracle(), model(), slice(corpus(), 0, 3),
                                             do_raw("i", 0.95));
  for (CfPair& pair : all_skipped) pair.skipped = true;
  CHECK_THROWS_AS(audit_intervention(planted().classifier, all_skipped), EmptyInputError);
  CHECK_THROWS_AS(audit_baseline(planted().classifier, DatasetContainer{}, BaselineTransform{}),
                  EmptyInputError);
}

TEST_CASE("a constant classifier shows zero bias under any intervention") {
  // Zero weights and a large positive bias answer 1 regardless of the image.
  const std::size_t px = corpus().images[0].pixels.size();
  const Classifier constant = pixel_classifier(std::vector<double>(px, 0.0), 20.0);
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 10), do_raw("i", 0.95));
  const BiasReport report = audit_intervention(constant, pairs);
  CHECK(report.p_flip == 0.0);
  CHECK(report.bias == 0.0);
  CHECK(report.p_01 == 0.0);
  CHECK(report.p_10 == 0.0);
  CHECK_FALSE(report.significant);
}

TEST_CASE("a classifier reading only empty corners cannot be flipped") {
  // Premise: the glyph never reaches the top-left corner pixel, in the
  // originals or in the generated pair images.
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 10), do_raw("s", 0.5));
  for (const CfPair& pair : pairs) {
    REQUIRE(pair.x_r.pixels[0] == 0.0);
    REQUIRE(pair.x_c.pixels[0] == 0.0);
  }
  std::vector<double> weights(corpus().images[0].pixels.size(), 0.0);
  weights[0] = 1.0;
  const BiasReport report = audit_intervention(pixel_classifier(weights, -5.0), pairs);
  CHECK(report.p_flip == 0.0);
  CHECK(report.bias == 0.0);
  for (const ScatterPoint& point : report.scatter) CHECK(point.y_r == point.y_c);
}

TEST_CASE("intervention audits keep the raw probabilities of every live pair") {
  const BiasReport report =
      audit_intervention(planted().classifier, bright_pairs(), do_raw("i", 0.95).display());
  REQUIRE(report.n_pairs == 300);
  REQUIRE(report.scatter.size() == 300);
  CHECK(report.label == "do(i=0.95)");
  for (const ScatterPoint& point : report.scatter) {
    CHECK(point.prob_r > 0.0);
    CHECK(point.prob_r < 1.0);
    CHECK(point.prob_c > 0.0);
    CHECK(point.prob_c < 1.0);
    CHECK(point.y_r == (point.prob_r > 0.5 ? 1 : 0));
    CHECK(point.y_c == (point.prob_c > 0.5 ? 1 : 0));
  }

  // Skipped pairs contribute neither labels nor scatter points.
  std::vector<CfPair> pairs(bright_pairs().begin(), bright_pairs().begin() + 10);
  pairs[0].skipped = true;
  pairs[7].skipped = true;
  const BiasReport partial = audit_intervention(planted().classifier, pairs);
  CHECK(partial.n_pairs == 8);
  CHECK(partial.scatter.size() == 8);
}

TEST_CASE("the audit finds the planted intensity dependence") {
  // Seeded campaign: held-out accuracy 0.867, bias 0.083 with every flip
  // favorable, well above the 0.05 significance line.
  CHECK(planted().held_out_accuracy >= 0.85);
  const BiasReport report =
      audit_intervention(planted().classifier, bright_pairs(), "do(i=0.95)");
  CHECK(report.bias > kBiasSignificance);
  CHECK(report.significant);
  CHECK(report.p_01 > report.p_10);
}

TEST_CASE("shape interventions the label rule ignores stay insignificant") {
  std::vector<InterventionSpec> shapes;
  for (int c = 0; c < 4; ++c) shapes.push_back(do_raw("l", static_cast<double>(c)));
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 1200, 1500), shapes);
  const BiasReport report = audit_intervention(planted().classifier, pairs, "do(l=*)");
  // Seeded campaign: bias -0.005 at flip rate 0.068.
  REQUIRE(report.n_pairs == 1200);
  CHECK(std::abs(report.bias) < kBiasSignificance);
  CHECK_FALSE(report.significant);
}

TEST_CASE("pixel baselines sit far below the planted causal bias") {
  // Mirror-symmetric shapes only, so the flip is a label-preserving
  // transform and any verdict change is classifier noise.
  DatasetContainer symmetric;
  symmetric.graph = corpus().graph;
  symmetric.width = corpus().width;
  symmetric.height = corpus().height;
  for (std::size_t r = 0; r < corpus().size(); ++r) {
    const double l = corpus().attrs_raw[r].at("l");
    if (l == 0.0 || l == 2.0) {
      symmetric.attrs_raw.push_back(corpus().attrs_raw[r]);
      symmetric.images.push_back(corpus().images[r]);
    }
  }
  const BiasReport flip = audit_baseline(planted().classifier, symmetric, BaselineTransform{});
  // Seeded campaign: 1204 symmetric rows, bias 0.008 at flip rate 0.078.
  REQUIRE(flip.n_pairs == symmetric.size());
  CHECK(flip.label == "horizontal_flip");
  CHECK(std::abs(flip.bias) < 0.02);
  CHECK_FALSE(flip.significant);
  const BiasReport causal = audit_intervention(planted().classifier, bright_pairs());
  CHECK(std::abs(flip.bias) < causal.bias);

  // Brightness at factor 1 is the identity, so nothing can flip.
  BaselineTransform unit;
  unit.kind = BaselineTransform::Kind::Brightness;
  unit.factor = 1.0;
  const BiasReport identity =
      audit_baseline(planted().classifier, slice(corpus(), 0, 50), unit);
  CHECK(identity.label == "brightness(1)");
  CHECK(identity.p_flip == 0.0);
  CHECK(identity.bias == 0.0);
  for (const ScatterPoint& point : identity.scatter) CHECK(point.prob_r == point.prob_c);
}

TEST_CASE("importance is the decision difference between forcing an attribute on and off") {
  const AttributeStencilCodec codec;
  const StructuralModel m = binary_pair_model();
  const DatasetContainer rows = binary_pair_rows();

  // The classifier reads the pixel that spells attribute a: forcing a on
  // turns its answer on, and b has no path to the decision.
  const Classifier reads_a = pixel_classifier({8.0, 0.0, 0.0, 0.0}, -4.0);
  const ImportanceReport hard = explain(reads_a, codec, m, rows, {"a", "b"});
  REQUIRE(hard.attributes == std::vector<std::string>{"a", "b"});
  REQUIRE(hard.local.size() == 2);
  for (const std::vector<double>& row : hard.local) {
    CHECK(row[0] == 1.0);
    CHECK(row[1] == 0.0);
  }
  CHECK(hard.global_score == std::vector<double>{1.0, 0.0});
  CHECK(hard.ranking == std::vector<std::string>{"a", "b"});
  CHECK_FALSE(hard.soft);

  // A negated readout makes a harmful: the ranking puts the neutral b first.
  const Classifier shuns_a = pixel_classifier({-8.0, 0.0, 0.0, 0.0}, 4.0);
  const ImportanceReport negated = explain(shuns_a, codec, m, rows, {"a", "b"});
  CHECK(negated.global_score == std::vector<double>{-1.0, 0.0});
  CHECK(negated.ranking == std::vector<std::string>{"b", "a"});
}

TEST_CASE("soft importance keeps the probability differences") {
  const AttributeStencilCodec codec;
  const Classifier reads_a = pixel_classifier({8.0, 0.0, 0.0, 0.0}, -4.0);
  const ImportanceReport soft =
      explain(reads_a, codec, binary_pair_model(), binary_pair_rows(), {"a", "b"}, true);
  CHECK(soft.soft);
  // Forcing a flips the logit between -4 and +4; b never moves it.
  CHECK_THAT(soft.global_score[0],
             Catch::Matchers::WithinAbs(sigmoid(4.0) - sigmoid(-4.0), 1e-12));
  CHECK_THAT(soft.global_score[1], Catch::Matchers::WithinAbs(0.0, 1e-12));
  for (const std::vector<double>& row : soft.local) {
    CHECK(row[0] > 0.9);
    CHECK(row[0] < 1.0);
  }
}

TEST_CASE("importance ties rank alphabetically and keep the requested order") {
  const AttributeStencilCodec codec;
  // Zero weights leave every answer at label 0, so all scores tie at zero.
  const Classifier indifferent = pixel_classifier({0.0, 0.0, 0.0, 0.0}, 0.0);
  const ImportanceReport report =
      explain(indifferent, codec, binary_pair_model(), binary_pair_rows(), {"b", "a"});
  CHECK(report.attributes == std::vector<std::string>{"b", "a"});
  CHECK(report.global_score == std::vector<double>{0.0, 0.0});
  CHECK(report.ranking == std::vector<std::string>{"a", "b"});
}

TEST_CASE("importance rejects non-binary attributes and empty inputs") {
  const AttributeStencilCodec codec;
  const Classifier clf = pixel_classifier({0.0, 0.0, 0.0, 0.0}, 0.0);
  const DatasetContainer rows = binary_pair_rows();

  CHECK_THROWS_AS(explain(clf, codec, model(), slice(corpus(), 0, 1), {"t"}),
                  NonBinaryAttributeError);
  CHECK_THROWS_AS(explain(clf, codec, model(), slice(corpus(), 0, 1), {"l"}),
                  NonBinaryAttributeError);
  CHECK_THROWS_AS(explain(clf, codec, binary_pair_model(), rows, {"zz"}),
                  UnknownAttributeError);
  CHECK_THROWS_AS(explain(clf, codec, binary_pair_model(), DatasetContainer{}, {"a"}),
                  EmptyInputError);
  CHECK_THROWS_AS(explain(clf, codec, binary_pair_model(), rows, {}), EmptyInputError);
}

TEST_CASE("mitigation drives the planted bias under the line without losing accuracy") {
  // Fine-tune pairs from rows the evaluation never sees, pulling intensity
  // both down and up so the regularizer brackets the sensitive range.
  const std::vector<CfPair> fit_pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 1000),
               std::vector<InterventionSpec>{do_raw("i", 0.45), do_raw("i", 0.95)});
  REQUIRE(fit_pairs.size() == 2000);

  MitigationConfig config;
  config.lambda = 1.0;
  config.epochs = 16;
  config.batch = 128;
  config.adam.lr = 1e-3;
  config.seed = 13;
  const MitigationResult fixed =
      mitigate(planted().classifier, corpus().images, corpus().targets, fit_pairs, config);

  // Seeded campaign: epoch 15 wins with held-out accuracy 0.887 against the
  // planted 0.867, and the audited bias falls from 0.083 to 0.033.
  REQUIRE(fixed.log.size() == 16);
  for (std::size_t k = 0; k < fixed.log.size(); ++k)
    CHECK(fixed.log[k].epoch == static_cast<int>(k) + 1);
  CHECK(fixed.chosen_epoch >= 1);
  CHECK(fixed.chosen_epoch <= 16);
  CHECK(fixed.held_out_accuracy >= config.accuracy_floor);
  CHECK(fixed.held_out_accuracy >= planted().held_out_accuracy - 0.02);
  CHECK(std::abs(fixed.validation_bias) < kBiasSignificance);

  const BiasReport post = audit_intervention(fixed.classifier, bright_pairs());
  CHECK(std::abs(post.bias) < kBiasSignificance);
  CHECK_FALSE(post.significant);
  const BiasReport pre = audit_intervention(planted().classifier, bright_pairs());
  CHECK(std::abs(post.bias) < pre.bias);
}

TEST_CASE("a zero regularizer weight never reads the pair images during training") {
  const DatasetContainer sub = slice(corpus(), 0, 300);
  const std::vector<CfPair> dim_pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 50), do_raw("i", 0.45));
  const std::vector<CfPair> shape_pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 50), do_raw("l", 1.0));

  MitigationConfig config;
  config.lambda = 0.0;
  config.epochs = 3;
  config.batch = 64;
  config.accuracy_floor = 0.0;
  config.seed = 5;
  const MitigationResult a =
      mitigate(planted().classifier, sub.images, sub.targets, dim_pairs, config);
  const MitigationResult b =
      mitigate(planted().classifier, sub.images, sub.targets, shape_pairs, config);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) CHECK(a.log[k].loss == b.log[k].loss);
}

TEST_CASE("mitigation is reproducible seed for seed") {
  const DatasetContainer sub = slice(corpus(), 0, 300);
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 40), do_raw("i", 0.95));
  MitigationConfig config;
  config.epochs = 2;
  config.batch = 64;
  config.accuracy_floor = 0.0;
  config.seed = 8;
  const MitigationResult a =
      mitigate(planted().classifier, sub.images, sub.targets, pairs, config);
  const MitigationResult b =
      mitigate(planted().classifier, sub.images, sub.targets, pairs, config);
  CHECK(a.chosen_epoch == b.chosen_epoch);
  CHECK(a.held_out_accuracy == b.held_out_accuracy);
  CHECK(a.validation_bias == b.validation_bias);
  CHECK(net_to_json(a.classifier.net).dump() == net_to_json(b.classifier.net).dump());
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) CHECK(a.log[k].loss == b.log[k].loss);
}

TEST_CASE("an unreachable accuracy floor leaves no checkpoint to choose") {
  const DatasetContainer sub = slice(corpus(), 0, 200);
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 30), do_raw("i", 0.95));
  MitigationConfig config;
  config.epochs = 2;
  config.batch = 64;
  config.accuracy_floor = 1.01;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs, config),
                  NoFeasibleCheckpointError);
}

TEST_CASE("mitigation validates its configuration and inputs") {
  const DatasetContainer sub = slice(corpus(), 0, 100);
  const std::vector<CfPair> pairs =
      cf_batch(oracle(), model(), slice(corpus(), 0, 20), do_raw("i", 0.95));
  MitigationConfig config;
  config.epochs = 1;
  config.batch = 32;
  config.accuracy_floor = 0.0;

  std::vector<int> short_labels(sub.targets.begin(), sub.targets.end() - 1);
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, short_labels, pairs, config),
                  DimensionError);

  MitigationConfig zero_epochs = config;
  zero_epochs.epochs = 0;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs, zero_epochs),
                  ConfigError);
  MitigationConfig zero_batch = config;
  zero_batch.batch = 0;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs, zero_batch),
                  ConfigError);
  MitigationConfig negative_lambda = config;
  negative_lambda.lambda = -0.5;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs,
                           negative_lambda),
                  ConfigError);
  MitigationConfig no_holdout = config;
  no_holdout.holdout_fraction = 0.0;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs, no_holdout),
                  ConfigError);
  MitigationConfig all_holdout = config;
  all_holdout.holdout_fraction = 1.0;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, pairs, all_holdout),
                  ConfigError);

  // One live pair cannot be split into fine-tune and validation sides.
  std::vector<CfPair> lone(pairs.begin(), pairs.begin() + 1);
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, lone, config),
                  EmptyInputError);
  std::vector<CfPair> all_skipped = pairs;
  for (CfPair& pair : all_skipped) pair.skipped = true;
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, all_skipped, config),
                  EmptyInputError);

  // Pair images and corpus images must agree in size, and the classifier
  // must match both.
  std::vector<CfPair> tiny_pairs = pairs;
  tiny_pairs[0].x_c = Image(5, 5);
  CHECK_THROWS_AS(mitigate(planted().classifier, sub.images, sub.targets, tiny_pairs, config),
                  DimensionError);
  const std::vector<Image> tiny_images(sub.size(), Image(5, 5));
  std::vector<CfPair> small = pairs;
  for (CfPair& pair : small) {
    pair.x_r = Image(5, 5);
    pair.x_c = Image(5, 5);
  }
  CHECK_THROWS_AS(mitigate(planted().classifier, tiny_images, sub.targets, small, config),
                  DimensionError);
}
