// Pipeline driver. Every subcommand reads and writes the on-disk formats
// (dataset containers, model JSON, pair sets, reports); nothing is kept
// between invocations, so any stage can be rerun in isolation. Errors leave
// no partial outputs behind and exit nonzero with a single line on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfglyph/audit.hpp"
#include "cfglyph/cfengine.hpp"
#include "cfglyph/classifier.hpp"
#include "cfglyph/codec.hpp"
#include "cfglyph/dataset.hpp"
#include "cfglyph/glyphs.hpp"
#include "cfglyph/report.hpp"

namespace {

using namespace cfglyph;
namespace fs = std::filesystem;

// "t=4,i=0.9" -> raw-unit targets in declaration order of appearance.
AttributeVector parse_do(const std::string& text) {
  AttributeVector targets;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("intervention item '" + item + "' is not name=value");
    char* end = nullptr;
    const std::string value = item.substr(eq + 1);
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
      throw ConfigError("intervention value '" + value + "' is not a number");
    targets[item.substr(0, eq)] = v;
    pos = comma + 1;
  }
  if (targets.empty()) throw ConfigError("intervention has no targets");
  return targets;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size() || item.empty())
      throw ConfigError("'" + item + "' is not a number");
    values.push_back(v);
    pos = comma + 1;
  }
  if (values.empty()) throw EmptyInputError("no values given");
  return values;
}

Classifier load_classifier(const fs::path& path) {
  Classifier clf;
  clf.net = net_from_json(nlohmann::json::parse(read_file(path)));
  if (clf.net.output_dim() != 1)
    throw FormatError("classifier net must have one output");
  return clf;
}

CodecConfig codec_config_from(const std::string& path) {
  CodecConfig config;
  if (path.empty()) return config;
  const auto j = nlohmann::json::parse(read_file(path));
  config.latent_dim = j.value("latent_dim", config.latent_dim);
  config.encoder_hidden = j.value("encoder_hidden", config.encoder_hidden);
  config.generator_hidden = j.value("generator_hidden", config.generator_hidden);
  config.epochs_warm_generator = j.value("epochs_warm_generator", config.epochs_warm_generator);
  config.epochs_warm_encoder = j.value("epochs_warm_encoder", config.epochs_warm_encoder);
  config.epochs_phase1 = j.value("epochs_phase1", config.epochs_phase1);
  config.epochs_phase2 = j.value("epochs_phase2", config.epochs_phase2);
  config.batch = j.value("batch", config.batch);
  config.lambda_z = j.value("lambda_z", config.lambda_z);
  config.lr = j.value("lr", config.lr);
  config.seed = j.value("seed", config.seed);
  return config;
}

ClassifierConfig clf_config_from(const std::string& path) {
  ClassifierConfig config;
  if (path.empty()) return config;
  const auto j = nlohmann::json::parse(read_file(path));
  config.hidden = j.value("hidden", config.hidden);
  config.epochs = j.value("epochs", config.epochs);
  config.batch = j.value("batch", config.batch);
  config.holdout_fraction = j.value("holdout_fraction", config.holdout_fraction);
  config.adam.lr = j.value("lr", config.adam.lr);
  config.seed = j.value("seed", config.seed);
  return config;
}

void write_bias_outputs(const fs::path& dir, const BiasReport& report) {
  fs::create_directories(dir);
  atomic_write(dir / "report.json", bias_report_json(report));
  atomic_write(dir / "scatter.csv", scatter_csv(report.scatter));
  atomic_write(dir / "scatter.svg", scatter_svg(report.scatter, report.label));
}

int run(int argc, char** argv) {
  CLI::App app{"counterfactual glyph pipeline"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "simulate attributes, render images, assign labels");
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--n", gen_n, "rows to generate");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->callback([&] {
    GenConfig config;
    config.n = gen_n;
    config.seed = gen_seed;
    const DatasetContainer data = generate_dataset(config);
    write_dataset(gen_out, data);
    std::size_t positives = 0;
    for (int y : data.targets) positives += y;
    std::printf("wrote %zu rows to %s (label prevalence %.3f)\n", data.size(), gen_out.c_str(),
                static_cast<double>(positives) / static_cast<double>(data.size()));
  });

  // fit-scm
  auto* fit = app.add_subcommand("fit-scm", "fit structural equations from the attribute table");
  std::string fit_data, fit_out;
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--out", fit_out, "output model JSON")->required();
  fit->callback([&] {
    const DatasetContainer data = read_dataset(fit_data);
    const StructuralModel model = fit_scm(data.graph, data.scaled_rows());
    atomic_write(fit_out, model_to_json(model).dump(2) + "\n");
    for (std::size_t i = 0; i < model.graph.size(); ++i) {
      const AttributeSpec& spec = model.graph.spec(i);
      const Equation& eq = model.equations[i];
      std::printf("%s: ", spec.name.c_str());
      switch (eq.kind) {
        case EquationKind::LinearGaussian: {
          std::printf("linear intercept=%.4f sigma=%.4f coeffs=[", eq.intercept, eq.sigma);
          for (std::size_t k = 0; k < eq.coeffs.size(); ++k)
            std::printf("%s%.4f", k ? ", " : "", eq.coeffs[k]);
          std::printf("]\n");
          break;
        }
        case EquationKind::Cpt:
          std::printf("cpt with %zu entries\n", eq.table.size());
          break;
        case EquationKind::CategoricalRoot: {
          std::printf("categorical probs=[");
          for (std::size_t k = 0; k < eq.probs.size(); ++k)
            std::printf("%s%.4f", k ? ", " : "", eq.probs[k]);
          std::printf("]\n");
          break;
        }
        case EquationKind::UniformRoot:
          std::printf("uniform root\n");
          break;
      }
    }
  });

  // train-codec
  auto* tcodec = app.add_subcommand("train-codec", "train the encoder-generator pair");
  std::string tc_data, tc_config, tc_out;
  tcodec->add_option("--data", tc_data, "dataset directory")->required();
  tcodec->add_option("--config", tc_config, "JSON config overrides");
  tcodec->add_option("--out", tc_out, "output codec directory")->required();
  tcodec->callback([&] {
    const DatasetContainer data = read_dataset(tc_data);
    const CodecConfig config = codec_config_from(tc_config);
    CodecTrainResult result = train_codec(data, config);
    save_codec(tc_out, result.codec);
    atomic_write(fs::path(tc_out) / "loss.csv", codec_loss_csv(result.log));
    if (!data.latents.empty() &&
        static_cast<int>(result.codec.latent_dim()) == data.latent_dim) {
      const CodecMetrics metrics = codec_metrics(result.codec, data);
      std::printf("mse_x %.6f  mae_z %.6f\n", metrics.mse_x, metrics.mae_z);
    } else {
      std::printf("trained (no latent metric: dims differ or no stored z)\n");
    }
  });

  // train-clf
  auto* tclf = app.add_subcommand("train-clf", "train the audited binary classifier");
  std::string tf_data, tf_config, tf_out;
  tclf->add_option("--data", tf_data, "dataset directory")->required();
  tclf->add_option("--config", tf_config, "JSON config overrides");
  tclf->add_option("--out", tf_out, "output classifier JSON")->required();
  tclf->callback([&] {
    const DatasetContainer data = read_dataset(tf_data);
    if (data.targets.empty()) throw ConfigError("dataset has no labels; rerun gen-data");
    const ClassifierConfig config = clf_config_from(tf_config);
    ClassifierTrainResult result = train_classifier(data.images, data.targets, config);
    atomic_write(tf_out, net_to_json(result.classifier.net).dump(2) + "\n");
    atomic_write(fs::path(tf_out).replace_extension(".loss.csv"),
                 classifier_loss_csv(result.log));
    std::printf("held-out accuracy %.4f\n", result.held_out_accuracy);
  });

  // cf
  auto* cf = app.add_subcommand("cf", "generate counterfactual pairs for one intervention");
  std::string cf_data, cf_codec, cf_scm, cf_do, cf_out;
  bool cf_filter = false;
  cf->add_option("--data", cf_data, "dataset directory")->required();
  cf->add_option("--codec", cf_codec, "codec directory")->required();
  cf->add_option("--scm", cf_scm, "model JSON")->required();
  cf->add_option("--do", cf_do, "intervention, e.g. t=4,i=0.9")->required();
  cf->add_option("--out", cf_out, "output pair directory")->required();
  cf->add_flag("--filter-redundant", cf_filter, "skip rows the intervention leaves unchanged");
  cf->callback([&] {
    const DatasetContainer data = read_dataset(cf_data);
    const TrainedCodec codec = load_codec(cf_codec);
    const StructuralModel model = model_from_json(nlohmann::json::parse(read_file(cf_scm)));
    InterventionSpec spec;
    spec.targets = parse_do(cf_do);
    const std::vector<CfPair> pairs = cf_batch(codec, model, data, spec, cf_filter);
    write_pairs(cf_out, pairs);
    std::size_t skipped = 0;
    for (const CfPair& pair : pairs) skipped += pair.skipped ? 1 : 0;
    std::printf("%s: %zu pairs (%zu skipped)\n", spec.display().c_str(), pairs.size(), skipped);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "target-vs-measured error for one attribute");
  std::string sw_data, sw_codec, sw_scm, sw_attr, sw_targets, sw_out;
  bool sw_reference = false;
  sweep->add_option("--data", sw_data, "dataset directory")->required();
  sweep->add_option("--codec", sw_codec, "codec directory")->required();
  sweep->add_option("--scm", sw_scm, "model JSON")->required();
  sweep->add_option("--attribute", sw_attr, "attribute to sweep")->required();
  sweep->add_option("--targets", sw_targets, "comma-separated raw target values")->required();
  sweep->add_option("--out", sw_out, "output directory")->required();
  sweep->add_flag("--reference", sw_reference, "also sweep the true renderer (needs stored z)");
  sweep->callback([&] {
    const DatasetContainer data = read_dataset(sw_data);
    const TrainedCodec codec = load_codec(sw_codec);
    const StructuralModel model = model_from_json(nlohmann::json::parse(read_file(sw_scm)));
    const SweepResult result = cf_measurement_sweep(codec, model, data, sw_attr,
                                                    parse_values(sw_targets), RenderParams{},
                                                    sw_reference);
    fs::create_directories(sw_out);
    atomic_write(fs::path(sw_out) / "sweep.csv", sweep_csv(result));
    atomic_write(fs::path(sw_out) / "sweep.json", sweep_json(result));
    std::printf("%s: median abs error %.4f over %zu points\n", sw_attr.c_str(),
                result.median_abs_error, result.points.size());
  });

  // audit
  auto* audit = app.add_subcommand("audit", "bias report over pairs or a pixel baseline");
  std::string au_clf, au_pairs, au_baseline, au_data, au_out;
  audit->add_option("--clf", au_clf, "classifier JSON")->required();
  audit->add_option("--pairs", au_pairs, "pair directory");
  audit->add_option("--baseline", au_baseline, "flip or brightness=F");
  audit->add_option("--data", au_data, "dataset directory (baseline mode)");
  audit->add_option("--out", au_out, "output directory")->required();
  audit->callback([&] {
    const Classifier clf = load_classifier(au_clf);
    BiasReport report;
    if (!au_baseline.empty()) {
      if (au_data.empty()) throw ConfigError("--baseline needs --data");
      BaselineTransform transform;
      if (au_baseline == "flip") {
        transform.kind = BaselineTransform::Kind::Flip;
      } else if (au_baseline.rfind("brightness=", 0) == 0) {
        transform.kind = BaselineTransform::Kind::Brightness;
        transform.factor = std::strtod(au_baseline.c_str() + 11, nullptr);
      } else {
        throw ConfigError("baseline must be 'flip' or 'brightness=F'");
      }
      report = audit_baseline(clf, read_dataset(au_data), transform);
    } else {
      if (au_pairs.empty()) throw ConfigError("audit needs --pairs or --baseline");
      const StoredPairs stored = read_pairs(au_pairs);
      report = audit_intervention(clf, stored.pairs, stored.intervention);
    }
    write_bias_outputs(au_out, report);
    std::printf("%s: bias %+.4f (p_flip %.4f, n %zu)%s\n", report.label.c_str(), report.bias,
                report.p_flip, report.n_pairs, report.significant ? " SIGNIFICANT" : "");
  });

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "counterfactual importance of binary attributes");
  std::string ex_clf, ex_data, ex_codec, ex_scm, ex_attrs, ex_out;
  bool ex_soft = false;
  explain_cmd->add_option("--clf", ex_clf, "classifier JSON")->required();
  explain_cmd->add_option("--data", ex_data, "dataset directory")->required();
  explain_cmd->add_option("--codec", ex_codec, "codec directory")->required();
  explain_cmd->add_option("--scm", ex_scm, "model JSON")->required();
  explain_cmd->add_option("--attributes", ex_attrs, "comma-separated binary attribute names")->required();
  explain_cmd->add_flag("--soft", ex_soft, "probability differences instead of hard labels");
  explain_cmd->add_option("--out", ex_out, "output directory")->required();
  explain_cmd->callback([&] {
    const Classifier clf = load_classifier(ex_clf);
    const DatasetContainer data = read_dataset(ex_data);
    const TrainedCodec codec = load_codec(ex_codec);
    const StructuralModel model = model_from_json(nlohmann::json::parse(read_file(ex_scm)));
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos < ex_attrs.size()) {
      std::size_t comma = ex_attrs.find(',', pos);
      if (comma == std::string::npos) comma = ex_attrs.size();
      names.push_back(ex_attrs.substr(pos, comma - pos));
      pos = comma + 1;
    }
    const ImportanceReport report = explain(clf, codec, model, data, names, ex_soft);
    fs::create_directories(ex_out);
    atomic_write(fs::path(ex_out) / "importance.json", importance_report_json(report));
    atomic_write(fs::path(ex_out) / "importance.svg", importance_svg(report));
    for (std::size_t i = 0; i < report.ranking.size(); ++i)
      std::printf("%zu. %s\n", i + 1, report.ranking[i].c_str());
  });

  // mitigate
  auto* mit = app.add_subcommand("mitigate", "fine-tune the classifier against a cf pair set");
  std::string mi_clf, mi_data, mi_pairs, mi_out;
  double mi_lambda = 1.0;
  mit->add_option("--clf", mi_clf, "classifier JSON")->required();
  mit->add_option("--data", mi_data, "dataset directory (training labels)")->required();
  mit->add_option("--pairs", mi_pairs, "pair directory")->required();
  mit->add_option("--lambda", mi_lambda, "regularizer weight");
  mit->add_option("--out", mi_out, "output directory")->required();
  mit->callback([&] {
    const Classifier clf = load_classifier(mi_clf);
    const DatasetContainer data = read_dataset(mi_data);
    if (data.targets.empty()) throw ConfigError("dataset has no labels");
    const StoredPairs stored = read_pairs(mi_pairs);
    MitigationConfig config;
    config.lambda = mi_lambda;
    const BiasReport before = audit_intervention(clf, stored.pairs, stored.intervention);
    MitigationResult result = mitigate(clf, data.images, data.targets, stored.pairs, config);
    const BiasReport after =
        audit_intervention(result.classifier, stored.pairs, stored.intervention);
    fs::create_directories(mi_out);
    atomic_write(fs::path(mi_out) / "classifier.json",
                 net_to_json(result.classifier.net).dump(2) + "\n");
    atomic_write(fs::path(mi_out) / "before.json", bias_report_json(before));
    atomic_write(fs::path(mi_out) / "after.json", bias_report_json(after));
    std::printf("bias %+.4f -> %+.4f, accuracy %.4f (epoch %d)\n", before.bias, after.bias,
                result.held_out_accuracy, result.chosen_epoch);
  });

  // export-pgm
  auto* pgm = app.add_subcommand("export-pgm", "dump dataset rows as PGM images");
  std::string pg_data, pg_rows, pg_out;
  pgm->add_option("--data", pg_data, "dataset directory")->required();
  pgm->add_option("--rows", pg_rows, "comma-separated row ids")->required();
  pgm->add_option("--out", pg_out, "output directory")->required();
  pgm->callback([&] {
    const DatasetContainer data = read_dataset(pg_data);
    fs::create_directories(pg_out);
    for (double row : parse_values(pg_rows)) {
      const std::size_t r = static_cast<std::size_t>(row);
      if (r >= data.size())
        throw OutOfRangeError("row " + std::to_string(r) + " outside the dataset");
      export_pgm(data.images[r], fs::path(pg_out) / ("row_" + std::to_string(r) + ".pgm"));
    }
    std::printf("wrote %s\n", pg_out.c_str());
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
