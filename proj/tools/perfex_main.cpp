// perfex: build, evaluate and explain meta trees over classifier prediction
// tables, and generate the synthetic datasets used to exercise them.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "perfex/dataset.hpp"
#include "perfex/error.hpp"
#include "perfex/eval.hpp"
#include "perfex/explain.hpp"
#include "perfex/io.hpp"
#include "perfex/parallel.hpp"
#include "perfex/metrics.hpp"
#include "perfex/synth.hpp"
#include "perfex/tree.hpp"

namespace {

constexpr int kExitModuleError = 1;
constexpr int kExitUsage = 2;

// Argument problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitArgs {
  std::string data;
  std::string metric = "accuracy";
  std::size_t alpha = 100;
  std::size_t max_depth = 6;
  double min_beta = 0.05;
  std::optional<double> confidence;
  std::optional<double> interval_width;
  std::optional<double> z;
  std::size_t max_thresholds = 255;
  std::string out;
  std::string unit_noun = "datapoints";
  std::string phrase;
  std::string explanations_json;
  bool split = false;
  std::uint64_t seed = 0;
  std::string report;
  bool unnormalized = false;
};

struct EvaluateArgs {
  std::string tree;
  std::string build;
  std::string test;
  std::string metric;
  std::string out;
};

struct ExplainArgs {
  std::string tree;
  std::string data;
  std::string unit_noun = "datapoints";
  std::string phrase;
  std::string json;
};

struct GenerateArgs {
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::size_t> n;
  double delta = 3.0;
  std::optional<double> classifier_delta;
  std::string classifier;
  std::optional<double> threshold;
  std::size_t cart_depth = 3;
  bool split = false;
};

perfex::MetricSpec parse_metric(const std::string& text) {
  try {
    return perfex::MetricSpec::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string split_path(const std::string& out, const std::string& part) {
  std::filesystem::path path(out);
  const std::string ext = path.has_extension() ? path.extension().string() : ".csv";
  path.replace_extension();
  return path.string() + "." + part + ext;
}

std::string render_all(const std::vector<perfex::LeafStats>& leaves, const perfex::FeatureSchema& schema,
                       const perfex::MetricSpec& metric, const std::string& unit, const std::string& phrase) {
  std::string out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (i > 0) out += "\n";
    out += perfex::render(leaves[i], perfex::summarize_path(leaves[i], schema), metric, unit, phrase) + "\n";
  }
  return out;
}

int run_fit(const FitArgs& args, unsigned threads) {
  const perfex::MetricSpec metric = parse_metric(args.metric);
  perfex::StoppingRule stop;
  stop.max_depth = args.max_depth;
  stop.min_beta = args.min_beta;
  if (args.confidence || args.interval_width || args.z) {
    perfex::ConfidenceRule rule;
    rule.z = args.z ? *args.z : perfex::z_for_confidence(args.confidence.value_or(0.95));
    rule.width = args.interval_width.value_or(0.1);
    stop.confidence = rule;
  }
  try {
    stop.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (args.alpha < 1) throw UsageError("--alpha must be at least 1");

  perfex::LoadOptions load;
  load.scores_are_probabilities = !args.unnormalized;
  const perfex::PredictionTable table = perfex::load_table_file(args.data, load);

  std::optional<perfex::PredictionTable> holdout;
  const perfex::PredictionTable* build_table = &table;
  std::optional<perfex::PredictionTable> build_part;
  if (args.split) {
    std::vector<perfex::ClassId> labels(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) labels[i] = table.true_label(i);
    const auto parts = perfex::synth::stratified_split(labels, args.seed);
    auto to_rows = [](const std::vector<std::size_t>& idx) {
      return std::vector<perfex::RowIndex>(idx.begin(), idx.end());
    };
    build_part.emplace(table.select(to_rows(parts.test1)));
    holdout.emplace(table.select(to_rows(parts.test2)));
    build_table = &*build_part;
  }

  perfex::BuildOptions options;
  options.alpha = args.alpha;
  options.max_thresholds = args.max_thresholds == 0 ? std::nullopt : std::optional<std::size_t>(args.max_thresholds);
  options.threads = threads;
  const perfex::MetaTree tree = perfex::build(*build_table, metric, stop, options);

  if (!args.out.empty()) perfex::write_file_atomic(args.out, perfex::serialize(tree));
  const auto leaves = tree.leaves();
  if (!args.explanations_json.empty()) {
    perfex::write_file_atomic(args.explanations_json, perfex::explanations_json(leaves, tree.schema(), metric));
  }
  if (tree.leaf_count() == 1) {
    std::cerr << "note: no split reached min_beta " << perfex::format_number(stop.min_beta)
              << "; the tree is a single leaf\n";
  }
  std::cout << render_all(leaves, tree.schema(), metric, args.unit_noun, args.phrase);
  if (holdout) {
    const auto report = perfex::evaluate_tree(tree, metric, *build_table, *holdout);
    if (!args.report.empty()) perfex::write_file_atomic(args.report, report.to_json());
    std::cout << "\n" << report.to_text();
  }
  return 0;
}

int run_evaluate(const EvaluateArgs& args) {
  const perfex::MetaTree tree = perfex::deserialize(perfex::read_file(args.tree));
  const perfex::MetricSpec metric = args.metric.empty() ? tree.metric() : parse_metric(args.metric);
  perfex::LoadOptions load;
  load.schema = tree.schema();
  load.classes = tree.classes();
  const auto build = perfex::load_table_file(args.build, load);
  const auto test = perfex::load_table_file(args.test, load);
  const auto report = perfex::evaluate_tree(tree, metric, build, test);
  if (!args.out.empty()) perfex::write_file_atomic(args.out, report.to_json());
  std::cout << report.to_text();
  return 0;
}

int run_explain(const ExplainArgs& args) {
  const perfex::MetaTree tree = perfex::deserialize(perfex::read_file(args.tree));
  std::vector<perfex::LeafStats> leaves;
  if (args.data.empty()) {
    leaves = tree.leaves();
  } else {
    perfex::LoadOptions load;
    load.schema = tree.schema();
    load.classes = tree.classes();
    leaves = perfex::leaves_on(tree, perfex::load_table_file(args.data, load));
  }
  if (!args.json.empty()) {
    perfex::write_file_atomic(args.json, perfex::explanations_json(leaves, tree.schema(), tree.metric()));
  }
  std::cout << render_all(leaves, tree.schema(), tree.metric(), args.unit_noun, args.phrase);
  return 0;
}

int run_generate(const GenerateArgs& args) {
  namespace synth = perfex::synth;
  synth::LabeledData data;
  std::string classifier = args.classifier;
  double default_threshold = 0.0;
  if (args.preset == "two-gaussian") {
    data = synth::generate_two_gaussian(args.delta, args.n.value_or(10000), args.seed);
    if (classifier.empty()) classifier = "argmax";
    default_threshold = 10.0 + args.classifier_delta.value_or(args.delta) / 2.0;
  } else if (args.preset == "blobs") {
    data = synth::generate_blobs(synth::paper_blobs_spec(args.n.value_or(10000)), args.seed);
    if (classifier.empty()) classifier = "cart";
    default_threshold = 15.0;
  } else if (args.preset == "example2d") {
    data = synth::generate_example2d(args.seed, args.n.value_or(150));
    if (classifier.empty()) classifier = "threshold";
    default_threshold = 20.0;
  } else {
    throw UsageError("unknown preset '" + args.preset + "'");
  }

  std::optional<synth::StratifiedSplit> parts;
  if (args.split) parts = synth::stratified_split(data.labels, args.seed);
  const synth::LabeledData training = parts ? data.select(parts->train) : data;

  synth::BuiltinClassifier model;
  if (classifier == "argmax") {
    if (args.preset == "two-gaussian") {
      model = synth::ArgmaxDensity::two_gaussian(10.0, 10.0 + args.classifier_delta.value_or(args.delta), 2.0);
    } else {
      const auto spec = args.preset == "blobs"
                            ? synth::paper_blobs_spec()
                            : std::vector<synth::GaussianClass>{{"red", {10.0, 10.0}, 2.0, 1}, {"blue", {30.0, 10.0}, 2.0, 1}};
      synth::ArgmaxDensity density;
      for (const auto& c : spec) {
        density.classes.push_back(c.label);
        density.means.push_back(c.mean);
        density.sigmas.push_back(c.sigma);
      }
      model = density;
    }
  } else if (classifier == "centroid") {
    model = synth::NearestCentroid::fit(training);
  } else if (classifier == "threshold") {
    model = synth::AxisThreshold{data.classes, 0, args.threshold.value_or(default_threshold), 0, 1};
  } else if (classifier == "cart") {
    model = synth::Cart::fit(training, args.cart_depth);
  } else {
    throw UsageError("unknown classifier '" + classifier + "'");
  }

  if (parts) {
    perfex::write_table_file(split_path(args.out, "train"), synth::predict(model, training));
    perfex::write_table_file(split_path(args.out, "test1"), synth::predict(model, data.select(parts->test1)));
    perfex::write_table_file(split_path(args.out, "test2"), synth::predict(model, data.select(parts->test2)));
  } else {
    perfex::write_table_file(args.out, synth::predict(model, data));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain where a classifier performs well or poorly with metric-driven meta trees"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: PERFEX_THREADS or all cores)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Build a meta tree and print one explanation per leaf");
  fit_cmd->add_option("--data", fit.data, "Prediction table (CSV)")->required();
  fit_cmd->add_option("--metric", fit.metric, "accuracy | precision:<c> | recall:<c> | f1:<c> | weighted_f1 | "
                                              "weighted_precision | weighted_recall | ece:<bins> | "
                                              "mean_min_score:<c>,<c>[,...]")
      ->capture_default_str();
  fit_cmd->add_option("--alpha", fit.alpha, "Minimum rows per side of a split")->capture_default_str();
  fit_cmd->add_option("--max-depth", fit.max_depth, "Maximum tree depth")->capture_default_str();
  fit_cmd->add_option("--min-beta", fit.min_beta, "Minimum metric gap for a split")->capture_default_str();
  fit_cmd->add_option("--confidence", fit.confidence, "Confidence level; enables the minimum-support rule (0.95)");
  fit_cmd->add_option("--interval-width", fit.interval_width, "Maximum CI width D; enables the minimum-support rule (0.1)");
  fit_cmd->add_option("--z", fit.z, "Z-score for the minimum-support rule (overrides --confidence)");
  fit_cmd->add_option("--max-thresholds", fit.max_thresholds, "Quantile cap per numeric feature (0 = unlimited)")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Write the tree JSON here");
  fit_cmd->add_option("--unit-noun", fit.unit_noun, "Noun for rows in explanations")->capture_default_str();
  fit_cmd->add_option("--phrase", fit.phrase, "Metric wording in explanations");
  fit_cmd->add_option("--explanations-json", fit.explanations_json, "Write explanations as JSON here");
  fit_cmd->add_flag("--split", fit.split, "Stratified 50/25/25 split: build on the first 25%, evaluate on the second");
  fit_cmd->add_option("--seed", fit.seed, "Seed for --split")->capture_default_str();
  fit_cmd->add_option("--report", fit.report, "With --split, write the evaluation report JSON here");
  fit_cmd->add_flag("--scores-unnormalized", fit.unnormalized, "Do not require score rows to sum to 1");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare leaf metrics of a tree on a build and a test table");
  eval_cmd->add_option("--tree", evaluate.tree, "Tree JSON")->required();
  eval_cmd->add_option("--build", evaluate.build, "Table the tree was built on")->required();
  eval_cmd->add_option("--test", evaluate.test, "Held-out table")->required();
  eval_cmd->add_option("--metric", evaluate.metric, "Metric (default: the tree's)");
  eval_cmd->add_option("--out", evaluate.out, "Write the report JSON here");

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Print explanations for a saved tree");
  explain_cmd->add_option("--tree", explain.tree, "Tree JSON")->required();
  explain_cmd->add_option("--data", explain.data, "Recompute leaf statistics on this table");
  explain_cmd->add_option("--unit-noun", explain.unit_noun, "Noun for rows")->capture_default_str();
  explain_cmd->add_option("--phrase", explain.phrase, "Metric wording");
  explain_cmd->add_option("--json", explain.json, "Write explanations as JSON here");

  GenerateArgs generate;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic prediction table");
  gen_cmd->add_option("--preset", generate.preset, "two-gaussian | blobs | example2d")
      ->required()
      ->check(CLI::IsMember({"two-gaussian", "blobs", "example2d"}));
  gen_cmd->add_option("--seed", generate.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", generate.out, "Output CSV")->required();
  gen_cmd->add_option("--n", generate.n, "Rows per class (blobs: total rows)");
  gen_cmd->add_option("--delta", generate.delta, "two-gaussian: class-1 mean offset")->capture_default_str();
  gen_cmd->add_option("--classifier-delta", generate.classifier_delta,
                      "two-gaussian: class-1 offset assumed by the classifier (default: --delta)");
  gen_cmd->add_option("--classifier", generate.classifier, "argmax | centroid | threshold | cart")
      ->check(CLI::IsMember({"argmax", "centroid", "threshold", "cart"}));
  gen_cmd->add_option("--threshold", generate.threshold, "threshold classifier: cut on the first feature");
  gen_cmd->add_option("--cart-depth", generate.cart_depth, "cart classifier depth")->capture_default_str();
  gen_cmd->add_flag("--split", generate.split, "Write <out>.train/.test1/.test2 (stratified 50/25/25)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit, perfex::resolve_threads(threads));
    if (eval_cmd->parsed()) return run_evaluate(evaluate);
    if (explain_cmd->parsed()) return run_explain(explain);
    if (gen_cmd->parsed()) return run_generate(generate);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModuleError;
  }
  return kExitUsage;
}
