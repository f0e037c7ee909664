// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "perfex/dataset.hpp"
#include "perfex/eval.hpp"
#include "perfex/explain.hpp"
#include "perfex/metrics.hpp"
#include "perfex/parallel.hpp"
#include "perfex/splitter.hpp"
#include "perfex/synth.hpp"
#include "perfex/tree.hpp"

using namespace perfex;

namespace {

// Tolerances.
constexpr double kMinSamplesTol = 1e-9;
constexpr double kFidelityMae = 0.05;
constexpr double kShiftInversion = 0.01;
constexpr double kBlobsHigh = 0.95;
constexpr double kBlobsLow = 0.85;
constexpr double kBlobsMae = 0.05;
constexpr double kExampleLowSide = 0.95;
constexpr double kMetricTol = 1e-12;

unsigned g_threads = 1;

// Trees built by criteria 1-6, kept for the faithfulness check.
struct Built {
  std::shared_ptr<const PredictionTable> table;
  MetaTree tree;
};
std::deque<Built> g_built;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int decimals = 4) { return format_fixed(x, decimals); }

BuildOptions options(std::size_t alpha) {
  BuildOptions o;
  o.alpha = alpha;
  o.threads = g_threads;
  return o;
}

const MetaTree& keep(std::shared_ptr<const PredictionTable> table, MetaTree tree) {
  g_built.push_back({std::move(table), std::move(tree)});
  return g_built.back().tree;
}

std::pair<PredictionTable, PredictionTable> halves(const PredictionTable& t, const synth::StratifiedSplit& parts) {
  const std::vector<RowIndex> a(parts.test1.begin(), parts.test1.end());
  const std::vector<RowIndex> b(parts.test2.begin(), parts.test2.end());
  return {t.select(a), t.select(b)};
}

Outcome sign_reconstruction() {
  auto table = std::make_shared<const PredictionTable>(fixtures::sign_table());
  StoppingRule stop;
  stop.max_depth = 1;
  stop.min_beta = 0.0;
  const MetaTree& tree = keep(table, build(*table, MetricSpec::accuracy(), stop, options(1)));
  const auto leaves = tree.leaves();
  std::string detail = "alpha=1: ";
  bool pass = false;
  if (leaves.size() == 2) {
    const double a = *leaves[0].metric.value, b = *leaves[1].metric.value;
    pass = a == 0.4 && b == 0.8 && tree.root().split->value == -1.0;
    detail += "split z <= " + format_number(tree.root().split->value) + ", leaves " + fmt(a) + "/" + fmt(b) +
              ", beta " + fmt(std::abs(a - b));
  } else {
    detail += std::to_string(leaves.size()) + " leaves";
  }
  const MetaTree& two = keep(table, build(*table, MetricSpec::accuracy(), stop, options(2)));
  const auto l2 = two.leaves();
  if (l2.size() == 2) {
    detail += "; alpha=2: split z <= " + format_number(two.root().split->value) + ", leaves " +
              fmt(*l2[0].metric.value) + "/" + fmt(*l2[1].metric.value);
  }
  return {pass, detail};
}

Outcome ci_rule() {
  const auto m = min_samples(1.96, 0.1);
  return {std::abs(m.exact - 384.16) <= kMinSamplesTol && m.required == 385,
          "exact " + format_number(m.exact) + ", required " + std::to_string(m.required)};
}

Outcome two_gaussian_fidelity() {
  bool pass = true;
  std::string detail;
  for (double delta : {1.0, 2.0, 3.0, 4.0}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto data = synth::generate_two_gaussian(delta, 10000, seed);
      const auto t = synth::predict(synth::ArgmaxDensity::two_gaussian(10.0, 10.0 + delta, 2.0), data);
      auto [b, test] = halves(t, synth::stratified_split(data.labels, seed));
      auto build_table = std::make_shared<const PredictionTable>(std::move(b));
      const MetaTree& tree = keep(build_table, build(*build_table, MetricSpec::accuracy(), {}, options(100)));
      sum += evaluate_tree(tree, MetricSpec::accuracy(), *build_table, test).mae.value_or(INFINITY);
    }
    const double mae = sum / 10.0;
    pass &= mae <= kFidelityMae;
    detail += (detail.empty() ? "" : ", ") + std::string("delta ") + format_number(delta) + ": " + fmt(mae);
  }
  return {pass, "mean mae " + detail};
}

Outcome distribution_shift() {
  std::vector<double> mae;
  std::string detail;
  for (double delta : {0.0, 1.0, 2.0, 3.0}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto classifier = synth::ArgmaxDensity::two_gaussian(10.0, 13.0, 2.0);
      const auto shifted = synth::generate_two_gaussian(3.0 + delta, 5000, synth::stream_seed(seed, 0));
      const auto reference = synth::generate_two_gaussian(3.0, 5000, synth::stream_seed(seed, 1));
      auto build_table = std::make_shared<const PredictionTable>(synth::predict(classifier, shifted));
      const auto test = synth::predict(classifier, reference);
      const MetaTree& tree = keep(build_table, build(*build_table, MetricSpec::accuracy(), {}, options(100)));
      sum += evaluate_tree(tree, MetricSpec::accuracy(), *build_table, test).mae.value_or(INFINITY);
    }
    mae.push_back(sum / 20.0);
    detail += (detail.empty() ? "" : ", ") + std::string("delta ") + format_number(delta) + ": " + fmt(mae.back());
  }
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < mae.size(); ++i) {
    if (mae[i] < mae[i - 1]) {
      ++inversions;
      small &= mae[i - 1] - mae[i] <= kShiftInversion;
    }
  }
  return {inversions <= 1 && small, "mean mae " + detail + ", inversions " + std::to_string(inversions)};
}

Outcome blobs_structure() {
  const std::uint64_t seed = 1;
  const auto data = synth::generate_blobs(synth::paper_blobs_spec(10000), seed);
  const auto parts = synth::stratified_split(data.labels, seed);
  const auto cart = synth::Cart::fit(data.select(parts.train), 3);
  auto build_table = std::make_shared<const PredictionTable>(synth::predict(cart, data.select(parts.test1)));
  const auto test = synth::predict(cart, data.select(parts.test2));
  const MetaTree& tree = keep(build_table, build(*build_table, MetricSpec::accuracy(), {}, options(100)));
  const auto report = evaluate_tree(tree, MetricSpec::accuracy(), *build_table, test);
  double hi = -1, lo = 2;
  for (const auto& leaf : tree.leaves()) {
    hi = std::max(hi, *leaf.metric.value);
    lo = std::min(lo, *leaf.metric.value);
  }
  const double mae = report.mae.value_or(INFINITY);
  return {hi >= kBlobsHigh && lo <= kBlobsLow && mae <= kBlobsMae,
          std::to_string(tree.leaf_count()) + " leaves, max " + fmt(hi) + ", min " + fmt(lo) + ", mae " + fmt(mae)};
}

Outcome example2d_structure() {
  const auto data = synth::generate_example2d(1);
  auto table = std::make_shared<const PredictionTable>(
      synth::predict(synth::AxisThreshold{data.classes, 0, 20.0, 0, 1}, data));
  const MetaTree& tree = keep(table, build(*table, MetricSpec::accuracy(), {}, options(100)));
  const TreeNode& root = tree.root();
  if (root.is_leaf()) return {false, "root is a leaf"};
  const double low = *tree.nodes()[root.left].metric.value;
  const double high = *tree.nodes()[root.right].metric.value;
  const bool pass = root.split->feature == 1 && high < low && low >= kExampleLowSide;
  return {pass, "root " + tree.schema()[root.split->feature].name + " <= " + format_number(root.split->value) +
                    ", low side " + fmt(low) + ", high side " + fmt(high) + ", " +
                    std::to_string(tree.leaf_count()) + " leaves"};
}

Outcome split_oracle() {
  std::mt19937_64 rng(2024);
  int mismatches = 0, compared = 0, none = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::RandomTableOptions opt{.rows = 20 + rng() % 181,
                                         .features = 1 + rng() % 3,
                                         .classes = 2 + rng() % 2,
                                         .levels = 5 + static_cast<int>(rng() % 60)};
    const auto t = oracle::random_table(rng, opt);
    const ClassSet& k = t.classes();
    const std::size_t alpha = 1 + rng() % 8;
    for (const auto& m : {MetricSpec::accuracy(), MetricSpec::precision(k[rng() % k.size()]),
                          MetricSpec::weighted_f1(), MetricSpec::mean_min_score({k[0], k[1]})}) {
      SearchConfig config;
      config.alpha = alpha;
      config.threads = g_threads;
      const auto got = best_split(SubsetView(t), m, config);
      const auto want = oracle::brute_force_split(t, oracle::all_rows(t), m, alpha, 0);
      ++compared;
      if (!want) ++none;
      const bool same = got.has_value() == want.has_value() &&
                        (!got || (got->candidate.feature == want->feature && got->candidate.value == want->value &&
                                  got->beta == want->beta));
      mismatches += same ? 0 : 1;
    }
  }
  return {mismatches == 0, std::to_string(compared) + " searches (" + std::to_string(none) + " without a split), " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(77);
  int mismatches = 0, undefined = 0, compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const oracle::RandomTableOptions opt{.rows = 1 + rng() % 40, .features = 1, .classes = 2 + rng() % 3};
    const auto t = oracle::random_table(rng, opt);
    std::vector<RowIndex> rows;
    for (RowIndex i = 0; i < t.rows(); ++i)
      if (rng() % 3) rows.push_back(i);
    const SubsetView view(t, rows);
    const ClassSet& k = t.classes();
    const std::string c = k[rng() % k.size()];
    for (const auto& m : {MetricSpec::accuracy(), MetricSpec::precision(c), MetricSpec::recall(c), MetricSpec::f1(c),
                          MetricSpec::weighted_precision(), MetricSpec::weighted_recall(), MetricSpec::weighted_f1(),
                          MetricSpec::ece(10), MetricSpec::mean_min_score({k[0], k[k.size() - 1]})}) {
      const auto got = evaluate(m, view);
      const auto want = oracle::evaluate(m, t, rows);
      ++compared;
      undefined += want.value ? 0 : 1;
      const bool same = got.defined() == want.value.has_value() && got.support == want.support &&
                        (!want.value || std::abs(*got.value - *want.value) <= kMetricTol);
      mismatches += same ? 0 : 1;
    }
  }
  return {mismatches == 0, std::to_string(compared) + " evaluations (" + std::to_string(undefined) +
                               " undefined), " + std::to_string(mismatches) + " mismatches"};
}

// Parses rendered condition lines back into row predicates, independently of
// the summary objects that produced them.
std::function<bool(const PredictionTable&, std::size_t)> parse_condition(const std::string& text,
                                                                         const FeatureSchema& schema) {
  auto number = [](const std::string& s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
  };
  for (const std::string op : {" not in {", " <= ", " != ", " > ", " = "}) {
    const auto at = text.find(op);
    if (at == std::string::npos) continue;
    const std::size_t j = *schema.index_of(text.substr(0, at));
    const FeatureSpec& f = schema[j];
    std::string rhs = text.substr(at + op.size());
    auto value_of = [&](const std::string& s) {
      return f.kind == FeatureKind::kCategorical ? static_cast<double>(*f.category_id(s)) : number(s);
    };
    if (op == " not in {") {
      std::vector<double> out;
      rhs.pop_back();
      std::istringstream in(rhs);
      for (std::string item; std::getline(in, item, ',');) out.push_back(value_of(item.substr(item[0] == ' ')));
      return [j, out](const PredictionTable& t, std::size_t r) {
        return std::find(out.begin(), out.end(), t.value(r, j)) == out.end();
      };
    }
    const double v = value_of(rhs);
    if (op == " <= ") return [j, v](const PredictionTable& t, std::size_t r) { return t.value(r, j) <= v; };
    if (op == " > ") return [j, v](const PredictionTable& t, std::size_t r) { return t.value(r, j) > v; };
    if (op == " != ") return [j, v](const PredictionTable& t, std::size_t r) { return t.value(r, j) != v; };
    return [j, v](const PredictionTable& t, std::size_t r) { return t.value(r, j) == v; };
  }
  throw std::runtime_error("unparsed condition '" + text + "'");
}

Outcome faithfulness() {
  std::size_t leaves = 0, unfaithful = 0;
  for (const auto& [table, tree] : g_built) {
    for (const auto& leaf : tree.leaves()) {
      ++leaves;
      const std::string block = render(leaf, summarize_path(leaf, tree.schema()), tree.metric());
      std::vector<std::function<bool(const PredictionTable&, std::size_t)>> preds;
      std::istringstream in(block);
      std::string line;
      while (std::getline(in, line)) {
        if (line.rfind("  ", 0) != 0 || line.rfind("  (no conditions", 0) == 0) continue;
        std::istringstream parts(line.substr(2));
        std::string pending;
        // A numeric range renders as "a > x, a <= y".
        for (std::string token; std::getline(parts, token, ',');) {
          pending += token;
          if (pending.find(" not in {") != std::string::npos && pending.back() != '}') {
            pending += ",";
            continue;
          }
          preds.push_back(parse_condition(pending.substr(pending[0] == ' '), tree.schema()));
          pending.clear();
        }
      }
      std::vector<RowIndex> rows;
      for (std::size_t i = 0; i < table->rows(); ++i) {
        if (std::all_of(preds.begin(), preds.end(), [&](const auto& p) { return p(*table, i); }))
          rows.push_back(static_cast<RowIndex>(i));
      }
      unfaithful += rows == tree.nodes()[tree.leaf_node(leaf.leaf_id)].rows ? 0 : 1;
    }
  }

  LeafStats paper;
  paper.size = 134;
  paper.metric = {0.68, 134};
  paper.path = {{{0, ConditionKind::kLessEqual, 12.39}, Branch::kLeft},
                {{0, ConditionKind::kLessEqual, 10.77}, Branch::kRight}};
  const FeatureSchema schema({{"length", FeatureKind::kNumeric, {}}});
  const std::string expected =
      "There are 134 datapoints for which the\n"
      "following conditions hold:\n"
      "  length > 10.77, length <= 12.39\n"
      "and for these datapoints accuracy is 0.68";
  const bool verbatim = render(paper, summarize_path(paper, schema), MetricSpec::accuracy()) == expected;
  return {unfaithful == 0 && verbatim, std::to_string(g_built.size()) + " trees, " + std::to_string(leaves) +
                                           " leaves, " + std::to_string(unfaithful) + " unfaithful; verbatim block " +
                                           (verbatim ? "matches" : "differs")};
}

// generate -> predict -> csv -> fit -> evaluate, all outputs as text.
std::vector<std::string> pipeline(unsigned threads) {
  const auto data = synth::generate_blobs(synth::paper_blobs_spec(6000), 42);
  const auto parts = synth::stratified_split(data.labels, 42);
  const auto cart = synth::Cart::fit(data.select(parts.train), 3);
  std::ostringstream csv1, csv2;
  write_table(csv1, synth::predict(cart, data.select(parts.test1)));
  write_table(csv2, synth::predict(cart, data.select(parts.test2)));
  std::istringstream in1(csv1.str()), in2(csv2.str());
  const auto build_table = load_table(in1);
  LoadOptions load;
  load.schema = build_table.schema();
  load.classes = build_table.classes();
  const auto test = load_table(in2, load);
  BuildOptions o;
  o.alpha = 50;
  o.threads = threads;
  const auto tree = build(build_table, MetricSpec::weighted_f1(), {}, o);
  const auto report = evaluate_tree(tree, MetricSpec::weighted_f1(), build_table, test);
  return {csv1.str(), csv2.str(), serialize(tree), report.to_json(), report.to_text()};
}

Outcome determinism() {
  const auto a = pipeline(1);
  const auto b = pipeline(1);
  const auto c = pipeline(std::max(4u, g_threads));
  return {a == b && a == c, "repeat " + std::string(a == b ? "identical" : "differs") + ", threads 1 vs " +
                                std::to_string(std::max(4u, g_threads)) + " " + (a == c ? "identical" : "differs")};
}

}  // namespace

int main() {
  g_threads = resolve_threads(0);
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "sign-example reconstruction", sign_reconstruction},
      {2, "ci minimum-sample rule", ci_rule},
      {3, "two-gaussian fidelity", two_gaussian_fidelity},
      {4, "distribution-shift trend", distribution_shift},
      {5, "gaussian-blobs structure", blobs_structure},
      {6, "2-d example structure", example2d_structure},
      {7, "split-search oracle", split_oracle},
      {8, "metric oracle", metric_oracle},
      {9, "explanation faithfulness", faithfulness},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
