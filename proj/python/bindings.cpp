#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perfex/dataset.hpp"
#include "perfex/error.hpp"
#include "perfex/eval.hpp"
#include "perfex/explain.hpp"
#include "perfex/io.hpp"
#include "perfex/metrics.hpp"
#include "perfex/parallel.hpp"
#include "perfex/synth.hpp"
#include "perfex/tree.hpp"

namespace py = pybind11;
using namespace perfex;

namespace {

py::object optional_value(const MetricValue& v) { return v.value ? py::cast(*v.value) : py::none(); }

py::dict leaf_dict(const LeafStats& leaf, const FeatureSchema& schema) {
  py::list conditions;
  for (const auto& fc : summarize_path(leaf, schema)) conditions.append(fc.to_text());
  py::dict d;
  d["id"] = leaf.leaf_id;
  d["size"] = leaf.size;
  d["value"] = optional_value(leaf.metric);
  d["support"] = leaf.metric.support;
  d["conditions"] = conditions;
  return d;
}

PredictionTable table_from_csv_text(const std::string& text, bool probabilities) {
  std::istringstream in(text);
  LoadOptions options;
  options.scores_are_probabilities = probabilities;
  return load_table(in, options);
}

std::string table_to_csv_text(const PredictionTable& t) {
  std::ostringstream out;
  write_table(out, t);
  return out.str();
}

LoadOptions layout_of(const MetaTree& tree) {
  LoadOptions options;
  options.schema = tree.schema();
  options.classes = tree.classes();
  return options;
}

PredictionTable two_gaussian_table(double delta, std::size_t n, std::uint64_t seed, std::optional<double> assumed) {
  const auto data = synth::generate_two_gaussian(delta, n, seed);
  return synth::predict(synth::ArgmaxDensity::two_gaussian(10.0, 10.0 + assumed.value_or(delta), 2.0), data);
}

PredictionTable example2d_table(std::uint64_t seed, std::size_t n) {
  const auto data = synth::generate_example2d(seed, n);
  return synth::predict(synth::AxisThreshold{data.classes, 0, 20.0, 0, 1}, data);
}

// Blobs split 50/25/25; CART is trained on the first part and predicts the
// other two, which are returned as (build, test).
std::pair<PredictionTable, PredictionTable> blobs_tables(std::size_t total, std::uint64_t seed, std::size_t depth) {
  const auto data = synth::generate_blobs(synth::paper_blobs_spec(total), seed);
  const auto parts = synth::stratified_split(data.labels, seed);
  const auto cart = synth::Cart::fit(data.select(parts.train), depth);
  return {synth::predict(cart, data.select(parts.test1)), synth::predict(cart, data.select(parts.test2))};
}

}  // namespace

PYBIND11_MODULE(_perfex, m) {
  m.doc() = "Metric-driven meta trees explaining where a classifier performs well or poorly";

  auto base = py::register_exception<Error>(m, "PerfexError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<MissingScoresError>(m, "MissingScoresError", base.ptr());
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::class_<PredictionTable>(m, "Table")
      .def_static("from_csv", [](const std::string& path, bool probabilities) {
            LoadOptions options;
            options.scores_are_probabilities = probabilities;
            return load_table_file(path, options);
          }, py::arg("path"), py::arg("probabilities") = true)
      .def_static("from_csv_text", &table_from_csv_text, py::arg("text"), py::arg("probabilities") = true)
      .def("to_csv", [](const PredictionTable& t, const std::string& path) { write_table_file(path, t); })
      .def("to_csv_text", &table_to_csv_text)
      .def_property_readonly("rows", &PredictionTable::rows)
      .def_property_readonly("has_scores", &PredictionTable::has_scores)
      .def_property_readonly("classes", [](const PredictionTable& t) { return t.classes().labels(); })
      .def_property_readonly("feature_names", [](const PredictionTable& t) {
            std::vector<std::string> names;
            for (const auto& f : t.schema().features()) names.push_back(f.name);
            return names;
          })
      .def("select", [](const PredictionTable& t, const std::vector<RowIndex>& rows) { return t.select(rows); })
      .def("__len__", &PredictionTable::rows);

  py::class_<MetaTree>(m, "Tree")
      .def_static("from_json", &deserialize)
      .def("to_json", &serialize)
      .def_property_readonly("leaf_count", &MetaTree::leaf_count)
      .def_property_readonly("depth", &MetaTree::depth)
      .def_property_readonly("metric", [](const MetaTree& t) { return t.metric().to_string(); })
      .def("assign", &assign, py::arg("table"))
      .def("leaves", [](const MetaTree& t) {
            py::list out;
            for (const auto& leaf : t.leaves()) out.append(leaf_dict(leaf, t.schema()));
            return out;
          })
      .def("explanations", [](const MetaTree& t, const PredictionTable* table, const std::string& unit_noun,
                              const std::string& phrase) {
            const auto leaves = table ? leaves_on(t, *table) : t.leaves();
            std::vector<std::string> out;
            for (const auto& leaf : leaves)
              out.push_back(render(leaf, summarize_path(leaf, t.schema()), t.metric(), unit_noun, phrase));
            return out;
          }, py::arg("table") = nullptr, py::arg("unit_noun") = "datapoints", py::arg("phrase") = "")
      .def("load_table", [](const MetaTree& t, const std::string& path) { return load_table_file(path, layout_of(t)); },
           "Load a CSV with this tree's schema and classes.");

  m.def("build_tree", [](const PredictionTable& table, const std::string& metric, std::size_t alpha,
                         std::size_t max_depth, double min_beta, std::optional<double> z,
                         std::optional<double> interval_width, std::optional<std::size_t> max_thresholds,
                         unsigned threads) {
          StoppingRule stop;
          stop.max_depth = max_depth;
          stop.min_beta = min_beta;
          if (z || interval_width) stop.confidence = ConfidenceRule{z.value_or(1.96), interval_width.value_or(0.1)};
          stop.validate();
          BuildOptions options;
          options.alpha = alpha;
          options.max_thresholds = max_thresholds;
          options.threads = resolve_threads(threads);
          py::gil_scoped_release release;
          return build(table, MetricSpec::parse(metric), stop, options);
        },
        py::arg("table"), py::arg("metric") = "accuracy", py::arg("alpha") = 100, py::arg("max_depth") = 6,
        py::arg("min_beta") = 0.05, py::arg("z") = py::none(), py::arg("interval_width") = py::none(),
        py::arg("max_thresholds") = 255, py::arg("threads") = 0);

  m.def("evaluate_tree", [](const MetaTree& tree, const PredictionTable& build_table, const PredictionTable& test,
                            const std::optional<std::string>& metric) {
          const MetricSpec spec = metric ? MetricSpec::parse(*metric) : tree.metric();
          const auto report = evaluate_tree(tree, spec, build_table, test);
          py::list leaves;
          for (const auto& leaf : report.leaves) {
            py::dict d;
            d["id"] = leaf.leaf_id;
            d["n_build"] = leaf.build_size;
            d["n_test"] = leaf.test_size;
            d["e_build"] = optional_value(leaf.build_value);
            d["e_test"] = optional_value(leaf.test_value);
            d["abs_err"] = leaf.abs_error ? py::cast(*leaf.abs_error) : py::none();
            leaves.append(d);
          }
          py::dict out;
          out["leaves"] = leaves;
          out["mae"] = report.mae ? py::cast(*report.mae) : py::none();
          out["d"] = report.spread;
          out["undefined_leaves"] = report.undefined_leaves;
          out["text"] = report.to_text();
          return out;
        },
        py::arg("tree"), py::arg("build"), py::arg("test"), py::arg("metric") = py::none());

  m.def("evaluate_metric", [](const std::string& metric, const PredictionTable& table,
                              std::optional<std::vector<RowIndex>> rows) {
          const SubsetView view = rows ? SubsetView(table, *rows) : SubsetView(table);
          const MetricValue v = evaluate(MetricSpec::parse(metric), view);
          return py::make_tuple(optional_value(v), v.support);
        },
        py::arg("metric"), py::arg("table"), py::arg("rows") = py::none(),
        "Returns (value or None, support).");

  m.def("min_samples", [](double z, double width) {
          const auto s = min_samples(z, width);
          return py::make_tuple(s.exact, s.required);
        },
        py::arg("z"), py::arg("width"));
  m.def("z_for_confidence", &z_for_confidence, py::arg("level"));

  m.def("two_gaussian_table", &two_gaussian_table, py::arg("delta"), py::arg("n_per_class"), py::arg("seed"),
        py::arg("classifier_delta") = py::none(),
        "Two 1-D Gaussian classes scored by the argmax-density classifier.");
  m.def("example2d_table", &example2d_table, py::arg("seed"), py::arg("n_per_class") = 150,
        "Two 2-D blobs with flipped labels where y > 12, scored by the x < 20 rule.");
  m.def("blobs_tables", &blobs_tables, py::arg("total") = 10000, py::arg("seed") = 0, py::arg("cart_depth") = 3);
}
