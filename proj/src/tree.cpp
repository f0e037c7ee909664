#include "perfex/tree.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <memory>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "perfex/error.hpp"
#include "perfex/parallel.hpp"

namespace perfex {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "perfex-meta-tree";

struct Subtree {
  TreeNode node;
  std::unique_ptr<Subtree> left;
  std::unique_ptr<Subtree> right;
};

class Builder {
 public:
  Builder(const MetricSpec& metric, const StoppingRule& stop, const BuildOptions& options)
      : metric_(metric), stop_(stop), options_(options) {
    search_.alpha = options.alpha;
    search_.min_support = stop.min_support();
    search_.max_thresholds = options.max_thresholds;
  }

  std::unique_ptr<Subtree> grow(const SubsetView& view, std::size_t depth, unsigned threads) const {
    auto tree = std::make_unique<Subtree>();
    tree->node.depth = depth;
    tree->node.size = view.size();
    tree->node.metric = evaluate(metric_, view);
    if (depth < stop_.max_depth) {
      SearchConfig search = search_;
      search.threads = threads;
      auto split = best_split(view, metric_, search);
      if (split && split->beta >= stop_.min_beta) {
        tree->node.split = split->candidate;
        if (threads > 1) {
          const unsigned left_threads = threads / 2;
          auto left = std::async(std::launch::async, [&] { return grow(split->left, depth + 1, left_threads); });
          tree->right = grow(split->right, depth + 1, threads - left_threads);
          tree->left = left.get();
        } else {
          tree->left = grow(split->left, depth + 1, 1);
          tree->right = grow(split->right, depth + 1, 1);
        }
        return tree;
      }
    }
    if (options_.keep_rows) tree->node.rows.assign(view.indices().begin(), view.indices().end());
    return tree;
  }

 private:
  const MetricSpec& metric_;
  const StoppingRule& stop_;
  const BuildOptions& options_;
  SearchConfig search_;
};

void flatten(Subtree& subtree, std::vector<TreeNode>& nodes, std::size_t& next_leaf) {
  const std::size_t index = nodes.size();
  nodes.push_back(std::move(subtree.node));
  if (nodes[index].is_leaf()) {
    nodes[index].leaf_id = next_leaf++;
    return;
  }
  nodes[index].left = nodes.size();
  flatten(*subtree.left, nodes, next_leaf);
  nodes[index].right = nodes.size();
  flatten(*subtree.right, nodes, next_leaf);
}

json metric_value_to_json(const MetricValue& v) {
  json out;
  out["value"] = v.value ? json(*v.value) : json(nullptr);
  out["support"] = v.support;
  return out;
}

MetricValue metric_value_from_json(const json& j) {
  MetricValue v;
  const auto& value = j.at("value");
  if (!value.is_null()) {
    if (!value.is_number()) throw FormatError("metric value must be a number or null");
    v.value = value.get<double>();
  }
  if (!j.at("support").is_number_unsigned()) throw FormatError("support must be a non-negative integer");
  v.support = j.at("support").get<std::size_t>();
  return v;
}

std::size_t read_size(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) throw FormatError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

json node_to_json(const MetaTree& tree, std::size_t index) {
  const TreeNode& node = tree.nodes()[index];
  json out;
  if (node.is_leaf()) {
    json leaf = metric_value_to_json(node.metric);
    leaf["id"] = node.leaf_id;
    leaf["size"] = node.size;
    out["leaf"] = std::move(leaf);
    return out;
  }
  const Condition& c = *node.split;
  const auto& spec = tree.schema()[c.feature];
  out["feature"] = c.feature;
  out["name"] = spec.name;
  out["kind"] = std::string(to_string(c.kind));
  if (c.kind == ConditionKind::kEqual) {
    out["value"] = spec.categories[static_cast<std::size_t>(c.value)];
  } else {
    out["value"] = c.value;
  }
  out["size"] = node.size;
  out["node_metric"] = metric_value_to_json(node.metric);
  out["left"] = node_to_json(tree, node.left);
  out["right"] = node_to_json(tree, node.right);
  return out;
}

void node_from_json(const json& j, const FeatureSchema& schema, std::size_t depth, std::vector<TreeNode>& nodes) {
  if (!j.is_object()) throw FormatError("tree node must be an object");
  const std::size_t index = nodes.size();
  nodes.emplace_back();
  nodes[index].depth = depth;
  if (j.contains("leaf")) {
    const auto& leaf = j.at("leaf");
    if (!leaf.is_object()) throw FormatError("'leaf' must be an object");
    nodes[index].size = read_size(leaf, "size");
    nodes[index].leaf_id = read_size(leaf, "id");
    nodes[index].metric = metric_value_from_json(leaf);
    return;
  }
  Condition c;
  c.feature = read_size(j, "feature");
  if (c.feature >= schema.size()) throw FormatError("feature index out of range");
  const auto& spec = schema[c.feature];
  if (!j.at("name").is_string() || j.at("name").get<std::string>() != spec.name) {
    throw FormatError("feature name does not match schema");
  }
  const auto& kind = j.at("kind");
  if (!kind.is_string()) throw FormatError("'kind' must be a string");
  const std::string kind_text = kind.get<std::string>();
  const auto& value = j.at("value");
  if (kind_text == "le") {
    if (spec.kind == FeatureKind::kCategorical) throw FormatError("'le' split on a categorical feature");
    if (!value.is_number()) throw FormatError("threshold must be a number");
    c.kind = ConditionKind::kLessEqual;
    c.value = value.get<double>();
  } else if (kind_text == "eq") {
    if (spec.kind != FeatureKind::kCategorical) throw FormatError("'eq' split on a non-categorical feature");
    if (!value.is_string()) throw FormatError("category must be a string");
    const auto id = spec.category_id(value.get<std::string>());
    if (!id) throw FormatError("unknown category '" + value.get<std::string>() + "'");
    c.kind = ConditionKind::kEqual;
    c.value = static_cast<double>(*id);
  } else {
    throw FormatError("unknown split kind '" + kind_text + "'");
  }
  nodes[index].split = c;
  nodes[index].size = read_size(j, "size");
  nodes[index].metric = metric_value_from_json(j.at("node_metric"));
  nodes[index].left = nodes.size();
  node_from_json(j.at("left"), schema, depth + 1, nodes);
  nodes[index].right = nodes.size();
  node_from_json(j.at("right"), schema, depth + 1, nodes);
}

bool same_stopping(const StoppingRule& a, const StoppingRule& b) {
  if (a.max_depth != b.max_depth || a.min_beta != b.min_beta) return false;
  if (a.confidence.has_value() != b.confidence.has_value()) return false;
  return !a.confidence || (a.confidence->z == b.confidence->z && a.confidence->width == b.confidence->width);
}

}  // namespace

MinSamples min_samples(double z, double width) {
  if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("z must be positive");
  if (!(width > 0.0 && width <= 1.0)) throw std::invalid_argument("interval width must be in (0, 1]");
  const double exact = z * z / (width * width);
  return {exact, static_cast<std::size_t>(std::ceil(exact))};
}

double z_for_confidence(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0, 1)");
  const boost::math::normal standard;
  return boost::math::quantile(standard, 1.0 - (1.0 - level) / 2.0);
}

std::size_t StoppingRule::min_support() const {
  if (!confidence) return 0;
  return min_samples(confidence->z, confidence->width).required;
}

void StoppingRule::validate() const {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  if (!(min_beta >= 0.0) || !std::isfinite(min_beta)) throw std::invalid_argument("min_beta must be finite and >= 0");
  if (confidence) min_samples(confidence->z, confidence->width);
}

MetaTree::MetaTree(FeatureSchema schema, ClassSet classes, MetricSpec metric, StoppingRule stop,
                   std::size_t alpha, std::optional<std::size_t> max_thresholds, std::vector<TreeNode> nodes)
    : schema_(std::move(schema)),
      classes_(std::move(classes)),
      metric_(std::move(metric)),
      stop_(stop),
      alpha_(alpha),
      max_thresholds_(max_thresholds),
      nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) {
      if (node.leaf_id != leaf_nodes_.size()) throw FormatError("leaf ids are not in pre-order");
      leaf_nodes_.push_back(i);
      continue;
    }
    check_condition(schema_, *node.split);
    if (node.left != i + 1 || node.right <= node.left || node.right >= nodes_.size()) {
      throw FormatError("nodes are not in pre-order");
    }
    if (nodes_[node.left].size + nodes_[node.right].size != node.size) {
      throw FormatError("child sizes do not add up to the parent size");
    }
  }
}

std::size_t MetaTree::depth() const {
  std::size_t d = 0;
  for (const auto& node : nodes_) d = std::max(d, node.depth);
  return d;
}

std::size_t MetaTree::route(const PredictionTable& table, std::size_t row) const {
  std::size_t index = 0;
  while (!nodes_[index].is_leaf()) {
    const TreeNode& node = nodes_[index];
    index = node.split->holds(table, row) ? node.left : node.right;
  }
  return nodes_[index].leaf_id;
}

std::vector<LeafStats> MetaTree::leaves() const {
  std::vector<LeafStats> out(leaf_nodes_.size());
  std::vector<PathStep> path;
  auto visit = [&](auto&& self, std::size_t index) -> void {
    const TreeNode& node = nodes_[index];
    if (node.is_leaf()) {
      out[node.leaf_id] = LeafStats{node.leaf_id, node.size, node.metric, path};
      return;
    }
    path.push_back({*node.split, Branch::kLeft});
    self(self, node.left);
    path.back().branch = Branch::kRight;
    self(self, node.right);
    path.pop_back();
  };
  visit(visit, 0);
  return out;
}

bool MetaTree::operator==(const MetaTree& other) const {
  if (schema_ != other.schema_ || classes_ != other.classes_ || metric_ != other.metric_ ||
      !same_stopping(stop_, other.stop_) || alpha_ != other.alpha_ || max_thresholds_ != other.max_thresholds_ ||
      nodes_.size() != other.nodes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& a = nodes_[i];
    const TreeNode& b = other.nodes_[i];
    if (a.split != b.split || a.size != b.size || a.metric != b.metric || a.depth != b.depth) return false;
    if (!a.is_leaf() && (a.left != b.left || a.right != b.right)) return false;
    if (a.is_leaf() && a.leaf_id != b.leaf_id) return false;
  }
  return true;
}

MetaTree build(const PredictionTable& table, const MetricSpec& metric, const StoppingRule& stop,
               const BuildOptions& options) {
  stop.validate();
  if (options.alpha < 1) throw std::invalid_argument("alpha must be at least 1");
  const SubsetView all(table);
  const MetricValue root_value = evaluate(metric, all);
  if (!root_value.defined()) {
    throw UndefinedMetricError("metric '" + metric.to_string() + "' is undefined on the whole table");
  }
  const Builder builder(metric, stop, options);
  auto root = builder.grow(all, 0, resolve_threads(options.threads));
  std::vector<TreeNode> nodes;
  std::size_t next_leaf = 0;
  flatten(*root, nodes, next_leaf);
  return MetaTree(table.schema(), table.classes(), metric, stop, options.alpha, options.max_thresholds,
                  std::move(nodes));
}

std::vector<std::size_t> assign(const MetaTree& tree, const PredictionTable& table) {
  if (table.fingerprint() != tree.fingerprint()) {
    throw SchemaError("table layout does not match the tree (fingerprint " + table.fingerprint() + " vs " +
                      tree.fingerprint() + ")");
  }
  std::vector<std::size_t> leaf_of(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) leaf_of[i] = tree.route(table, i);
  return leaf_of;
}

std::string serialize(const MetaTree& tree) {
  json doc;
  doc["format"] = kFormatName;
  doc["version"] = kTreeFormatVersion;
  doc["metric"] = tree.metric().to_string();

  json stopping;
  stopping["alpha"] = tree.alpha();
  stopping["max_depth"] = tree.stopping().max_depth;
  stopping["min_beta"] = tree.stopping().min_beta;
  stopping["max_thresholds"] = tree.max_thresholds() ? json(*tree.max_thresholds()) : json(nullptr);
  if (const auto& ci = tree.stopping().confidence) {
    stopping["confidence"] = {{"z", ci->z}, {"interval_width", ci->width}};
  } else {
    stopping["confidence"] = nullptr;
  }
  doc["stopping"] = std::move(stopping);

  json features = json::array();
  for (const auto& f : tree.schema().features()) {
    json feature = {{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
    if (f.kind == FeatureKind::kCategorical) feature["categories"] = f.categories;
    features.push_back(std::move(feature));
  }
  doc["schema"] = {{"features", std::move(features)},
                   {"classes", tree.classes().labels()},
                   {"fingerprint", tree.fingerprint()}};
  doc["root"] = node_to_json(tree, 0);
  return doc.dump(2) + "\n";
}

MetaTree deserialize(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw FormatError("tree document must be a JSON object");
    if (doc.value("format", std::string()) != kFormatName) throw FormatError("not a meta-tree document");
    const auto& version = doc.at("version");
    if (!version.is_number_integer() || version.get<int>() != kTreeFormatVersion) {
      throw VersionMismatchError("unsupported tree format version " + version.dump() + " (expected " +
                                 std::to_string(kTreeFormatVersion) + ")");
    }
    if (!doc.at("metric").is_string()) throw FormatError("'metric' must be a string");
    MetricSpec metric = MetricSpec::parse(doc.at("metric").get<std::string>());

    const auto& s = doc.at("stopping");
    StoppingRule stop;
    stop.max_depth = read_size(s, "max_depth");
    if (!s.at("min_beta").is_number()) throw FormatError("'min_beta' must be a number");
    stop.min_beta = s.at("min_beta").get<double>();
    if (!s.at("confidence").is_null()) {
      const auto& ci = s.at("confidence");
      if (!ci.at("z").is_number() || !ci.at("interval_width").is_number()) {
        throw FormatError("confidence fields must be numbers");
      }
      stop.confidence = ConfidenceRule{ci.at("z").get<double>(), ci.at("interval_width").get<double>()};
    }
    stop.validate();
    const std::size_t alpha = read_size(s, "alpha");
    std::optional<std::size_t> max_thresholds;
    if (!s.at("max_thresholds").is_null()) max_thresholds = read_size(s, "max_thresholds");

    const auto& sc = doc.at("schema");
    std::vector<FeatureSpec> specs;
    for (const auto& f : sc.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      spec.kind = feature_kind_from_string(f.at("kind").get<std::string>());
      if (f.contains("categories")) spec.categories = f.at("categories").get<std::vector<std::string>>();
      specs.push_back(std::move(spec));
    }
    FeatureSchema schema(std::move(specs));
    ClassSet classes(sc.at("classes").get<std::vector<std::string>>());
    metric.validate(classes);
    if (sc.at("fingerprint").get<std::string>() != schema_fingerprint(schema, classes)) {
      throw FormatError("schema fingerprint does not match the schema");
    }

    std::vector<TreeNode> nodes;
    node_from_json(doc.at("root"), schema, 0, nodes);
    return MetaTree(std::move(schema), std::move(classes), std::move(metric), stop, alpha, max_thresholds,
                    std::move(nodes));
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed tree document: ") + e.what());
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid tree document: ") + e.what());
  }
}

}  // namespace perfex
