#include "perfex/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "perfex/error.hpp"
#include "perfex/io.hpp"

namespace perfex {

namespace {

constexpr std::string_view kTrueColumn = "__true__";
constexpr std::string_view kPredColumn = "__pred__";
constexpr std::string_view kScorePrefix = "__score_";
constexpr double kProbabilitySumTolerance = 1e-6;

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Splits one CSV record. Fields may be double-quoted; quotes inside a quoted
// field are doubled.
std::vector<std::string> split_record(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      if (!field.empty() || was_quoted) throw ParseError(row, "unexpected quote");
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw ParseError(row, "text after closing quote");
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError(row, "unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

FeatureSpec infer_feature(const std::string& name, const std::vector<std::vector<std::string>>& cells,
                          std::size_t column) {
  bool numeric = true;
  std::set<double> distinct;
  for (const auto& record : cells) {
    const auto value = parse_number(record[column]);
    if (!value) {
      numeric = false;
      break;
    }
    if (distinct.size() <= 2) distinct.insert(*value);
  }
  FeatureSpec spec{name, FeatureKind::kNumeric, {}};
  if (!numeric) {
    std::set<std::string> categories;
    for (const auto& record : cells) categories.insert(record[column]);
    spec.kind = FeatureKind::kCategorical;
    spec.categories.assign(categories.begin(), categories.end());
  } else if (distinct.size() <= 2 &&
             std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 0.0 || v == 1.0; })) {
    spec.kind = FeatureKind::kBinary;
  }
  return spec;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumeric:
      return "numeric";
    case FeatureKind::kBinary:
      return "binary";
    case FeatureKind::kCategorical:
      return "categorical";
  }
  return "numeric";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "numeric") return FeatureKind::kNumeric;
  if (text == "binary") return FeatureKind::kBinary;
  if (text == "categorical") return FeatureKind::kCategorical;
  throw SchemaError("unknown feature kind '" + std::string(text) + "'");
}

std::string_view to_string(ConditionKind kind) {
  return kind == ConditionKind::kLessEqual ? "le" : "eq";
}

std::optional<std::size_t> FeatureSpec::category_id(std::string_view value) const {
  const auto it = std::find(categories.begin(), categories.end(), value);
  if (it == categories.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories.begin());
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  if (features_.empty()) throw SchemaError("schema needs at least one feature");
  std::set<std::string_view> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw SchemaError("feature names must be non-empty");
    if (f.name.starts_with("__")) throw SchemaError("feature name '" + f.name + "' uses the reserved '__' prefix");
    if (!names.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::kCategorical) {
      if (f.categories.empty()) throw SchemaError("categorical feature '" + f.name + "' has no categories");
      std::set<std::string_view> seen(f.categories.begin(), f.categories.end());
      if (seen.size() != f.categories.size()) {
        throw SchemaError("duplicate category in feature '" + f.name + "'");
      }
    } else if (!f.categories.empty()) {
      throw SchemaError("non-categorical feature '" + f.name + "' lists categories");
    }
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return j;
  }
  return std::nullopt;
}

ClassSet::ClassSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw SchemaError("a class set needs at least two classes");
  std::set<std::string_view> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw SchemaError("duplicate class label");
  for (const auto& label : labels_) {
    if (label.empty()) throw SchemaError("class labels must be non-empty");
  }
}

std::optional<ClassId> ClassSet::index_of(std::string_view label) const {
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    if (labels_[c] == label) return static_cast<ClassId>(c);
  }
  return std::nullopt;
}

std::string schema_fingerprint(const FeatureSchema& schema, const ClassSet& classes) {
  // FNV-1a over a length-prefixed canonical encoding.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](std::string_view text) {
    const std::string prefix = std::to_string(text.size()) + ":";
    for (char ch : prefix) hash = (hash ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    for (char ch : text) hash = (hash ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  };
  for (const auto& f : schema.features()) {
    feed(f.name);
    feed(to_string(f.kind));
    for (const auto& c : f.categories) feed(c);
    feed("|");
  }
  feed("#classes");
  for (const auto& label : classes.labels()) feed(label);
  std::array<char, 17> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buffer.data());
}

PredictionTable::PredictionTable(FeatureSchema schema, ClassSet classes,
                                 std::vector<std::vector<double>> columns,
                                 std::vector<ClassId> true_labels,
                                 std::vector<ClassId> predicted_labels,
                                 std::optional<std::vector<double>> scores,
                                 bool scores_are_probabilities)
    : schema_(std::move(schema)),
      classes_(std::move(classes)),
      columns_(std::move(columns)),
      true_(std::move(true_labels)),
      pred_(std::move(predicted_labels)),
      probabilities_(scores_are_probabilities) {
  if (schema_.size() == 0) throw SchemaError("table has no features");
  if (classes_.size() < 2) throw SchemaError("table needs a class set");
  const std::size_t n = true_.size();
  if (n == 0) throw SchemaError("empty table");
  if (n > std::numeric_limits<RowIndex>::max()) throw SchemaError("too many rows");
  if (pred_.size() != n) throw SchemaError("predicted label count differs from row count");
  if (columns_.size() != schema_.size()) throw SchemaError("column count differs from schema");
  const auto k = static_cast<ClassId>(classes_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (true_[i] < 0 || true_[i] >= k || pred_[i] < 0 || pred_[i] >= k) {
      throw SchemaError("row " + std::to_string(i + 1) + ": label outside the class set");
    }
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const auto& spec = schema_[j];
    if (columns_[j].size() != n) throw SchemaError("column '" + spec.name + "' has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      const double v = columns_[j][i];
      bool ok = std::isfinite(v);
      if (spec.kind == FeatureKind::kBinary) ok = ok && (v == 0.0 || v == 1.0);
      if (spec.kind == FeatureKind::kCategorical) {
        ok = ok && v >= 0 && v < static_cast<double>(spec.categories.size()) && v == std::floor(v);
      }
      if (!ok) {
        throw SchemaError("row " + std::to_string(i + 1) + ": invalid value for feature '" + spec.name + "'");
      }
    }
  }
  if (scores) {
    scores_ = std::move(*scores);
    if (scores_.size() != n * classes_.size()) throw SchemaError("score matrix has wrong arity");
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (double s : this->scores(i)) {
        if (!(s >= 0.0 && s <= 1.0)) {
          throw SchemaError("row " + std::to_string(i + 1) + ": score outside [0,1]");
        }
        sum += s;
      }
      if (probabilities_ && std::abs(sum - 1.0) > kProbabilitySumTolerance) {
        throw SchemaError("row " + std::to_string(i + 1) + ": scores do not sum to 1");
      }
    }
  }
}

PredictionTable PredictionTable::select(std::span<const RowIndex> indices) const {
  std::vector<std::vector<double>> columns(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    columns[j].reserve(indices.size());
    for (RowIndex i : indices) columns[j].push_back(columns_.at(j).at(i));
  }
  std::vector<ClassId> y, yhat;
  std::optional<std::vector<double>> scores;
  if (has_scores()) scores.emplace();
  for (RowIndex i : indices) {
    y.push_back(true_.at(i));
    yhat.push_back(pred_.at(i));
    if (scores) {
      const auto row = this->scores(i);
      scores->insert(scores->end(), row.begin(), row.end());
    }
  }
  return PredictionTable(schema_, classes_, std::move(columns), std::move(y), std::move(yhat),
                         std::move(scores), probabilities_);
}

SubsetView::SubsetView(const PredictionTable& table) : table_(&table), indices_(table.rows()) {
  for (std::size_t i = 0; i < indices_.size(); ++i) indices_[i] = static_cast<RowIndex>(i);
}

SubsetView::SubsetView(const PredictionTable& table, std::vector<RowIndex> indices)
    : table_(&table), indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] >= table.rows()) throw std::invalid_argument("row index out of range");
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw std::invalid_argument("row indices must be strictly increasing");
    }
  }
}

void check_condition(const FeatureSchema& schema, const Condition& condition) {
  if (condition.feature >= schema.size()) throw std::invalid_argument("feature index out of range");
  const bool categorical = schema[condition.feature].kind == FeatureKind::kCategorical;
  if (categorical != (condition.kind == ConditionKind::kEqual)) {
    throw std::invalid_argument("condition kind does not match feature '" + schema[condition.feature].name + "'");
  }
}

std::pair<SubsetView, SubsetView> split_rows(const SubsetView& view, const Condition& condition) {
  const auto& table = view.table();
  check_condition(table.schema(), condition);
  std::vector<RowIndex> left, right;
  const auto column = table.column(condition.feature);
  for (RowIndex i : view.indices()) {
    (condition.holds(column[i]) ? left : right).push_back(i);
  }
  return {SubsetView(table, std::move(left), SubsetView::Unchecked{}),
          SubsetView(table, std::move(right), SubsetView::Unchecked{})};
}

std::string format_number(double x) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer.data(), end);
}

std::string format_fixed(double x, int decimals) {
  std::array<char, 400> buffer{};
  const auto [end, ec] =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), x, std::chars_format::fixed, decimals);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buffer.data(), end);
}

PredictionTable load_table(std::istream& in, const LoadOptions& options) {
  std::string line;
  std::size_t row = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw ParseError(0, "missing header");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split_record(line, 0);

  const auto true_it = std::find(header.begin(), header.end(), kTrueColumn);
  if (true_it == header.end()) throw ParseError(0, "missing __true__ column");
  const auto m = static_cast<std::size_t>(true_it - header.begin());
  if (m == 0) throw ParseError(0, "no feature columns");
  if (m + 1 >= header.size() || header[m + 1] != kPredColumn) {
    throw ParseError(0, "__pred__ must follow __true__");
  }
  std::vector<std::string> score_classes;
  for (std::size_t c = m + 2; c < header.size(); ++c) {
    if (!header[c].starts_with(kScorePrefix) || header[c].size() == kScorePrefix.size()) {
      throw ParseError(0, "unexpected column '" + header[c] + "' after __pred__");
    }
    score_classes.push_back(header[c].substr(kScorePrefix.size()));
  }
  const std::size_t width = header.size();

  std::vector<std::vector<std::string>> cells;
  while (next_line()) {
    ++row;
    if (line.empty()) {
      // Trailing blank lines are tolerated; blank lines between records are not.
      while (next_line()) {
        if (!line.empty()) throw ParseError(row, "blank line inside data");
      }
      break;
    }
    auto record = split_record(line, row);
    if (record.size() != width) {
      throw ParseError(row, "expected " + std::to_string(width) + " fields, found " + std::to_string(record.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (record[c].empty()) throw ParseError(row, "missing value in column '" + header[c] + "'");
    }
    cells.push_back(std::move(record));
  }
  if (cells.empty()) throw ParseError(0, "empty table");

  // Feature schema.
  FeatureSchema schema;
  if (options.schema) {
    schema = *options.schema;
    if (schema.size() != m) throw SchemaError("CSV has " + std::to_string(m) + " features, schema has " + std::to_string(schema.size()));
    for (std::size_t j = 0; j < m; ++j) {
      if (schema[j].name != header[j]) {
        throw SchemaError("column " + std::to_string(j + 1) + " is '" + header[j] + "', schema expects '" + schema[j].name + "'");
      }
    }
  } else {
    std::vector<FeatureSpec> specs;
    for (std::size_t j = 0; j < m; ++j) specs.push_back(infer_feature(header[j], cells, j));
    schema = FeatureSchema(std::move(specs));
  }

  // Class set.
  ClassSet classes;
  if (options.classes) {
    classes = *options.classes;
    if (!score_classes.empty() && score_classes != classes.labels()) {
      throw SchemaError("score columns do not match the declared class set");
    }
  } else if (!score_classes.empty()) {
    classes = ClassSet(score_classes);
  } else {
    std::set<std::string> labels;
    for (const auto& record : cells) {
      labels.insert(record[m]);
      labels.insert(record[m + 1]);
    }
    classes = ClassSet(std::vector<std::string>(labels.begin(), labels.end()));
  }
  if (!score_classes.empty() && score_classes.size() != classes.size()) {
    throw SchemaError("score vector arity differs from class count");
  }

  const std::size_t n = cells.size();
  std::vector<std::vector<double>> columns(m, std::vector<double>(n));
  std::vector<ClassId> y(n), yhat(n);
  std::optional<std::vector<double>> scores;
  if (!score_classes.empty()) scores.emplace(n * classes.size());

  for (std::size_t i = 0; i < n; ++i) {
    const auto& record = cells[i];
    const std::size_t data_row = i + 1;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& spec = schema[j];
      if (spec.kind == FeatureKind::kCategorical) {
        const auto id = spec.category_id(record[j]);
        if (!id) throw ParseError(data_row, "unknown category '" + record[j] + "' for feature '" + spec.name + "'");
        columns[j][i] = static_cast<double>(*id);
      } else {
        const auto value = parse_number(record[j]);
        if (!value) throw ParseError(data_row, "non-numeric value '" + record[j] + "' for feature '" + spec.name + "'");
        if (spec.kind == FeatureKind::kBinary && *value != 0.0 && *value != 1.0) {
          throw ParseError(data_row, "binary feature '" + spec.name + "' must be 0 or 1");
        }
        columns[j][i] = *value;
      }
    }
    const auto t = classes.index_of(record[m]);
    if (!t) throw UnknownClassError(data_row, record[m]);
    const auto p = classes.index_of(record[m + 1]);
    if (!p) throw UnknownClassError(data_row, record[m + 1]);
    y[i] = *t;
    yhat[i] = *p;
    if (scores) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto value = parse_number(record[m + 2 + c]);
        if (!value) throw ParseError(data_row, "non-numeric score '" + record[m + 2 + c] + "'");
        (*scores)[i * classes.size() + c] = *value;
      }
    }
  }
  try {
    return PredictionTable(std::move(schema), std::move(classes), std::move(columns), std::move(y),
                           std::move(yhat), std::move(scores), options.scores_are_probabilities);
  } catch (const SchemaError& e) {
    throw SchemaError(std::string("invalid table: ") + e.what());
  }
}

PredictionTable load_table_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_table(in, options);
}

void write_table(std::ostream& out, const PredictionTable& table) {
  const auto& schema = table.schema();
  const auto& classes = table.classes();
  std::string buffer;
  for (const auto& f : schema.features()) buffer += quote_field(f.name) + ",";
  buffer += std::string(kTrueColumn) + "," + std::string(kPredColumn);
  if (table.has_scores()) {
    for (const auto& label : classes.labels()) buffer += "," + quote_field(std::string(kScorePrefix) + label);
  }
  buffer += "\n";
  out << buffer;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    buffer.clear();
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const double v = table.value(i, j);
      if (schema[j].kind == FeatureKind::kCategorical) {
        buffer += quote_field(schema[j].categories[static_cast<std::size_t>(v)]);
      } else {
        buffer += format_number(v);
      }
      buffer += ",";
    }
    buffer += quote_field(classes[table.true_label(i)]) + "," + quote_field(classes[table.predicted_label(i)]);
    if (table.has_scores()) {
      for (double s : table.scores(i)) buffer += "," + format_number(s);
    }
    buffer += "\n";
    out << buffer;
  }
}

void write_table_file(const std::string& path, const PredictionTable& table) {
  std::ostringstream out;
  write_table(out, table);
  write_file_atomic(path, out.str());
}

}  // namespace perfex
