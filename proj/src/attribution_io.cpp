#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "xtsc/error.hpp"
#include "xtsc/explainers.hpp"
#include "xtsc/text.hpp"

namespace xtsc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string cell_name(std::size_t i, std::size_t t) {
  return "cell (feature " + std::to_string(i) + ", step " + std::to_string(t) + ")";
}

/// Producers such as Python's json module write bare NaN/Infinity tokens.
/// They are mapped to null outside string literals so the offending cell can
/// be reported by position.
std::string neutralize_non_finite(const std::string& doc) {
  std::string out;
  out.reserve(doc.size());
  bool in_string = false;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const char c = doc[k];
    if (in_string) {
      out += c;
      if (c == '\\' && k + 1 < doc.size()) {
        out += doc[++k];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    bool replaced = false;
    for (std::string_view token : {"-Infinity", "Infinity", "NaN"}) {
      if (doc.compare(k, token.size(), token) == 0) {
        out += "null";
        k += token.size() - 1;
        replaced = true;
        break;
      }
    }
    if (!replaced) out += c;
  }
  return out;
}

json read_json(const fs::path& path) {
  const std::string raw = text::read_file(path.string());
  json doc = json::parse(raw, nullptr, false);
  if (doc.is_discarded()) doc = json::parse(neutralize_non_finite(raw), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::FormatError, path.string() + ": not a JSON object");
  return doc;
}

fs::path sidecar_for(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

Shape declared_shape(const json& doc, const fs::path& path, Shape expected) {
  Shape declared = expected;
  try {
    if (doc.contains("n_features")) declared.n_features = doc.at("n_features").get<std::size_t>();
    if (doc.contains("t_steps")) declared.t_steps = doc.at("t_steps").get<std::size_t>();
  } catch (const json::exception&) {
    fail(ErrorCode::FormatError, path.string() + ": n_features/t_steps must be nonnegative integers");
  }
  if (!(declared == expected)) {
    fail(ErrorCode::InvalidShape,
         path.string() + ": declared shape " + to_string(declared) + " does not match expected " + to_string(expected));
  }
  return declared;
}

/// Accepts a flat row-major array or an array of rows.
Matrix read_cells(const json& doc, const char* field, const fs::path& path, Shape shape) {
  if (!doc.contains(field)) fail(ErrorCode::FormatError, path.string() + ": missing '" + field + "'");
  const json& arr = doc.at(field);
  std::vector<const json*> flat;
  if (!arr.is_array()) fail(ErrorCode::FormatError, path.string() + ": '" + field + "' must be an array");
  for (const json& item : arr) {
    if (item.is_array()) {
      for (const json& v : item) flat.push_back(&v);
    } else {
      flat.push_back(&item);
    }
  }
  if (flat.size() != shape.cells()) {
    fail(ErrorCode::InvalidShape, path.string() + ": '" + field + "' has " + std::to_string(flat.size()) +
                                      " entries, expected " + std::to_string(shape.cells()));
  }
  Matrix out(shape);
  for (std::size_t c = 0; c < flat.size(); ++c) {
    const json& v = *flat[c];
    const std::size_t i = c / shape.t_steps;
    const std::size_t t = c % shape.t_steps;
    if (!v.is_number()) {
      fail(ErrorCode::FormatError, path.string() + ": " + cell_name(i, t) + " is " +
                                       (v.is_null() ? "null or non-finite" : "not a number"));
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ErrorCode::FormatError, path.string() + ": " + cell_name(i, t) + " is not finite");
    out[c] = d;
  }
  return out;
}

std::size_t read_target(const json& doc, const fs::path& path) {
  if (!doc.contains("target_class")) return 0;
  try {
    return doc.at("target_class").get<std::size_t>();
  } catch (const json::exception&) {
    fail(ErrorCode::FormatError, path.string() + ": target_class must be a nonnegative integer");
  }
}

std::string read_name(const json& doc, const fs::path& path) {
  if (!doc.contains("explainer") || !doc.at("explainer").is_string()) {
    fail(ErrorCode::FormatError, path.string() + ": missing explainer name");
  }
  return doc.at("explainer").get<std::string>();
}

Matrix read_csv_cells(const fs::path& path, Shape expected) {
  std::istringstream in(text::read_file(path.string()));
  std::string line;
  Matrix out(expected);
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::trim(line), ',');
    if (i >= expected.n_features) {
      fail(ErrorCode::InvalidShape, path.string() + ": more than " + std::to_string(expected.n_features) + " rows");
    }
    if (fields.size() != expected.t_steps) {
      fail(ErrorCode::InvalidShape, path.string() + ": row " + std::to_string(i) + " has " +
                                        std::to_string(fields.size()) + " columns, expected " +
                                        std::to_string(expected.t_steps));
    }
    for (std::size_t t = 0; t < fields.size(); ++t) {
      const double v = text::parse_double(text::trim(fields[t]), path.string() + " " + cell_name(i, t));
      if (!std::isfinite(v)) fail(ErrorCode::FormatError, path.string() + ": " + cell_name(i, t) + " is not finite");
      out(i, t) = v;
    }
    ++i;
  }
  if (i != expected.n_features) {
    fail(ErrorCode::InvalidShape,
         path.string() + ": " + std::to_string(i) + " rows, expected " + std::to_string(expected.n_features));
  }
  return out;
}

json cells_to_json(const Matrix& m) {
  json arr = json::array();
  for (double v : m.values()) arr.push_back(v);
  return arr;
}

void require_finite(const Matrix& m, const std::string& what) {
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (!std::isfinite(m[c])) {
      fail(ErrorCode::FormatError, what + ": " + cell_name(c / m.t_steps(), c % m.t_steps()) + " is not finite");
    }
  }
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  text::write_file(path.string(), doc.dump(2) + "\n");
}

}  // namespace

void save_attribution(const Attribution& a, const fs::path& path) {
  require_finite(a.scores, "attribution " + a.explainer);
  write_json(path, json{{"explainer", a.explainer},
                        {"target_class", a.target_class},
                        {"n_features", a.scores.n_features()},
                        {"t_steps", a.scores.t_steps()},
                        {"scores", cells_to_json(a.scores)}});
}

void save_attribution_csv(const Attribution& a, const fs::path& path) {
  require_finite(a.scores, "attribution " + a.explainer);
  std::string body;
  for (std::size_t i = 0; i < a.scores.n_features(); ++i) {
    for (std::size_t t = 0; t < a.scores.t_steps(); ++t) {
      if (t) body += ',';
      body += text::format_double(a.scores(i, t));
    }
    body += '\n';
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  text::write_file(path.string(), body);
  write_json(sidecar_for(path), json{{"explainer", a.explainer},
                                     {"target_class", a.target_class},
                                     {"n_features", a.scores.n_features()},
                                     {"t_steps", a.scores.t_steps()}});
}

void save_example(const ExampleExplanation& e, const fs::path& path) {
  require_finite(e.values, "example " + e.explainer);
  write_json(path, json{{"kind", "example"},
                        {"explainer", e.explainer},
                        {"target_class", e.target_class},
                        {"n_features", e.values.n_features()},
                        {"t_steps", e.values.t_steps()},
                        {"values", cells_to_json(e.values)}});
}

bool is_example_file(const fs::path& path) {
  if (path.extension() != ".json") return false;
  const json doc = read_json(path);
  return doc.contains("kind") && doc.at("kind") == "example";
}

Attribution load_external_attribution(const fs::path& path, Shape expected) {
  if (!fs::exists(path)) fail(ErrorCode::IoError, path.string() + ": no such file");
  if (path.extension() == ".csv") {
    const fs::path manifest = sidecar_for(path);
    if (!fs::exists(manifest)) fail(ErrorCode::FormatError, path.string() + ": missing sidecar " + manifest.string());
    const json doc = read_json(manifest);
    declared_shape(doc, manifest, expected);
    return {read_csv_cells(path, expected), read_target(doc, manifest), read_name(doc, manifest)};
  }
  const json doc = read_json(path);
  if (doc.contains("kind") && doc.at("kind") != "attribution") {
    fail(ErrorCode::FormatError, path.string() + ": not an attribution file");
  }
  declared_shape(doc, path, expected);
  return {read_cells(doc, "scores", path, expected), read_target(doc, path), read_name(doc, path)};
}

ExampleExplanation load_example(const fs::path& path, Shape expected) {
  if (!fs::exists(path)) fail(ErrorCode::IoError, path.string() + ": no such file");
  const json doc = read_json(path);
  if (!doc.contains("kind") || doc.at("kind") != "example") {
    fail(ErrorCode::FormatError, path.string() + ": not an example file");
  }
  declared_shape(doc, path, expected);
  return {read_cells(doc, "values", path, expected), read_target(doc, path), read_name(doc, path)};
}

Attribution ingest_explanation(const fs::path& path, const TimeSeries& x,
                               const std::optional<FeatureRange>& feature_range) {
  if (is_example_file(path)) return example_to_attribution(x, load_example(path, x.shape()), feature_range);
  return load_external_attribution(path, x.shape());
}

}  // namespace xtsc
