#include "edgepipe/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "edgepipe/errors.hpp"
#include "edgepipe/rng.hpp"

namespace edgepipe {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t resolve_column(const std::string& ref, const std::vector<std::string>& header,
                           std::size_t width) {
  if (!header.empty()) {
    const auto it = std::find(header.begin(), header.end(), ref);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
  if (ec == std::errc() && ptr == ref.data() + ref.size() && idx < width) return idx;
  throw DataError("csv: unknown column '" + ref + "'");
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CsvTable load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::vector<std::vector<double>> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, schema.delimiter);
    if (schema.has_header && header.empty()) {
      for (auto f : fields) header.emplace_back(f);
      width = header.size();
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw DataError("csv: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto v = parse_number(fields[c]);
      if (!v)
        throw DataError("csv: line " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 1) + ": '" + std::string(fields[c]) +
                        "' is not a finite number");
      row[c] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("csv: no data rows in " + path.string());

  const std::size_t label =
      schema.label_column.empty() ? width - 1 : resolve_column(schema.label_column, header, width);
  std::vector<std::size_t> features;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < width; ++c)
      if (c != label) features.push_back(c);
  } else {
    for (const auto& f : schema.feature_columns) features.push_back(resolve_column(f, header, width));
  }
  if (features.empty()) throw DataError("csv: no feature columns");

  FeatureMatrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < features.size(); ++j)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][features[j]];
    y[static_cast<Eigen::Index>(r)] = rows[r][label];
  }

  CsvTable out{Dataset(std::move(X), std::move(y)), {}, {}};
  auto name = [&](std::size_t c) { return header.empty() ? "col" + std::to_string(c) : header[c]; };
  for (auto c : features) out.feature_names.push_back(name(c));
  out.label_name = name(label);
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data,
               const std::vector<std::string>& feature_names, const std::string& label_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("csv: cannot write " + path.string());
  for (Eigen::Index j = 0; j < data.dim(); ++j)
    out << (static_cast<std::size_t>(j) < feature_names.size() ? feature_names[static_cast<std::size_t>(j)]
                                                               : "x" + std::to_string(j))
        << ',';
  out << label_name << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j)
      out << format_number(data.features()(static_cast<Eigen::Index>(i), j)) << ',';
    out << format_number(data.y(i)) << '\n';
  }
}

std::string to_string(Preprocessing p) {
  switch (p) {
    case Preprocessing::None: return "none";
    case Preprocessing::Standardize: return "standardize";
    case Preprocessing::MinMax: return "minmax";
  }
  return "none";
}

Preprocessing parse_preprocessing(const std::string& text) {
  if (text == "none") return Preprocessing::None;
  if (text == "standardize") return Preprocessing::Standardize;
  if (text == "minmax") return Preprocessing::MinMax;
  throw ConfigError("unknown preprocessing mode '" + text + "' (none|standardize|minmax)");
}

namespace {

/// Fits (shift, scale) for one column; scale 0 marks a constant column.
std::pair<double, double> fit_column(const Eigen::Ref<const Vector>& col, Preprocessing mode) {
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();
  if (mode == Preprocessing::None) return {0.0, 1.0};
  if (lo == hi) return {lo, 0.0};
  if (mode == Preprocessing::MinMax) return {lo, hi - lo};
  const double n = static_cast<double>(col.size());
  const double mean = col.sum() / n;
  const double var = (col.array() - mean).square().sum() / n;
  return {mean, std::sqrt(var)};
}

double apply_one(double v, double shift, double scale) {
  return scale == 0.0 ? 0.0 : (v - shift) / scale;
}

}  // namespace

Dataset apply_transform(const Dataset& data, const Transform& t) {
  if (t.mode == Preprocessing::None && !t.labels_scaled) return data;
  FeatureMatrix X = data.features();
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      X(i, j) = apply_one(X(i, j), t.shift[static_cast<std::size_t>(j)],
                          t.scale[static_cast<std::size_t>(j)]);
  Vector y = data.labels();
  if (t.labels_scaled)
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = apply_one(y[i], t.label_shift, t.label_scale);
  return Dataset(std::move(X), std::move(y));
}

Preprocessed preprocess(const Dataset& data, Preprocessing mode, bool scale_labels) {
  if (data.empty()) throw DataError("preprocess: empty dataset");
  Transform t;
  t.mode = mode;
  if (mode == Preprocessing::None) {
    t.shift.assign(static_cast<std::size_t>(data.dim()), 0.0);
    t.scale.assign(static_cast<std::size_t>(data.dim()), 1.0);
    return {data, t};
  }
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    const Vector col = data.features().col(j);
    const auto [shift, scale] = fit_column(col, mode);
    t.shift.push_back(shift);
    t.scale.push_back(scale);
  }
  if (scale_labels) {
    t.labels_scaled = true;
    std::tie(t.label_shift, t.label_scale) = fit_column(data.labels(), mode);
  }
  return {apply_transform(data, t), t};
}

Split split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("split: fraction must lie in (0, 1]");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine rng(derive_seed(seed, {0x5b11ULL}));
  std::shuffle(order.begin(), order.end(), rng);
  const double n = static_cast<double>(data.size());
  const auto n_train = std::min(
      data.size(), static_cast<std::size_t>(std::floor(fraction * n * (1.0 + 1e-12))));
  Split s;
  s.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.holdout_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  s.train = data.subset(s.train_rows);
  s.holdout = s.holdout_rows.empty() ? Dataset(FeatureMatrix(0, data.dim()), Vector(0))
                                     : data.subset(s.holdout_rows);
  return s;
}

Synthetic synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.N < 2) throw ConfigError("synthesize: N must be at least 2");
  if (spec.d < 1) throw ConfigError("synthesize: d must be at least 1");
  if (!(spec.noise >= 0.0)) throw ConfigError("synthesize: noise level must be non-negative");
  Engine rng(derive_seed(seed, {0xda7aULL}));
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector w_true(spec.d);
  if (spec.w_true) {
    if (spec.w_true->size() != spec.d) throw ConfigError("synthesize: w_true has wrong dimension");
    w_true = *spec.w_true;
  } else {
    for (Eigen::Index j = 0; j < spec.d; ++j) w_true[j] = normal(rng);
  }
  FeatureMatrix X(spec.N, spec.d);
  Vector y(spec.N);
  for (Eigen::Index i = 0; i < spec.N; ++i) {
    for (Eigen::Index j = 0; j < spec.d; ++j) X(i, j) = normal(rng);
    y[i] = X.row(i).dot(w_true) + spec.noise * normal(rng);
  }
  return {Dataset(std::move(X), std::move(y)), w_true};
}

std::string manifest_text(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["source"] = m.source;
  j["preprocessing"] = to_string(m.preprocessing);
  j["transform"] = {{"shift", m.transform.shift},
                    {"scale", m.transform.scale},
                    {"labels_scaled", m.transform.labels_scaled},
                    {"label_shift", m.transform.label_shift},
                    {"label_scale", m.transform.label_scale}};
  j["split_fraction"] = m.split_fraction;
  j["split_seed"] = m.split_seed;
  j["total_rows"] = m.total_rows;
  j["train_rows"] = m.train_rows;
  j["holdout_rows"] = m.holdout_rows;
  j["dim"] = m.dim;
  return j.dump(2);
}

}  // namespace edgepipe
