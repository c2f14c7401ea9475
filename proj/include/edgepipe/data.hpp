#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgepipe/dataset.hpp"

namespace edgepipe {

/// Column roles for CSV ingestion. Columns are named by header text when the
/// file has a header, otherwise (or as a fallback) by zero-based index.
struct CsvSchema {
  bool has_header = true;
  char delimiter = ',';
  std::string label_column;                  ///< empty: last column
  std::vector<std::string> feature_columns;  ///< empty: every other column
};

struct CsvTable {
  Dataset data;
  std::vector<std::string> feature_names;
  std::string label_name;
};

/// Throws DataError with row/column location on malformed input.
CsvTable load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Shortest decimal text that parses back to exactly v.
std::string format_number(double v);

/// Writes features then label, shortest round-trip decimal representation.
void write_csv(const std::filesystem::path& path, const Dataset& data,
               const std::vector<std::string>& feature_names = {},
               const std::string& label_name = "y");

enum class Preprocessing { None, Standardize, MinMax };

std::string to_string(Preprocessing p);
Preprocessing parse_preprocessing(const std::string& text);

/// Per-column affine map x' = (x - shift) / scale. Constant columns map to 0.
struct Transform {
  Preprocessing mode = Preprocessing::None;
  std::vector<double> shift;
  std::vector<double> scale;
  bool labels_scaled = false;
  double label_shift = 0.0;
  double label_scale = 1.0;
};

struct Preprocessed {
  Dataset data;
  Transform transform;
};

Preprocessed preprocess(const Dataset& data, Preprocessing mode, bool scale_labels = false);

/// Applies an already fitted transform (e.g. to a holdout set).
Dataset apply_transform(const Dataset& data, const Transform& t);

struct Split {
  Dataset train;
  Dataset holdout;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> holdout_rows;
};

/// Shuffles by seed and puts the first floor(fraction * N) rows in train.
Split split(const Dataset& data, double fraction, std::uint64_t seed);

struct SyntheticSpec {
  std::int64_t N = 100;
  Eigen::Index d = 2;
  double noise = 0.0;
  std::optional<Vector> w_true;  ///< drawn i.i.d. standard normal when absent
};

struct Synthetic {
  Dataset data;
  Vector w_true;
};

/// Standard-normal features, labels w_true'x + noise * N(0, 1).
Synthetic synthesize(const SyntheticSpec& spec, std::uint64_t seed);

/// Provenance of a dataset as used by an experiment.
struct DatasetManifest {
  std::string source;  ///< csv path or "synthetic"
  Preprocessing preprocessing = Preprocessing::None;
  Transform transform;
  double split_fraction = 1.0;
  std::uint64_t split_seed = 0;
  std::size_t total_rows = 0;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;
  Eigen::Index dim = 0;
};

/// Manifest as indented JSON text.
std::string manifest_text(const DatasetManifest& m);

}  // namespace edgepipe
