#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace edgepipe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Model weights w in R^d.
using ModelParams = Vector;

struct Sample {
  Vector x;
  double y = 0.0;
};

/// Row-major store of covariates plus one real label per row.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError when row counts differ or any entry is non-finite.
  Dataset(FeatureMatrix features, Vector labels);

  static Dataset from_samples(std::span<const Sample> samples);

  std::size_t size() const { return static_cast<std::size_t>(labels_.size()); }
  Eigen::Index dim() const { return features_.cols(); }
  bool empty() const { return size() == 0; }

  auto x(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double y(std::size_t i) const { return labels_[static_cast<Eigen::Index>(i)]; }
  Sample sample(std::size_t i) const { return {x(i), y(i)}; }

  const FeatureMatrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }

  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<Sample> samples() const;

 private:
  FeatureMatrix features_;
  Vector labels_;
};

}  // namespace edgepipe
