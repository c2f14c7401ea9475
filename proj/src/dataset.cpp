#include "edgepipe/dataset.hpp"

#include <string>

#include "edgepipe/errors.hpp"

namespace edgepipe {

Dataset::Dataset(FeatureMatrix features, Vector labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows() != labels_.size())
    throw DataError("dataset: " + std::to_string(features_.rows()) + " feature rows but " +
                    std::to_string(labels_.size()) + " labels");
  if (!features_.allFinite() || !labels_.allFinite())
    throw DataError("dataset: non-finite entry");
}

Dataset Dataset::from_samples(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const Eigen::Index d = samples.front().x.size();
  FeatureMatrix X(static_cast<Eigen::Index>(samples.size()), d);
  Vector y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != d)
      throw DataError("dataset: sample " + std::to_string(i) + " has dimension " +
                      std::to_string(samples[i].x.size()) + ", expected " + std::to_string(d));
    X.row(static_cast<Eigen::Index>(i)) = samples[i].x.transpose();
    y[static_cast<Eigen::Index>(i)] = samples[i].y;
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  FeatureMatrix X(static_cast<Eigen::Index>(indices.size()), dim());
  Vector y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw DataError("dataset: row index out of range");
    X.row(static_cast<Eigen::Index>(k)) = features_.row(static_cast<Eigen::Index>(indices[k]));
    y[static_cast<Eigen::Index>(k)] = labels_[static_cast<Eigen::Index>(indices[k])];
  }
  return Dataset(std::move(X), std::move(y));
}

std::vector<Sample> Dataset::samples() const {
  std::vector<Sample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

}  // namespace edgepipe
