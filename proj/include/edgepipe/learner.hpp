#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edgepipe/dataset.hpp"

namespace edgepipe {

/// Ridge loss l(w, x) = (w'x - y)^2 + (lambda / N) ||w||^2.
///
/// N is the full training-set size and stays fixed when the loss is averaged
/// over a subset, so l is one function per experiment.
struct LossSpec {
  double lambda = 0.0;
  std::int64_t N = 1;

  double reg() const { return lambda / static_cast<double>(N); }
};

double point_loss(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                  const LossSpec& spec);
double point_loss(const ModelParams& w, const Sample& s, const LossSpec& spec);

Vector point_gradient(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                      const LossSpec& spec);
Vector point_gradient(const ModelParams& w, const Sample& s, const LossSpec& spec);

/// One SGD update w - alpha * grad l(w, s). alpha must be positive.
ModelParams sgd_step(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                     double alpha, const LossSpec& spec);
ModelParams sgd_step(const ModelParams& w, const Sample& s, double alpha, const LossSpec& spec);

/// Mean loss over the listed rows. Which of the full, cumulative, per-block, or
/// not-yet-delivered losses this computes depends only on the rows passed.
double subset_loss(const ModelParams& w, const Dataset& data,
                   std::span<const std::size_t> rows, const LossSpec& spec);
double subset_loss(const ModelParams& w, const Dataset& data, const LossSpec& spec);
double subset_loss(const ModelParams& w, std::span<const Sample> samples, const LossSpec& spec);

/// Mean gradient over all rows of data.
Vector mean_gradient(const ModelParams& w, const Dataset& data, const LossSpec& spec);

/// Closed-form mean loss over a fixed set of rows, evaluated in O(d^2).
class QuadraticLoss {
 public:
  QuadraticLoss(const Dataset& data, const LossSpec& spec);
  QuadraticLoss(const Dataset& data, std::span<const std::size_t> rows, const LossSpec& spec);

  double value(const ModelParams& w) const;
  Vector gradient(const ModelParams& w) const;
  /// Averaged Hessian (2/n) X'X + (2 lambda / N) I.
  Matrix hessian() const;

  const Matrix& gram() const { return gram_; }
  const Vector& moment() const { return moment_; }

 private:
  void finish(double n, const LossSpec& spec);

  Matrix gram_;     // (1/n) X'X
  Vector moment_;   // (1/n) X'y
  double label_sq_ = 0.0;
  double reg_ = 0.0;
};

struct ErmSolution {
  ModelParams w_star;
  double loss_star = 0.0;
};

/// Exact minimizer of the mean ridge loss via the normal equations.
/// Throws NumericalError if the system is singular (only possible for lambda = 0).
ErmSolution solve_erm(const Dataset& data, const LossSpec& spec);

struct SmoothnessConstants {
  double L = 0.0;  ///< largest Hessian eigenvalue
  double c = 0.0;  ///< smallest Hessian eigenvalue
};

/// Extreme eigenvalues of a symmetric matrix. Dense solve up to dimension 64,
/// power / shifted power iteration above.
SmoothnessConstants extreme_eigenvalues(const Matrix& symmetric);

/// Power iteration variant regardless of dimension; exposed for testing.
SmoothnessConstants extreme_eigenvalues_iterative(const Matrix& symmetric,
                                                  int max_iterations = 20000,
                                                  double tolerance = 1e-13);

SmoothnessConstants estimate_smoothness_constants(const Dataset& data, const LossSpec& spec);

struct NoiseProbe {
  double variance = 0.0;       ///< V[grad l(w, xi)], xi uniform over the data
  double grad_norm_sq = 0.0;   ///< ||grad L(w)||^2
};

struct NoiseConstants {
  double M = 0.0;
  double M_V = 0.0;
  std::vector<NoiseProbe> probes;
};

NoiseProbe gradient_noise_at(const ModelParams& w, const Dataset& data, const LossSpec& spec);

/// M is the largest gradient variance over the probes; M_V is fixed to zero.
NoiseConstants estimate_noise_constants(const Dataset& data, const LossSpec& spec,
                                        std::span<const ModelParams> probes);

}  // namespace edgepipe
