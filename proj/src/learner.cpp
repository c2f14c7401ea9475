#include "edgepipe/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgepipe/errors.hpp"

namespace edgepipe {

namespace {

void check_dims(const ModelParams& w, Eigen::Index d) {
  if (w.size() != d)
    throw std::invalid_argument("dimension mismatch: w has " + std::to_string(w.size()) +
                                " entries, x has " + std::to_string(d));
}

}  // namespace

double point_loss(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                  const LossSpec& spec) {
  check_dims(w, x.size());
  const double r = w.dot(x) - y;
  return r * r + spec.reg() * w.squaredNorm();
}

double point_loss(const ModelParams& w, const Sample& s, const LossSpec& spec) {
  return point_loss(w, s.x, s.y, spec);
}

Vector point_gradient(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                      const LossSpec& spec) {
  check_dims(w, x.size());
  const double r = w.dot(x) - y;
  return 2.0 * r * x + 2.0 * spec.reg() * w;
}

Vector point_gradient(const ModelParams& w, const Sample& s, const LossSpec& spec) {
  return point_gradient(w, s.x, s.y, spec);
}

ModelParams sgd_step(const ModelParams& w, const Eigen::Ref<const Vector>& x, double y,
                     double alpha, const LossSpec& spec) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sgd_step: alpha must be positive");
  return w - alpha * point_gradient(w, x, y, spec);
}

ModelParams sgd_step(const ModelParams& w, const Sample& s, double alpha, const LossSpec& spec) {
  return sgd_step(w, s.x, s.y, alpha, spec);
}

double subset_loss(const ModelParams& w, const Dataset& data,
                   std::span<const std::size_t> rows, const LossSpec& spec) {
  if (rows.empty()) throw std::invalid_argument("subset_loss: empty subset");
  check_dims(w, data.dim());
  double sum = 0.0;
  for (auto i : rows) {
    const double r = w.dot(data.x(i)) - data.y(i);
    sum += r * r;
  }
  return sum / static_cast<double>(rows.size()) + spec.reg() * w.squaredNorm();
}

double subset_loss(const ModelParams& w, const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("subset_loss: empty subset");
  check_dims(w, data.dim());
  const Vector r = data.features() * w - data.labels();
  return r.squaredNorm() / static_cast<double>(data.size()) + spec.reg() * w.squaredNorm();
}

double subset_loss(const ModelParams& w, std::span<const Sample> samples, const LossSpec& spec) {
  if (samples.empty()) throw std::invalid_argument("subset_loss: empty subset");
  double sum = 0.0;
  for (const auto& s : samples) sum += point_loss(w, s, spec);
  return sum / static_cast<double>(samples.size());
}

Vector mean_gradient(const ModelParams& w, const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("mean_gradient: empty dataset");
  check_dims(w, data.dim());
  const Vector r = data.features() * w - data.labels();
  return (2.0 / static_cast<double>(data.size())) * (data.features().transpose() * r) +
         2.0 * spec.reg() * w;
}

QuadraticLoss::QuadraticLoss(const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("QuadraticLoss: empty dataset");
  const auto& X = data.features();
  gram_ = X.transpose() * X;
  moment_ = X.transpose() * data.labels();
  label_sq_ = data.labels().squaredNorm();
  finish(static_cast<double>(data.size()), spec);
}

QuadraticLoss::QuadraticLoss(const Dataset& data, std::span<const std::size_t> rows,
                             const LossSpec& spec) {
  if (rows.empty()) throw std::invalid_argument("QuadraticLoss: empty subset");
  const Eigen::Index d = data.dim();
  gram_ = Matrix::Zero(d, d);
  moment_ = Vector::Zero(d);
  for (auto i : rows) {
    const Vector x = data.x(i);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
    moment_ += data.y(i) * x;
    label_sq_ += data.y(i) * data.y(i);
  }
  gram_ = gram_.selfadjointView<Eigen::Lower>();
  finish(static_cast<double>(rows.size()), spec);
}

void QuadraticLoss::finish(double n, const LossSpec& spec) {
  gram_ /= n;
  moment_ /= n;
  label_sq_ /= n;
  reg_ = spec.reg();
}

double QuadraticLoss::value(const ModelParams& w) const {
  check_dims(w, gram_.rows());
  return w.dot(gram_ * w) - 2.0 * moment_.dot(w) + label_sq_ + reg_ * w.squaredNorm();
}

Vector QuadraticLoss::gradient(const ModelParams& w) const {
  check_dims(w, gram_.rows());
  return 2.0 * (gram_ * w - moment_) + 2.0 * reg_ * w;
}

Matrix QuadraticLoss::hessian() const {
  return 2.0 * gram_ + 2.0 * reg_ * Matrix::Identity(gram_.rows(), gram_.cols());
}

ErmSolution solve_erm(const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("solve_erm: empty dataset");
  const QuadraticLoss q(data, spec);
  const Eigen::Index d = data.dim();
  const Matrix A = q.gram() + spec.reg() * Matrix::Identity(d, d);

  Eigen::LDLT<Matrix> ldlt(A);
  const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14 ||
      ldlt.vectorD().minCoeff() <= 1e-14 * scale) {
    throw NumericalError(
        "solve_erm: normal equations are singular; use a regularization lambda > 0");
  }
  ModelParams w = ldlt.solve(q.moment());

  const double tol = 1e-8 * (1.0 + mean_gradient(Vector::Zero(d), data, spec).norm());
  Vector g = mean_gradient(w, data, spec);
  // one round of iterative refinement if round-off left a visible residual
  for (int round = 0; round < 3 && g.norm() > tol; ++round) {
    w -= ldlt.solve(0.5 * g);
    g = mean_gradient(w, data, spec);
  }
  if (g.norm() > tol)
    throw NumericalError("solve_erm: residual gradient " + std::to_string(g.norm()) +
                         " exceeds tolerance; system is ill-conditioned");
  return {w, subset_loss(w, data, spec)};
}

SmoothnessConstants extreme_eigenvalues_iterative(const Matrix& H, int max_iterations,
                                                  double tolerance) {
  const Eigen::Index d = H.rows();
  if (d == 0 || H.cols() != d) throw std::invalid_argument("extreme_eigenvalues: not square");

  auto dominant = [&](const Matrix& A) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
    v.normalize();
    double rayleigh = v.dot(A * v);
    for (int it = 0; it < max_iterations; ++it) {
      Vector next = A * v;
      const double n = next.norm();
      if (n == 0.0) return 0.0;
      v = next / n;
      const double r = v.dot(A * v);
      const bool done = std::abs(r - rayleigh) <= tolerance * std::max(1.0, std::abs(r));
      rayleigh = r;
      if (done) break;
    }
    return rayleigh;
  };

  // H is positive semi-definite here, so the largest-magnitude eigenvalue is L.
  const double L = dominant(H);
  const Matrix shifted = L * Matrix::Identity(d, d) - H;
  const double c = L - dominant(shifted);
  return {L, c};
}

SmoothnessConstants extreme_eigenvalues(const Matrix& H) {
  if (H.rows() > 64) return extreme_eigenvalues_iterative(H);
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed to converge");
  return {es.eigenvalues().maxCoeff(), es.eigenvalues().minCoeff()};
}

SmoothnessConstants estimate_smoothness_constants(const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("estimate_smoothness_constants: empty dataset");
  return extreme_eigenvalues(QuadraticLoss(data, spec).hessian());
}

NoiseProbe gradient_noise_at(const ModelParams& w, const Dataset& data, const LossSpec& spec) {
  if (data.empty()) throw std::invalid_argument("gradient_noise_at: empty dataset");
  check_dims(w, data.dim());
  const Eigen::Index d = data.dim();
  const double n = static_cast<double>(data.size());
  // two passes: mean first, then centered second moment
  Vector mean = Vector::Zero(d);
  for (std::size_t i = 0; i < data.size(); ++i)
    mean += point_gradient(w, data.x(i), data.y(i), spec);
  mean /= n;
  double variance = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    variance += (point_gradient(w, data.x(i), data.y(i), spec) - mean).squaredNorm();
  return {variance / n, mean.squaredNorm()};
}

NoiseConstants estimate_noise_constants(const Dataset& data, const LossSpec& spec,
                                        std::span<const ModelParams> probes) {
  if (probes.empty()) throw std::invalid_argument("estimate_noise_constants: no probes");
  NoiseConstants out;
  out.probes.reserve(probes.size());
  for (const auto& w : probes) {
    out.probes.push_back(gradient_noise_at(w, data, spec));
    out.M = std::max(out.M, out.probes.back().variance);
  }
  out.M_V = 0.0;
  return out;
}

}  // namespace edgepipe
