#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgepipe/dataset.hpp"
#include "edgepipe/learner.hpp"
#include "edgepipe/schedule.hpp"
#include "edgepipe/simulator.hpp"

namespace edgepipe {

/// Constants consumed by the optimality-gap bounds. gamma is derived.
struct BoundConstants {
  double L = 0.0;
  double c = 0.0;
  double M = 0.0;
  double M_V = 0.0;
  double M_G = 1.0;
  double D = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;

  /// Validates the step-size and contraction conditions and fills gamma.
  /// Throws NumericalError (step size, contraction) or ConfigError (ranges).
  static BoundConstants make(double L, double c, double M, double M_V, double M_G, double D,
                             double alpha);
};

/// gamma = alpha (1 - alpha L M_G / 2). Requires 0 < alpha < 2 / (L M_G).
double compute_gamma(double alpha, double L, double M_G);

/// Non-vanishing bias alpha^2 L M / (2 gamma c).
double noise_floor(const BoundConstants& k);

/// Closed-form optimality-gap bound at time T for one schedule, with the
/// per-block initial gaps replaced by L D^2 / 2.
double corollary_bound(const PipelineSchedule& sched, const BoundConstants& k);

struct BoundEntry {
  std::int64_t n_c = 0;
  double bound = 0.0;
  Regime regime = Regime::Partial;
  PipelineSchedule schedule;
};

struct BoundCurve {
  std::vector<BoundEntry> entries;
  BoundConstants constants;
  ProtocolConfig cfg_template;
};

struct OptimizationResult {
  std::int64_t n_c_opt = 0;
  double bound_at_opt = 0.0;
  Regime regime_at_opt = Regime::Partial;
  /// Smallest grid n_c for which the whole dataset is delivered within T.
  std::optional<std::int64_t> boundary_n_c;
  BoundCurve curve;
};

OptimizationResult optimize_block_size(const ProtocolConfig& cfg_template,
                                       std::span<const std::int64_t> grid,
                                       const BoundConstants& k);

struct TheoremEstimate {
  double estimate = 0.0;       ///< mean over runs of the realized bound
  double stderr_estimate = 0.0;
  double measured_gap = 0.0;   ///< mean of L(w_final) - L(w*)
  double stderr_gap = 0.0;
  double max_iterate_distance = 0.0;  ///< over all runs' (thinned) iterates
  double loss_star = 0.0;
  std::size_t runs = 0;
};

/// Monte Carlo evaluation of the data-dependent bound: every run is simulated
/// and the per-block gaps L_b(w_b) - L_b(w*) and the undelivered-data gap are
/// measured on the realized partition.
TheoremEstimate theorem_bound_mc(const Dataset& data, const ProtocolConfig& cfg,
                                 const LossSpec& spec, const BoundConstants& k, std::size_t runs,
                                 std::uint64_t seed, const InitPolicy& init = {},
                                 unsigned threads = 1);

/// D from one pilot run: 1.1 times the largest distance between its iterates.
double pilot_diameter(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                      const InitPolicy& init, std::uint64_t seed);

}  // namespace edgepipe
