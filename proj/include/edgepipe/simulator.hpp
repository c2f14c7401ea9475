#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edgepipe/dataset.hpp"
#include "edgepipe/learner.hpp"
#include "edgepipe/schedule.hpp"

namespace edgepipe {

/// How the initial weights of a run are chosen.
struct InitPolicy {
  enum class Kind { Gaussian, Zero, Fixed };
  Kind kind = Kind::Gaussian;
  ModelParams fixed;  ///< used by Kind::Fixed

  /// Gaussian draws i.i.d. standard normal entries from the run's Init stream.
  ModelParams draw(Eigen::Index dim, std::uint64_t run_seed) const;
};

struct RunOptions {
  std::int64_t trace_stride = 1;    ///< record the loss every k updates; the last one always
  std::int64_t iterate_stride = 0;  ///< keep every k-th iterate for diameter estimates; 0 = off
  bool record_block_iterates = false;
  bool check_no_peeking = false;    ///< verify every sampled row was already delivered
  unsigned threads = 1;             ///< used by the multi-run helpers
};

struct BlockMarker {
  std::int64_t block = 0;
  double time = 0.0;
};

/// Loss on the full dataset along one pipelined run, in normalized time.
struct TrainingTrace {
  std::vector<double> times;
  std::vector<double> losses;
  std::vector<BlockMarker> block_boundaries;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::int64_t updates = 0;
  ModelParams final_w;
  std::uint64_t seed = 0;

  /// Entry b (1-based, size B + 1) is the iterate at the end of block b;
  /// block 1 performs no updates, so entry 1 is the initial point.
  std::vector<ModelParams> block_end_iterates;
  std::vector<ModelParams> iterates;
};

/// Row indices delivered in each transmission block.
struct TransmissionLog {
  std::vector<std::vector<std::size_t>> blocks;

  /// |X~_b| for b = 1..B_d, i.e. rows available before block b.
  std::vector<std::size_t> cumulative() const;
  /// Rows of blocks 1..b-1 (the set available during block b).
  std::vector<std::size_t> available_before(std::int64_t b) const;
  /// Rows not yet delivered at the start of block b.
  std::vector<std::size_t> missing_before(std::int64_t b) const;
};

struct RunResult {
  TrainingTrace trace;
  TransmissionLog log;
};

/// Simulates the pipelined protocol for one seed. Block 1 only transmits;
/// block b in 2..B runs n_p updates sampling uniformly from blocks 1..b-1;
/// in the full-delivery regime a final period runs n_l updates on all rows.
RunResult run_pipeline(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                       const ModelParams& w0, std::uint64_t seed, const RunOptions& options = {});

struct AveragedTrace {
  std::vector<double> times;
  std::vector<double> mean_loss;
  std::vector<double> stderr_loss;
  double mean_initial = 0.0;
  double mean_final = 0.0;
  double stderr_final = 0.0;
  std::size_t runs = 0;
};

/// Pointwise mean of run_pipeline traces over the given per-run seeds.
AveragedTrace average_runs(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                           const InitPolicy& init, std::span<const std::uint64_t> seeds,
                           const RunOptions& options = {});

struct FinalLossEntry {
  std::int64_t n_c = 0;
  double mean_final = 0.0;
  double stderr_final = 0.0;
};

struct ExperimentalOptimum {
  std::int64_t n_c_star = 0;
  std::vector<FinalLossEntry> table;
};

/// Argmin over the grid of the averaged final loss; ties go to the smaller n_c.
/// Every grid point reuses the same per-run seeds (common random numbers).
ExperimentalOptimum experimental_optimum(const Dataset& data, const ProtocolConfig& cfg_template,
                                         const LossSpec& spec, std::span<const std::int64_t> grid,
                                         const InitPolicy& init,
                                         std::span<const std::uint64_t> seeds,
                                         const RunOptions& options = {});

/// Largest pairwise distance within a point cloud; clouds above max_points
/// are thinned by a fixed stride first.
double max_pairwise_distance(std::span<const ModelParams> points, std::size_t max_points = 2048);

}  // namespace edgepipe
