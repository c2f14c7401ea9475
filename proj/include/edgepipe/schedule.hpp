#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace edgepipe {

/// Tunables of one pipelined offloading protocol instance.
///
/// All durations are normalized so that transmitting one sample takes one
/// time unit.
struct ProtocolConfig {
  std::int64_t N = 0;     ///< training samples held by the device
  std::int64_t n_c = 0;   ///< samples carried per transmission block
  double n_o = 0.0;       ///< per-block overhead duration
  double tau_p = 1.0;     ///< duration of one SGD update
  double T = 0.0;         ///< total time budget
  double alpha = 1e-4;    ///< SGD step size
};

enum class Regime { Partial, Full };

std::string_view to_string(Regime r);

/// Timing quantities derived from a ProtocolConfig.
struct PipelineSchedule {
  std::int64_t B_d = 0;  ///< blocks needed to deliver the whole dataset
  std::int64_t B = 0;    ///< complete transmission blocks that fit in T
  std::int64_t n_p = 0;  ///< SGD updates per transmission block
  double tau_l = 0.0;    ///< training time left after full delivery
  std::int64_t n_l = 0;  ///< SGD updates in the residual block
  Regime regime = Regime::Partial;
  double delivered_fraction = 0.0;

  std::int64_t N = 0;
  std::int64_t n_c = 0;

  /// Samples carried by block b (1-based); the last block may be short.
  std::int64_t block_size(std::int64_t b) const;
  /// Share |X_b| / N of the dataset carried by block b.
  double block_share(std::int64_t b) const;
  /// Blocks after which the edge performs n_p updates (blocks 2..B).
  std::int64_t training_blocks() const { return B > 1 ? B - 1 : 0; }
  /// Total number of SGD updates performed within T.
  std::int64_t total_updates() const;
};

/// Throws ConfigError naming the first violated constraint.
void validate(const ProtocolConfig& cfg);

PipelineSchedule compute_schedule(const ProtocolConfig& cfg);

/// Describes a candidate set of block sizes.
struct GridPolicy {
  enum class Kind { Step, DivisorsOfN, List };
  Kind kind = Kind::Step;
  std::int64_t min = 1;
  std::int64_t max = 0;  ///< 0 means N
  std::int64_t step = 1;
  std::vector<std::int64_t> values;  ///< used by Kind::List
};

/// Strictly increasing n_c candidates that each give a valid configuration
/// when substituted into cfg_template. Step grids always end at min(max, N).
std::vector<std::int64_t> candidate_block_sizes(const ProtocolConfig& cfg_template,
                                                const GridPolicy& policy);

namespace detail {
/// floor(a / b) tolerant to representation error in the quotient.
std::int64_t floor_quotient(double a, double b);
}  // namespace detail

}  // namespace edgepipe
