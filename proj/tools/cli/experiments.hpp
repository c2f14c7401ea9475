#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edgepipe/bounds.hpp"
#include "edgepipe/simulator.hpp"

namespace edgepipe::cli {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Bound curves over several overheads and the shape checks on their optima.
struct Fig3Report {
  std::vector<double> overheads;
  std::vector<OptimizationResult> results;  ///< one per overhead
  std::vector<Check> checks;
};

Fig3Report fig3_experiment(const ProtocolConfig& tmpl, const GridPolicy& grid,
                           const BoundConstants& k, const std::vector<double>& overheads);

struct Fig4Options {
  ProtocolConfig tmpl;
  LossSpec spec;
  GridPolicy grid;
  std::vector<std::int64_t> reference;  ///< block sizes whose traces are compared
  BoundConstants k;                     ///< constants behind the bound-optimal block size
  InitPolicy init;
  std::vector<std::uint64_t> seeds;
  RunOptions run;
  std::vector<double> thresholds{0.25, 0.5, 0.75};
  double gap_tolerance = 0.1;
};

struct Crossing {
  double level = 0.0;
  std::vector<double> times;  ///< per reference n_c; +inf when never reached
};

struct Fig4Report {
  OptimizationResult bound;
  ExperimentalOptimum experimental;
  std::vector<std::pair<std::int64_t, AveragedTrace>> traces;  ///< ascending n_c
  std::vector<Crossing> crossings;
  double final_at_bound_opt = 0.0;
  double final_at_exp_opt = 0.0;
  double relative_gap = 0.0;
  std::vector<Check> checks;
};

Fig4Report fig4_experiment(const Dataset& train, const Fig4Options& opt);

}  // namespace edgepipe::cli
