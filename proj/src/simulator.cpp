#include "edgepipe/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "edgepipe/errors.hpp"
#include "edgepipe/parallel.hpp"
#include "edgepipe/rng.hpp"

namespace edgepipe {

ModelParams InitPolicy::draw(Eigen::Index dim, std::uint64_t run_seed) const {
  switch (kind) {
    case Kind::Zero:
      return ModelParams::Zero(dim);
    case Kind::Fixed:
      if (fixed.size() != dim) throw ConfigError("init: fixed w0 has the wrong dimension");
      return fixed;
    case Kind::Gaussian:
      break;
  }
  Engine rng = make_stream(run_seed, Stream::Init);
  std::normal_distribution<double> normal(0.0, 1.0);
  ModelParams w(dim);
  for (Eigen::Index i = 0; i < dim; ++i) w[i] = normal(rng);
  return w;
}

std::vector<std::size_t> TransmissionLog::cumulative() const {
  std::vector<std::size_t> out(blocks.size(), 0);
  for (std::size_t b = 1; b < blocks.size(); ++b) out[b] = out[b - 1] + blocks[b - 1].size();
  return out;
}

std::vector<std::size_t> TransmissionLog::available_before(std::int64_t b) const {
  std::vector<std::size_t> out;
  for (std::int64_t l = 1; l < b && l <= static_cast<std::int64_t>(blocks.size()); ++l) {
    const auto& blk = blocks[static_cast<std::size_t>(l - 1)];
    out.insert(out.end(), blk.begin(), blk.end());
  }
  return out;
}

std::vector<std::size_t> TransmissionLog::missing_before(std::int64_t b) const {
  std::vector<std::size_t> out;
  for (std::int64_t l = std::max<std::int64_t>(b, 1); l <= static_cast<std::int64_t>(blocks.size());
       ++l) {
    const auto& blk = blocks[static_cast<std::size_t>(l - 1)];
    out.insert(out.end(), blk.begin(), blk.end());
  }
  return out;
}

RunResult run_pipeline(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                       const ModelParams& w0, std::uint64_t seed, const RunOptions& options) {
  const PipelineSchedule sched = compute_schedule(cfg);
  if (static_cast<std::int64_t>(data.size()) != cfg.N)
    throw DataError("run_pipeline: dataset has " + std::to_string(data.size()) +
                    " rows but N = " + std::to_string(cfg.N));
  if (w0.size() != data.dim()) throw std::invalid_argument("run_pipeline: w0 dimension mismatch");
  if (sched.n_p == 0 && sched.n_l == 0)
    throw ConfigError("run_pipeline: no training occurs (n_p = 0 and n_l = 0)");
  if (options.trace_stride < 1) throw ConfigError("run_pipeline: trace stride must be >= 1");

  const auto N = static_cast<std::size_t>(cfg.N);
  const auto n_c = static_cast<std::size_t>(cfg.n_c);

  RunResult result;
  auto& trace = result.trace;
  auto& log = result.log;

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine order_rng = make_stream(seed, Stream::Order);
  std::shuffle(order.begin(), order.end(), order_rng);
  log.blocks.resize(static_cast<std::size_t>(sched.B_d));
  for (std::size_t b = 0; b < log.blocks.size(); ++b) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(b * n_c);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(N, (b + 1) * n_c));
    log.blocks[b].assign(first, last);
  }

  Engine sampling_rng = make_stream(seed, Stream::Sampling);
  const QuadraticLoss full_loss(data, spec);
  const std::int64_t total = sched.total_updates();
  const double block_time = static_cast<double>(cfg.n_c) + cfg.n_o;

  trace.seed = seed;
  trace.initial_loss = full_loss.value(w0);
  trace.times.reserve(static_cast<std::size_t>(total / options.trace_stride + 2));
  trace.losses.reserve(trace.times.capacity());
  if (options.record_block_iterates) {
    trace.block_end_iterates.resize(static_cast<std::size_t>(sched.B + 1));
    trace.block_end_iterates[1] = w0;
  }

  std::vector<char> delivered;
  if (options.check_no_peeking) delivered.assign(N, 0);

  ModelParams w = w0;
  if (options.iterate_stride > 0) trace.iterates.push_back(w);
  std::int64_t k = 0;

  auto update = [&](std::size_t row, double time) {
    if (options.check_no_peeking && !delivered[row])
      throw std::logic_error("run_pipeline: sampled row " + std::to_string(row) +
                             " before it was delivered");
    w = sgd_step(w, data.x(row), data.y(row), cfg.alpha, spec);
    ++k;
    if (k % options.trace_stride == 0 || k == total) {
      trace.times.push_back(time);
      trace.losses.push_back(full_loss.value(w));
    }
    if (options.iterate_stride > 0 && (k % options.iterate_stride == 0 || k == total))
      trace.iterates.push_back(w);
  };

  for (std::int64_t b = 2; b <= sched.B; ++b) {
    const double start = static_cast<double>(b - 1) * block_time;
    trace.block_boundaries.push_back({b, start});
    // blocks 1..b-1 are full-sized because b - 1 < B_d
    const std::size_t available = static_cast<std::size_t>(b - 1) * n_c;
    if (options.check_no_peeking)
      for (auto row : log.blocks[static_cast<std::size_t>(b - 2)]) delivered[row] = 1;
    std::uniform_int_distribution<std::size_t> pick(0, available - 1);
    for (std::int64_t j = 1; j <= sched.n_p; ++j)
      update(order[pick(sampling_rng)], start + static_cast<double>(j) * cfg.tau_p);
    if (options.record_block_iterates) trace.block_end_iterates[static_cast<std::size_t>(b)] = w;
  }

  if (sched.regime == Regime::Full) {
    const double start = static_cast<double>(sched.B_d) * block_time;
    trace.block_boundaries.push_back({sched.B_d + 1, start});
    if (options.check_no_peeking) std::fill(delivered.begin(), delivered.end(), 1);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    for (std::int64_t j = 1; j <= sched.n_l; ++j)
      update(pick(sampling_rng), start + static_cast<double>(j) * cfg.tau_p);
  }

  trace.updates = k;
  trace.final_w = w;
  trace.final_loss = trace.losses.empty() ? trace.initial_loss : trace.losses.back();
  return result;
}

namespace {

double standard_error(double sum, double sum_sq, std::size_t n) {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0));
  return std::sqrt(var / nn);
}

}  // namespace

AveragedTrace average_runs(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                           const InitPolicy& init, std::span<const std::uint64_t> seeds,
                           const RunOptions& options) {
  if (seeds.empty()) throw ConfigError("average_runs: at least one seed is required");
  std::vector<TrainingTrace> traces(seeds.size());
  parallel_for(seeds.size(), options.threads, [&](std::size_t i) {
    RunOptions opts = options;
    opts.record_block_iterates = false;
    opts.iterate_stride = 0;
    const ModelParams w0 = init.draw(data.dim(), seeds[i]);
    traces[i] = run_pipeline(data, cfg, spec, w0, seeds[i], opts).trace;
  });

  AveragedTrace out;
  out.runs = traces.size();
  out.times = traces.front().times;
  const std::size_t len = out.times.size();
  for (const auto& t : traces)
    if (t.times != out.times) throw std::logic_error("average_runs: traces are misaligned");

  out.mean_loss.assign(len, 0.0);
  out.stderr_loss.assign(len, 0.0);
  const std::size_t n = traces.size();
  for (std::size_t p = 0; p < len; ++p) {
    double s = 0.0, s2 = 0.0;
    for (const auto& t : traces) {
      s += t.losses[p];
      s2 += t.losses[p] * t.losses[p];
    }
    out.mean_loss[p] = s / static_cast<double>(n);
    out.stderr_loss[p] = standard_error(s, s2, n);
  }
  double si = 0.0, sf = 0.0, sf2 = 0.0;
  for (const auto& t : traces) {
    si += t.initial_loss;
    sf += t.final_loss;
    sf2 += t.final_loss * t.final_loss;
  }
  out.mean_initial = si / static_cast<double>(n);
  out.mean_final = sf / static_cast<double>(n);
  out.stderr_final = standard_error(sf, sf2, n);
  return out;
}

ExperimentalOptimum experimental_optimum(const Dataset& data, const ProtocolConfig& cfg_template,
                                         const LossSpec& spec, std::span<const std::int64_t> grid,
                                         const InitPolicy& init,
                                         std::span<const std::uint64_t> seeds,
                                         const RunOptions& options) {
  if (grid.empty()) throw ConfigError("experimental_optimum: empty grid");
  ExperimentalOptimum out;
  out.table.reserve(grid.size());
  for (auto n_c : grid) {
    ProtocolConfig cfg = cfg_template;
    cfg.n_c = n_c;
    RunOptions opts = options;
    // only the endpoint matters here
    opts.trace_stride = std::max<std::int64_t>(opts.trace_stride, 1 << 20);
    const AveragedTrace avg = average_runs(data, cfg, spec, init, seeds, opts);
    out.table.push_back({n_c, avg.mean_final, avg.stderr_final});
  }
  auto best = out.table.begin();
  for (auto it = out.table.begin(); it != out.table.end(); ++it)
    if (it->mean_final < best->mean_final) best = it;
  out.n_c_star = best->n_c;
  return out;
}

double max_pairwise_distance(std::span<const ModelParams> points, std::size_t max_points) {
  if (points.size() < 2) return 0.0;
  std::vector<const ModelParams*> kept;
  const std::size_t stride = (points.size() + max_points - 1) / std::max<std::size_t>(max_points, 1);
  for (std::size_t i = 0; i < points.size(); i += std::max<std::size_t>(stride, 1))
    kept.push_back(&points[i]);
  if (kept.back() != &points.back()) kept.push_back(&points.back());
  double best = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j)
      best = std::max(best, (*kept[i] - *kept[j]).squaredNorm());
  return std::sqrt(best);
}

}  // namespace edgepipe
