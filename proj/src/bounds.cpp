#include "edgepipe/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <tuple>

#include "edgepipe/errors.hpp"
#include "edgepipe/parallel.hpp"
#include "edgepipe/rng.hpp"

namespace edgepipe {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

/// log(1 - gamma c), the per-update contraction in log space.
double log_contraction(const BoundConstants& k) {
  const double gc = k.gamma * k.c;
  if (!(gc < 1.0))
    throw NumericalError("contraction violated: gamma * c = " + num(gc) + " must be < 1");
  return std::log1p(-gc);
}

/// sum_{l=1}^{m} exp(l * lr), closed form for lr < 0.
double geometric_tail(double lr, std::int64_t m) {
  if (m <= 0) return 0.0;
  if (lr == 0.0) return static_cast<double>(m);
  return std::exp(lr) * std::expm1(static_cast<double>(m) * lr) / std::expm1(lr);
}

}  // namespace

double compute_gamma(double alpha, double L, double M_G) {
  if (!(L > 0.0) || !(M_G > 0.0))
    throw NumericalError("compute_gamma: L and M_G must be positive");
  if (!(alpha > 0.0)) throw NumericalError("step size condition violated: alpha must be > 0");
  const double limit = 2.0 / (L * M_G);
  if (alpha > limit)
    throw NumericalError("step size condition violated: alpha = " + num(alpha) +
                         " exceeds 2 / (L M_G) = " + num(limit));
  const double gamma = alpha * (1.0 - 0.5 * alpha * L * M_G);
  if (!(gamma > 0.0))
    throw NumericalError("step size condition violated: alpha = 2 / (L M_G) gives gamma = 0");
  return gamma;
}

BoundConstants BoundConstants::make(double L, double c, double M, double M_V, double M_G,
                                    double D, double alpha) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("bound constants: ") + what);
  };
  need(std::isfinite(L) && L > 0.0, "L must be positive");
  need(std::isfinite(c) && c > 0.0, "c must be positive");
  need(c <= L, "c must not exceed L");
  need(std::isfinite(M) && M >= 0.0, "M must be non-negative");
  need(std::isfinite(M_V) && M_V >= 0.0, "M_V must be non-negative");
  need(std::isfinite(M_G) && M_G > 0.0, "M_G must be positive");
  need(std::isfinite(D) && D > 0.0, "D must be positive");
  BoundConstants k{L, c, M, M_V, M_G, D, alpha, 0.0};
  k.gamma = compute_gamma(alpha, L, M_G);
  log_contraction(k);
  return k;
}

double noise_floor(const BoundConstants& k) {
  return k.alpha * k.alpha * k.L * k.M / (2.0 * k.gamma * k.c);
}

double corollary_bound(const PipelineSchedule& sched, const BoundConstants& k) {
  const double lq = log_contraction(k);
  const double floor_term = noise_floor(k);
  const double initial_gap = 0.5 * k.L * k.D * k.D;
  const double excess = initial_gap - floor_term;
  const double lr = static_cast<double>(sched.n_p) * lq;
  const double share = static_cast<double>(sched.n_c) / static_cast<double>(sched.N);

  if (sched.regime == Regime::Partial) {
    if (sched.B < 1) throw ConfigError("corollary_bound: no complete block within T");
    const double f = sched.delivered_fraction;
    return floor_term * f + (1.0 - f) * initial_gap +
           share * geometric_tail(lr, sched.B - 1) * excess;
  }
  // the l = 0 term belongs to the last block, which may be short
  const double blocks = sched.block_share(sched.B_d) + share * geometric_tail(lr, sched.B_d - 1);
  return floor_term + std::exp(static_cast<double>(sched.n_l) * lq) * blocks * excess;
}

OptimizationResult optimize_block_size(const ProtocolConfig& cfg_template,
                                       std::span<const std::int64_t> grid,
                                       const BoundConstants& k) {
  if (grid.empty()) throw ConfigError("optimize_block_size: empty grid");
  OptimizationResult out;
  out.curve.constants = k;
  out.curve.cfg_template = cfg_template;
  std::vector<std::int64_t> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  for (auto n_c : sorted) {
    ProtocolConfig cfg = cfg_template;
    cfg.n_c = n_c;
    BoundEntry e;
    e.n_c = n_c;
    try {
      e.schedule = compute_schedule(cfg);
      e.bound = corollary_bound(e.schedule, k);
    } catch (const ConfigError& err) {
      throw ConfigError("n_c = " + std::to_string(n_c) + ": " + err.what());
    } catch (const NumericalError& err) {
      throw NumericalError("n_c = " + std::to_string(n_c) + ": " + err.what());
    }
    e.regime = e.schedule.regime;
    out.curve.entries.push_back(e);
  }

  const BoundEntry* best = &out.curve.entries.front();
  for (const auto& e : out.curve.entries) {
    if (e.bound < best->bound) best = &e;
    if (!out.boundary_n_c && e.regime == Regime::Full) out.boundary_n_c = e.n_c;
  }
  out.n_c_opt = best->n_c;
  out.bound_at_opt = best->bound;
  out.regime_at_opt = best->regime;
  return out;
}

TheoremEstimate theorem_bound_mc(const Dataset& data, const ProtocolConfig& cfg,
                                 const LossSpec& spec, const BoundConstants& k, std::size_t runs,
                                 std::uint64_t seed, const InitPolicy& init, unsigned threads) {
  if (runs < 2) throw ConfigError("theorem_bound_mc: at least 2 runs are required");
  const PipelineSchedule sched = compute_schedule(cfg);
  const ErmSolution erm = solve_erm(data, spec);
  const double lq = log_contraction(k);
  const double F = noise_floor(k);
  const double lr = static_cast<double>(sched.n_p) * lq;

  RunOptions opts;
  opts.record_block_iterates = true;
  opts.trace_stride = std::max<std::int64_t>(1, sched.total_updates());
  opts.iterate_stride = std::max<std::int64_t>(1, sched.total_updates() / 256);

  const auto seeds = run_seeds(seed, runs);
  std::vector<double> bound(runs), gap(runs);
  std::vector<std::vector<ModelParams>> iterates(runs);

  parallel_for(runs, threads, [&](std::size_t i) {
    const ModelParams w0 = init.draw(data.dim(), seeds[i]);
    const RunResult run = run_pipeline(data, cfg, spec, w0, seeds[i], opts);
    const auto& it = run.trace.block_end_iterates;
    const auto& blocks = run.log.blocks;

    // gap of block b's own data at the end of block b
    auto block_gap = [&](std::int64_t b) {
      const auto& rows = blocks[static_cast<std::size_t>(b - 1)];
      return subset_loss(it[static_cast<std::size_t>(b)], data, rows, spec) -
             subset_loss(erm.w_star, data, rows, spec);
    };

    double value = 0.0;
    if (sched.regime == Regime::Partial) {
      const double f = sched.delivered_fraction;
      const auto missing = run.log.missing_before(sched.B);
      const ModelParams& w_end = it[static_cast<std::size_t>(sched.B)];
      value = F * f + (1.0 - f) * (subset_loss(w_end, data, missing, spec) -
                                   subset_loss(erm.w_star, data, missing, spec));
      for (std::int64_t l = 1; l <= sched.B - 1; ++l)
        value += sched.block_share(sched.B - l) * std::exp(static_cast<double>(l) * lr) *
                 (block_gap(sched.B - l) - F);
    } else {
      double sum = 0.0;
      for (std::int64_t l = 0; l <= sched.B_d - 1; ++l)
        sum += sched.block_share(sched.B_d - l) * std::exp(static_cast<double>(l) * lr) *
               (block_gap(sched.B_d - l) - F);
      value = F + std::exp(static_cast<double>(sched.n_l) * lq) * sum;
    }
    bound[i] = value;
    gap[i] = subset_loss(run.trace.final_w, data, spec) - erm.loss_star;
    iterates[i] = run.trace.iterates;
  });

  auto mean_se = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / (n - 1.0) / n)};
  };

  TheoremEstimate out;
  out.runs = runs;
  out.loss_star = erm.loss_star;
  std::tie(out.estimate, out.stderr_estimate) = mean_se(bound);
  std::tie(out.measured_gap, out.stderr_gap) = mean_se(gap);
  std::vector<ModelParams> cloud;
  for (auto& v : iterates) cloud.insert(cloud.end(), v.begin(), v.end());
  out.max_iterate_distance = max_pairwise_distance(cloud, 4096);
  return out;
}

double pilot_diameter(const Dataset& data, const ProtocolConfig& cfg, const LossSpec& spec,
                      const InitPolicy& init, std::uint64_t seed) {
  const PipelineSchedule sched = compute_schedule(cfg);
  RunOptions opts;
  opts.trace_stride = std::max<std::int64_t>(1, sched.total_updates());
  opts.iterate_stride = std::max<std::int64_t>(1, sched.total_updates() / 2048);
  const std::uint64_t pilot_seed = derive_seed(seed, {static_cast<std::uint64_t>(Stream::Pilot)});
  const ModelParams w0 = init.draw(data.dim(), pilot_seed);
  const RunResult run = run_pipeline(data, cfg, spec, w0, pilot_seed, opts);
  const double d = max_pairwise_distance(run.trace.iterates);
  if (!(d > 0.0)) throw NumericalError("pilot run did not move; cannot derive D");
  return 1.1 * d;
}

}  // namespace edgepipe
