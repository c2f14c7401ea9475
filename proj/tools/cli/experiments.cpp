#include "cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "edgepipe/errors.hpp"

namespace edgepipe::cli {

Fig3Report fig3_experiment(const ProtocolConfig& tmpl, const GridPolicy& grid,
                           const BoundConstants& k, const std::vector<double>& overheads) {
  if (overheads.empty()) throw ConfigError("fig3: at least one overhead is required");
  Fig3Report rep;
  rep.overheads = overheads;
  std::sort(rep.overheads.begin(), rep.overheads.end());
  for (double n_o : rep.overheads) {
    ProtocolConfig cfg = tmpl;
    cfg.n_o = n_o;
    const auto sizes = candidate_block_sizes(cfg, grid);
    rep.results.push_back(optimize_block_size(cfg, sizes, k));
  }

  bool interior = true;
  std::string interior_detail;
  for (std::size_t i = 0; i < rep.overheads.size(); ++i) {
    if (rep.overheads[i] <= 0.0) continue;
    const auto& e = rep.results[i].curve.entries;
    const std::int64_t opt = rep.results[i].n_c_opt;
    const bool ok = e.size() >= 3 && opt != e.front().n_c && opt != e.back().n_c;
    interior = interior && ok;
    interior_detail += fmt::format("{}n_o={}: n_c={}{}", interior_detail.empty() ? "" : ", ",
                                   rep.overheads[i], opt, ok ? "" : " (edge)");
  }
  rep.checks.push_back({"interior minimum for n_o > 0", interior, interior_detail});

  bool monotone = true;
  std::string path;
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    if (i > 0 && rep.results[i].n_c_opt < rep.results[i - 1].n_c_opt) monotone = false;
    path += fmt::format("{}{}", i ? " <= " : "", rep.results[i].n_c_opt);
  }
  rep.checks.push_back({"optimal block size non-decreasing in n_o", monotone, path});

  const Regime first = rep.results.front().regime_at_opt;
  const Regime last = rep.results.back().regime_at_opt;
  rep.checks.push_back({"optimum regime full at smallest n_o, partial at largest",
                        first == Regime::Full && last == Regime::Partial,
                        fmt::format("{} -> {}", to_string(first), to_string(last))});
  return rep;
}

namespace {

double mean_final_of(const ExperimentalOptimum& e, std::int64_t n_c) {
  for (const auto& row : e.table)
    if (row.n_c == n_c) return row.mean_final;
  throw std::logic_error("fig4: block size missing from the final-loss table");
}

}  // namespace

Fig4Report fig4_experiment(const Dataset& train, const Fig4Options& opt) {
  if (opt.reference.empty()) throw ConfigError("fig4: reference block sizes are required");
  if (opt.seeds.empty()) throw ConfigError("fig4: at least one run is required");
  Fig4Report rep;

  const auto grid = candidate_block_sizes(opt.tmpl, opt.grid);
  rep.bound = optimize_block_size(opt.tmpl, grid, opt.k);
  rep.experimental =
      experimental_optimum(train, opt.tmpl, opt.spec, grid, opt.init, opt.seeds, opt.run);

  std::vector<std::int64_t> traced = opt.reference;
  traced.push_back(rep.bound.n_c_opt);
  traced.push_back(rep.experimental.n_c_star);
  std::sort(traced.begin(), traced.end());
  traced.erase(std::unique(traced.begin(), traced.end()), traced.end());
  for (std::int64_t n_c : traced) {
    ProtocolConfig cfg = opt.tmpl;
    cfg.n_c = n_c;
    rep.traces.emplace_back(n_c, average_runs(train, cfg, opt.spec, opt.init, opt.seeds, opt.run));
  }

  // Threshold crossings among the reference block sizes.
  std::vector<std::int64_t> ref = opt.reference;
  std::sort(ref.begin(), ref.end());
  ref.erase(std::unique(ref.begin(), ref.end()), ref.end());
  auto trace_of = [&](std::int64_t n_c) -> const AveragedTrace& {
    for (const auto& [n, t] : rep.traces)
      if (n == n_c) return t;
    throw std::logic_error("fig4: missing trace");
  };
  double top = -std::numeric_limits<double>::infinity();
  double bottom = -std::numeric_limits<double>::infinity();
  for (auto n_c : ref) {
    top = std::max(top, trace_of(n_c).mean_initial);
    bottom = std::max(bottom, trace_of(n_c).mean_final);
  }
  bool ordered = true;
  std::string detail;
  for (double f : opt.thresholds) {
    Crossing cr;
    cr.level = bottom + f * (top - bottom);
    for (auto n_c : ref) {
      const auto& t = trace_of(n_c);
      double when = std::numeric_limits<double>::infinity();
      if (t.mean_initial <= cr.level) {
        when = 0.0;
      } else {
        for (std::size_t i = 0; i < t.times.size(); ++i)
          if (t.mean_loss[i] <= cr.level) {
            when = t.times[i];
            break;
          }
      }
      if (!cr.times.empty() && !(when >= cr.times.back())) ordered = false;
      if (!std::isfinite(when)) ordered = false;
      cr.times.push_back(when);
    }
    detail += fmt::format("{}level {:.6g}: [{}]", detail.empty() ? "" : "; ", cr.level,
                          fmt::join(cr.times, ", "));
    rep.crossings.push_back(std::move(cr));
  }
  rep.checks.push_back({"smaller block sizes cross every threshold earlier", ordered, detail});

  rep.final_at_bound_opt = mean_final_of(rep.experimental, rep.bound.n_c_opt);
  rep.final_at_exp_opt = mean_final_of(rep.experimental, rep.experimental.n_c_star);
  rep.relative_gap = std::abs(rep.final_at_bound_opt - rep.final_at_exp_opt) /
                     std::abs(rep.final_at_exp_opt);
  rep.checks.push_back(
      {"final loss at bound-optimal vs experimental optimum",
       rep.relative_gap <= opt.gap_tolerance,
       fmt::format("n_c*={} loss {:.8g}; bound-optimal n_c={} loss {:.8g}; relative gap {:.4f} "
                   "(tolerance {})",
                   rep.experimental.n_c_star, rep.final_at_exp_opt, rep.bound.n_c_opt,
                   rep.final_at_bound_opt, rep.relative_gap, opt.gap_tolerance)});
  return rep;
}

}  // namespace edgepipe::cli
