#include "edgepipe/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgepipe/errors.hpp"

namespace edgepipe {

std::string_view to_string(Regime r) { return r == Regime::Full ? "full" : "partial"; }

namespace detail {

std::int64_t floor_quotient(double a, double b) {
  const double q = a / b;
  return static_cast<std::int64_t>(std::floor(q + 1e-12 * std::max(1.0, std::abs(q))));
}

}  // namespace detail

std::int64_t PipelineSchedule::block_size(std::int64_t b) const {
  if (b < 1 || b > B_d) return 0;
  return b < B_d ? n_c : N - (B_d - 1) * n_c;
}

double PipelineSchedule::block_share(std::int64_t b) const {
  return static_cast<double>(block_size(b)) / static_cast<double>(N);
}

std::int64_t PipelineSchedule::total_updates() const {
  return training_blocks() * n_p + (regime == Regime::Full ? n_l : 0);
}

void validate(const ProtocolConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError("invalid protocol: " + what); };
  if (cfg.N < 1) fail("N must be positive (got " + std::to_string(cfg.N) + ")");
  if (cfg.n_c < 1) fail("n_c must be at least 1 (got " + std::to_string(cfg.n_c) + ")");
  if (cfg.n_c > cfg.N) fail("n_c must not exceed N");
  if (!std::isfinite(cfg.n_o) || cfg.n_o < 0.0) fail("n_o must be finite and non-negative");
  if (!std::isfinite(cfg.tau_p) || cfg.tau_p <= 0.0) fail("tau_p must be positive");
  if (!std::isfinite(cfg.alpha) || cfg.alpha <= 0.0) fail("alpha must be positive");
  if (!std::isfinite(cfg.T) || cfg.T <= static_cast<double>(cfg.n_c) + cfg.n_o)
    fail("T must exceed n_c + n_o so that at least one block completes");
}

PipelineSchedule compute_schedule(const ProtocolConfig& cfg) {
  validate(cfg);
  PipelineSchedule s;
  s.N = cfg.N;
  s.n_c = cfg.n_c;
  const double block_time = static_cast<double>(cfg.n_c) + cfg.n_o;

  s.B_d = (cfg.N + cfg.n_c - 1) / cfg.n_c;
  s.B = std::min(s.B_d, detail::floor_quotient(cfg.T, block_time));
  s.n_p = detail::floor_quotient(block_time, cfg.tau_p);

  const double delivery_time = static_cast<double>(s.B_d) * block_time;
  if (cfg.T > delivery_time) {
    s.regime = Regime::Full;
    s.tau_l = cfg.T - delivery_time;
    s.n_l = detail::floor_quotient(s.tau_l, cfg.tau_p);
    s.delivered_fraction = 1.0;
  } else {
    s.regime = Regime::Partial;
    s.tau_l = 0.0;
    s.n_l = 0;
    // blocks 1..B-1 are always full-sized here since B <= B_d
    s.delivered_fraction =
        static_cast<double>((s.B - 1) * cfg.n_c) / static_cast<double>(cfg.N);
  }
  return s;
}

std::vector<std::int64_t> candidate_block_sizes(const ProtocolConfig& cfg_template,
                                                const GridPolicy& policy) {
  if (cfg_template.N < 1) throw ConfigError("grid: template N must be positive");
  const std::int64_t N = cfg_template.N;

  auto fits = [&](std::int64_t n_c) {
    ProtocolConfig cfg = cfg_template;
    cfg.n_c = n_c;
    try {
      validate(cfg);
      return true;
    } catch (const ConfigError&) {
      return false;
    }
  };

  std::vector<std::int64_t> out;
  if (policy.kind == GridPolicy::Kind::List) {
    out = policy.values;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    for (auto n_c : out)
      if (!fits(n_c))
        throw ConfigError("grid: block size " + std::to_string(n_c) +
                          " does not give a valid protocol");
  } else {
    const std::int64_t lo = std::max<std::int64_t>(1, policy.min);
    const std::int64_t hi = policy.max <= 0 ? N : std::min(policy.max, N);
    if (lo > hi)
      throw ConfigError("grid: empty range [" + std::to_string(policy.min) + ", " +
                        std::to_string(policy.max) + "]");
    if (policy.kind == GridPolicy::Kind::DivisorsOfN) {
      for (std::int64_t n = lo; n <= hi; ++n)
        if (N % n == 0 && fits(n)) out.push_back(n);
    } else {
      if (policy.step < 1) throw ConfigError("grid: step must be at least 1");
      for (std::int64_t n = lo; n <= hi; n += policy.step)
        if (fits(n)) out.push_back(n);
      if ((out.empty() || out.back() != hi) && fits(hi)) out.push_back(hi);
    }
  }
  if (out.empty()) throw ConfigError("grid: no valid block size in the requested grid");
  return out;
}

}  // namespace edgepipe
