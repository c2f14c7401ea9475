#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "edgepipe/bounds.hpp"
#include "edgepipe/data.hpp"
#include "edgepipe/errors.hpp"
#include "edgepipe/simulator.hpp"
#include "oracles.hpp"

using namespace edgepipe;

namespace {

Dataset small_data(std::int64_t N, Eigen::Index d, double noise, std::uint64_t seed) {
  return synthesize(SyntheticSpec{N, d, noise, std::nullopt}, seed).data;
}

}  // namespace

TEST_CASE("run_pipeline: one block of everything equals offload-then-train") {
  const auto data = small_data(50, 3, 0.3, 1);
  const LossSpec spec{0.1, 50};
  const ProtocolConfig cfg{50, 50, 7, 1, 300, 0.01};
  const auto w0 = InitPolicy{}.draw(3, 42);
  const auto run = run_pipeline(data, cfg, spec, w0, 42);
  const auto ref = oracle::offload_then_train(data, cfg, spec, w0, 42);
  REQUIRE(run.trace.losses.size() == ref.size());
  CHECK(run.trace.losses == ref);
  CHECK(run.trace.times.front() == 58.0);
}

TEST_CASE("run_pipeline: identical samples and small steps never raise the loss") {
  FeatureMatrix X(20, 2);
  Vector y(20);
  for (int i = 0; i < 20; ++i) {
    X.row(i) << 1.0, -0.5;
    y(i) = 2.0;
  }
  const Dataset data(X, y);
  const LossSpec spec{0.01, 20};
  const auto sc = estimate_smoothness_constants(data, spec);
  const ProtocolConfig cfg{20, 4, 1, 1, 200, 1.0 / sc.L};
  const auto run = run_pipeline(data, cfg, spec, Vector::Zero(2), 3);
  double prev = run.trace.initial_loss;
  for (double l : run.trace.losses) {
    CHECK(l <= prev * (1 + 1e-14));
    prev = l;
  }
}

TEST_CASE("run_pipeline: transmission log partitions the rows") {
  const auto data = small_data(103, 2, 0.1, 2);
  const LossSpec spec{0.1, 103};
  const ProtocolConfig cfg{103, 10, 3, 1, 2000, 0.01};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = run_pipeline(data, cfg, spec, Vector::Zero(2), seed);
    const auto& blocks = run.log.blocks;
    REQUIRE(blocks.size() == 11);
    std::vector<std::size_t> all;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      CHECK(blocks[b].size() == (b + 1 < blocks.size() ? 10u : 3u));
      all.insert(all.end(), blocks[b].begin(), blocks[b].end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(103);
    std::iota(expect.begin(), expect.end(), std::size_t{0});
    CHECK(all == expect);

    const auto cum = run.log.cumulative();
    CHECK(cum.front() == 0);
    CHECK(cum[3] == 30);
    const auto avail = run.log.available_before(4);
    const auto missing = run.log.missing_before(4);
    CHECK(avail.size() == 30);
    CHECK(missing.size() == 73);
    std::set<std::size_t> u(avail.begin(), avail.end());
    u.insert(missing.begin(), missing.end());
    CHECK(u.size() == 103);
  }
}

TEST_CASE("run_pipeline: replay is bit-identical and seeds matter") {
  const auto data = small_data(80, 3, 0.5, 3);
  const LossSpec spec{0.1, 80};
  const ProtocolConfig cfg{80, 16, 4, 0.5, 400, 0.02};
  const Vector w0 = Vector::Ones(3);
  const auto a = run_pipeline(data, cfg, spec, w0, 11);
  const auto b = run_pipeline(data, cfg, spec, w0, 11);
  const auto c = run_pipeline(data, cfg, spec, w0, 12);
  CHECK(a.trace.losses == b.trace.losses);
  CHECK(a.trace.times == b.trace.times);
  CHECK(a.log.blocks == b.log.blocks);
  CHECK(a.trace.losses != c.trace.losses);
}

TEST_CASE("run_pipeline: sampling never touches undelivered rows") {
  const auto data = small_data(90, 2, 0.5, 4);
  const LossSpec spec{0.1, 90};
  RunOptions opts;
  opts.check_no_peeking = true;
  for (double T : {300.0, 2000.0})
    for (std::uint64_t seed = 0; seed < 10; ++seed)
      CHECK_NOTHROW(run_pipeline(data, ProtocolConfig{90, 7, 2, 0.3, T, 0.01}, spec,
                                 Vector::Zero(2), seed, opts));
}

TEST_CASE("run_pipeline: trace length and timing") {
  const auto data = small_data(100, 2, 0.5, 5);
  const LossSpec spec{0.1, 100};
  for (double T : {130.0, 250.0, 500.0, 1000.0}) {
    const ProtocolConfig cfg{100, 20, 5, 0.7, T, 0.01};
    const auto s = compute_schedule(cfg);
    const auto run = run_pipeline(data, cfg, spec, Vector::Zero(2), 1);
    CHECK(static_cast<std::int64_t>(run.trace.losses.size()) ==
          s.training_blocks() * s.n_p + s.n_l);
    CHECK(run.trace.updates == s.total_updates());
    CHECK(std::is_sorted(run.trace.times.begin(), run.trace.times.end()));
    CHECK(run.trace.times.back() <= T);
    CHECK(run.trace.times.front() == doctest::Approx(25.0 + 0.7));
  }

  RunOptions strided;
  strided.trace_stride = 7;
  const ProtocolConfig cfg{100, 20, 5, 0.7, 500, 0.01};
  const auto full = run_pipeline(data, cfg, spec, Vector::Zero(2), 1);
  const auto thin = run_pipeline(data, cfg, spec, Vector::Zero(2), 1, strided);
  CHECK(thin.trace.final_loss == full.trace.final_loss);
  CHECK(thin.trace.losses.size() == (full.trace.losses.size() + 6) / 7);
}

TEST_CASE("run_pipeline: errors") {
  const auto data = small_data(40, 2, 0.5, 6);
  const LossSpec spec{0.1, 40};
  CHECK_THROWS_AS(run_pipeline(data, ProtocolConfig{41, 10, 0, 1, 100, 0.01}, spec,
                               Vector::Zero(2), 1),
                  DataError);
  // tau_p longer than a block and no time left after delivery
  CHECK_THROWS_WITH_AS(run_pipeline(data, ProtocolConfig{40, 10, 0, 50, 40, 0.01}, spec,
                                    Vector::Zero(2), 1),
                       doctest::Contains("no training"), ConfigError);
  CHECK_THROWS_AS(run_pipeline(data, ProtocolConfig{40, 10, 0, 1, 100, 0.01}, spec,
                               Vector::Zero(3), 1),
                  std::invalid_argument);
}

TEST_CASE("average_runs") {
  const auto data = small_data(60, 2, 0.5, 7);
  const LossSpec spec{0.1, 60};
  const ProtocolConfig cfg{60, 12, 3, 1, 300, 0.02};
  const std::uint64_t one[] = {5};
  const auto a = average_runs(data, cfg, spec, InitPolicy{}, one);
  const auto single = run_pipeline(data, cfg, spec, InitPolicy{}.draw(2, 5), 5);
  CHECK(a.mean_loss == single.trace.losses);
  CHECK(a.mean_final == single.trace.final_loss);
  CHECK(a.stderr_final == 0.0);

  const std::uint64_t twice[] = {5, 5};
  const auto b = average_runs(data, cfg, spec, InitPolicy{}, twice);
  for (std::size_t i = 0; i < b.mean_loss.size(); ++i) {
    CHECK(b.mean_loss[i] == doctest::Approx(single.trace.losses[i]).epsilon(1e-15));
    CHECK(b.stderr_loss[i] == doctest::Approx(0.0));
  }

  const auto seeds = run_seeds(1, 6);
  RunOptions threaded;
  threaded.threads = 3;
  const auto serial = average_runs(data, cfg, spec, InitPolicy{}, seeds);
  const auto parallel = average_runs(data, cfg, spec, InitPolicy{}, seeds, threaded);
  CHECK(serial.mean_loss == parallel.mean_loss);
  CHECK(serial.stderr_final > 0.0);

  CHECK_THROWS_AS(average_runs(data, cfg, spec, InitPolicy{}, std::span<const std::uint64_t>{}),
                  ConfigError);
}

TEST_CASE("experimental_optimum") {
  const auto data = small_data(200, 2, 0.5, 8);
  const LossSpec spec{0.1, 200};
  const ProtocolConfig cfg{200, 1, 20, 1, 400, 0.02};
  const auto seeds = run_seeds(3, 4);

  const std::int64_t single[] = {40};
  CHECK(experimental_optimum(data, cfg, spec, single, InitPolicy{}, seeds).n_c_star == 40);

  // n_c = 190 completes a single block before T and never trains
  const std::int64_t grid[] = {40, 190};
  const auto r = experimental_optimum(data, cfg, spec, grid, InitPolicy{}, seeds);
  REQUIRE(r.table.size() == 2);
  CHECK(r.n_c_star == 40);
  const auto init = average_runs(data, ProtocolConfig{200, 40, 20, 1, 400, 0.02}, spec,
                                 InitPolicy{}, seeds);
  CHECK(r.table[1].mean_final == doctest::Approx(init.mean_initial).epsilon(1e-12));

  CHECK_THROWS_AS(experimental_optimum(data, cfg, spec, std::span<const std::int64_t>{},
                                       InitPolicy{}, seeds),
                  ConfigError);
}

TEST_CASE("max_pairwise_distance") {
  std::vector<ModelParams> pts;
  for (double v : {0.0, 1.0, -2.0, 0.5}) pts.push_back(Vector::Constant(1, v));
  CHECK(max_pairwise_distance(pts) == 3.0);
  CHECK(max_pairwise_distance(std::span<const ModelParams>{}) == 0.0);
  std::vector<ModelParams> line;
  for (int i = 0; i <= 10000; ++i) line.push_back(Vector::Constant(2, i * 1e-3));
  CHECK(max_pairwise_distance(line, 100) == doctest::Approx(10.0 * std::sqrt(2.0)));
}

TEST_CASE("long runs settle within a few noise floors") {
  constexpr std::int64_t N = 18576;
  const auto data = synthesize(SyntheticSpec{N, 8, 1.0, std::nullopt}, 99).data;
  const LossSpec spec{0.05, N};
  const ProtocolConfig cfg{N, 1032, 0, 1, 2.0 * N, 1e-4};
  const auto loss_star = solve_erm(data, spec).loss_star;
  const double floor = noise_floor(BoundConstants::make(1.908, 0.061, 1.0, 0.0, 1.0, 1.0, 1e-4));
  RunOptions opts;
  opts.trace_stride = 1000;
  const auto seeds = run_seeds(7, 4);
  const auto avg = average_runs(data, cfg, spec, InitPolicy{InitPolicy::Kind::Zero, {}}, seeds, opts);
  MESSAGE("gap = " << avg.mean_final - loss_star << ", floor = " << floor);
  CHECK(avg.mean_final - loss_star <= 3.0 * floor);
}
