#include <doctest.h>

#include <numeric>
#include <random>

#include "edgepipe/data.hpp"
#include "edgepipe/errors.hpp"
#include "edgepipe/learner.hpp"
#include "oracles.hpp"

using namespace edgepipe;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("point_loss examples") {
  const LossSpec plain{0.0, 1};
  CHECK(point_loss(vec({0.0, 0.0}), Sample{vec({3.0, -1.0}), 0.0}, LossSpec{0.05, 7}) == 0.0);
  CHECK(point_loss(vec({1.0}), Sample{vec({2.0}), 1.0}, plain) == 1.0);
  CHECK(point_loss(vec({1.0}), Sample{vec({2.0}), 1.0}, LossSpec{0.05, 1}) ==
        doctest::Approx(1.05).epsilon(1e-15));
  CHECK_THROWS_AS(point_loss(vec({1.0, 2.0}), Sample{vec({2.0}), 1.0}, plain), std::invalid_argument);
}

TEST_CASE("point_gradient examples") {
  const LossSpec plain{0.0, 1};
  CHECK(point_gradient(vec({0.0}), Sample{vec({1.0}), 1.0}, plain)[0] == -2.0);
  CHECK(point_gradient(vec({2.0}), Sample{vec({1.0}), 2.0}, plain)[0] == 0.0);
  const Vector g = point_gradient(vec({1.0, 0.0}), Sample{vec({1.0, 1.0}), 0.0}, plain);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 2.0);
  CHECK_THROWS_AS(point_gradient(vec({1.0}), Sample{vec({1.0, 1.0}), 0.0}, plain),
                  std::invalid_argument);
}

TEST_CASE("point_gradient matches central finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(trial % 8);
    const Vector w = random_vector(rng, d);
    const Sample s{random_vector(rng, d), 2.0 * u(rng) - 1.0};
    const LossSpec spec{u(rng), 1 + static_cast<std::int64_t>(trial % 5)};
    const Vector exact = point_gradient(w, s, spec);
    const Vector fd = oracle::fd_gradient(w, s, spec);
    CHECK((exact - fd).norm() <= 1e-5 * std::max(1.0, exact.norm()));
  }
}

TEST_CASE("sgd_step examples") {
  const LossSpec plain{0.0, 1};
  CHECK(sgd_step(vec({0.0}), Sample{vec({1.0}), 1.0}, 0.1, plain)[0] == doctest::Approx(0.2));
  CHECK(sgd_step(vec({1.0}), Sample{vec({1.0}), 1.0}, 0.37, plain)[0] == 1.0);
  CHECK_THROWS_AS(sgd_step(vec({1.0}), Sample{vec({1.0}), 1.0}, 0.0, plain), std::invalid_argument);
  // small steps barely move the iterate
  const Vector w = sgd_step(vec({0.5}), Sample{vec({1.0}), 3.0}, 1e-12, plain);
  CHECK(std::abs(w[0] - 0.5) < 1e-10);
}

TEST_CASE("subset losses: singleton, identities") {
  std::mt19937_64 rng(3);
  const auto syn = synthesize(SyntheticSpec{240, 3, 0.5, std::nullopt}, 99);
  const Dataset& data = syn.data;
  const LossSpec spec{0.05, 240};
  const Vector w = random_vector(rng, 3);

  const std::size_t one[] = {17};
  CHECK(subset_loss(w, data, one, spec) == doctest::Approx(point_loss(w, data.sample(17), spec)));
  CHECK_THROWS_AS(subset_loss(w, data, std::span<const std::size_t>{}, spec), std::invalid_argument);

  std::vector<std::size_t> order(240);
  std::iota(order.begin(), order.end(), 0);
  const std::int64_t n_c = 24;
  const double N = 240.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    const Vector probe = random_vector(rng, 3, 2.0);
    const double full = subset_loss(probe, data, spec);
    for (std::int64_t b = 2; b <= 10; ++b) {
      const auto cut = static_cast<std::size_t>((b - 1) * n_c);
      const std::span<const std::size_t> avail(order.data(), cut);
      const std::span<const std::size_t> missing(order.data() + cut, order.size() - cut);
      const double lt = subset_loss(probe, data, avail, spec);
      const double dl = subset_loss(probe, data, missing, spec);
      const double rebuilt = (static_cast<double>(cut) / N) * lt + ((N - static_cast<double>(cut)) / N) * dl;
      CHECK(rel_err(rebuilt, full) <= 1e-12);

      // cumulative loss from the previous cumulative loss and the last block
      const auto prev_cut = static_cast<std::size_t>((b - 2) * n_c);
      const std::span<const std::size_t> last_block(order.data() + prev_cut, static_cast<std::size_t>(n_c));
      const double block = subset_loss(probe, data, last_block, spec);
      const double prev = b > 2 ? subset_loss(probe, data, std::span(order.data(), prev_cut), spec) : 0.0;
      const double bb = static_cast<double>(b);
      const double recursed = ((bb - 2.0) / (bb - 1.0)) * prev + (1.0 / (bb - 1.0)) * block;
      CHECK(rel_err(recursed, lt) <= 1e-12);
    }
  }
}

TEST_CASE("QuadraticLoss agrees with direct sums") {
  std::mt19937_64 rng(5);
  const auto data = synthesize(SyntheticSpec{300, 4, 1.0, std::nullopt}, 4).data;
  const LossSpec spec{0.3, 300};
  const QuadraticLoss q(data, spec);
  std::vector<std::size_t> rows{3, 9, 27, 81, 243};
  const QuadraticLoss qs(data, rows, spec);
  for (int i = 0; i < 20; ++i) {
    const Vector w = random_vector(rng, 4, 3.0);
    CHECK(rel_err(q.value(w), subset_loss(w, data, spec)) <= 1e-12);
    CHECK(rel_err(qs.value(w), subset_loss(w, data, rows, spec)) <= 1e-12);
    CHECK((q.gradient(w) - mean_gradient(w, data, spec)).norm() <= 1e-10);
  }
}

TEST_CASE("solve_erm examples") {
  const auto data = Dataset::from_samples(std::vector<Sample>{{vec({1.0}), 1.0}, {vec({1.0}), 3.0}});
  const auto sol = solve_erm(data, LossSpec{0.0, 2});
  CHECK(sol.w_star[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sol.loss_star == doctest::Approx(1.0).epsilon(1e-14));

  const auto big = synthesize(SyntheticSpec{50, 3, 0.2, std::nullopt}, 1).data;
  CHECK(solve_erm(big, LossSpec{1e9, 50}).w_star.norm() < 1e-5);

  const auto singular =
      Dataset::from_samples(std::vector<Sample>{{vec({1.0, 1.0}), 1.0}, {vec({2.0, 2.0}), 0.0}});
  CHECK_THROWS_WITH_AS(solve_erm(singular, LossSpec{0.0, 2}), doctest::Contains("lambda > 0"),
                       NumericalError);
  CHECK_NOTHROW(solve_erm(singular, LossSpec{0.05, 2}));
}

TEST_CASE("solve_erm beats random perturbations") {
  std::mt19937_64 rng(21);
  const auto data = synthesize(SyntheticSpec{400, 5, 0.7, std::nullopt}, 2).data;
  const LossSpec spec{0.05, 400};
  const auto sol = solve_erm(data, spec);
  const double g0 = mean_gradient(Vector::Zero(5), data, spec).norm();
  CHECK(mean_gradient(sol.w_star, data, spec).norm() <= 1e-8 * (1.0 + g0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Vector delta = random_vector(rng, 5);
    delta *= 0.1 * u(rng) / delta.norm();
    CHECK(subset_loss(sol.w_star + delta, data, spec) >= sol.loss_star);
  }
}

TEST_CASE("smoothness constants: closed-form cases") {
  const auto ones = Dataset::from_samples(std::vector<Sample>(5, Sample{vec({1.0}), 0.3}));
  auto k = estimate_smoothness_constants(ones, LossSpec{0.0, 5});
  CHECK(k.L == doctest::Approx(2.0));
  CHECK(k.c == doctest::Approx(2.0));

  const auto iso = Dataset::from_samples(
      std::vector<Sample>{{vec({1.0, 0.0}), 0.0}, {vec({0.0, 1.0}), 0.0}});
  k = estimate_smoothness_constants(iso, LossSpec{0.0, 2});
  CHECK(k.L == doctest::Approx(1.0));
  CHECK(k.c == doctest::Approx(1.0));

  // regularizer shifts both ends by 2 lambda / N
  k = estimate_smoothness_constants(iso, LossSpec{0.5, 2});
  CHECK(k.L == doctest::Approx(1.5));
  CHECK(k.c == doctest::Approx(1.5));
}

TEST_CASE("smoothness constants: iterative path agrees with dense solve") {
  std::mt19937_64 rng(8);
  const Eigen::Index d = 80;
  Matrix Q = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) Q.col(i) = random_vector(rng, d);
  const Eigen::HouseholderQR<Matrix> qr(Q);
  const Matrix orth = qr.householderQ();
  Vector spectrum(d);
  for (Eigen::Index i = 0; i < d; ++i) spectrum[i] = 0.1 + 3.0 * static_cast<double>(i * i) / (d * d);
  const Matrix H = orth * spectrum.asDiagonal() * orth.transpose();

  const auto dense = Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues();
  const auto it = extreme_eigenvalues(H);  // d > 64 takes the iterative path
  CHECK(it.L == doctest::Approx(dense.maxCoeff()).epsilon(1e-6));
  CHECK(it.c == doctest::Approx(dense.minCoeff()).epsilon(1e-4));
}

TEST_CASE("PL inequality and batch descent on the aggregate loss") {
  std::mt19937_64 rng(13);
  const auto data = synthesize(SyntheticSpec{500, 4, 0.5, std::nullopt}, 3).data;
  const LossSpec spec{0.05, 500};
  const auto k = estimate_smoothness_constants(data, spec);
  const auto sol = solve_erm(data, spec);
  CHECK(k.L >= k.c);
  CHECK(k.c > 0.0);
  for (int i = 0; i < 200; ++i) {
    const Vector w = sol.w_star + random_vector(rng, 4, 2.0);
    const Vector g = mean_gradient(w, data, spec);
    const double gap = subset_loss(w, data, spec) - sol.loss_star;
    CHECK(2.0 * k.c * gap <= g.squaredNorm() * (1.0 + 1e-9));

    const Vector next = w - (1.0 / k.L) * g;
    CHECK(subset_loss(next, data, spec) < subset_loss(w, data, spec));
  }
}

TEST_CASE("noise constants") {
  const LossSpec plain{0.0, 2};
  const auto single = Dataset::from_samples(std::vector<Sample>{{vec({1.5, -1.0}), 0.7}});
  const ModelParams probes1[] = {vec({0.0, 0.0}), vec({1.0, 2.0})};
  CHECK(estimate_noise_constants(single, plain, probes1).M == doctest::Approx(0.0));

  // gradients at w = 0 are -2 and +2: mean 0, variance 4
  const auto pair = Dataset::from_samples(std::vector<Sample>{{vec({1.0}), 1.0}, {vec({1.0}), -1.0}});
  const ModelParams probes2[] = {vec({0.0})};
  const auto nc = estimate_noise_constants(pair, plain, probes2);
  CHECK(nc.M == doctest::Approx(4.0));
  CHECK(nc.M_V == 0.0);
  REQUIRE(nc.probes.size() == 1);
  CHECK(nc.probes[0].grad_norm_sq == doctest::Approx(0.0));

  CHECK_THROWS_AS(estimate_noise_constants(pair, plain, std::span<const ModelParams>{}),
                  std::invalid_argument);
}
