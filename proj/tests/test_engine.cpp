#include "hais/engine.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

using hais::HaisConfig;
using hais::Matrix;
using hais::ProposalBank;
using hais::Vector;
using hais::WeightingMode;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

hais::TargetModel gaussian(const Vector& mean, const Vector& var, double scale = 1.0) {
  const double log_scale = std::log(scale);
  const double log_norm =
      -0.5 * (mean.size() * std::log(2.0 * std::numbers::pi) + var.array().log().sum());
  return {"scaled_gaussian", static_cast<int>(mean.size()),
          [=](const Vector& x) {
            return log_scale + log_norm - 0.5 * ((x - mean).array().square() / var.array()).sum();
          },
          [=](const Vector& x) { return Vector((mean - x).array() / var.array()); },
          hais::GroundTruth{mean, log_scale}};
}

hais::TargetModel flat(int dim) {
  return {"flat", dim, [](const Vector&) { return 0.0; },
          [](const Vector& x) { return Vector::Zero(x.size()); }};
}

double pdf(const Vector& x, const Vector& mean, const Vector& var) {
  double value = 1.0;
  for (int d = 0; d < x.size(); ++d) {
    value *= std::exp(-0.5 * (x[d] - mean[d]) * (x[d] - mean[d]) / var[d]) /
             std::sqrt(2.0 * std::numbers::pi * var[d]);
  }
  return value;
}

HaisConfig small_config(int dim) {
  HaisConfig c;
  c.proposals = 8;
  c.per_proposal = 3;
  c.iterations = 15;
  c.hmc = hais::HmcParams::unit_mass(dim, 0.4, 8);
  c.proposal_variances = Vector::Constant(dim, 1.0);
  c.init_box = {-3.0, 3.0};
  c.seed = 42;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool identical(const hais::RunOutput& a, const hais::RunOutput& b) {
  if (a.archive.size() != b.archive.size()) return false;
  if (a.archive.points() != b.archive.points()) return false;
  for (Eigen::Index i = 0; i < a.archive.size(); ++i) {
    if (!same_bits(a.archive.log_weights()[i], b.archive.log_weights()[i])) return false;
  }
  return a.final_locations == b.final_locations && a.estimates.snis_mean == b.estimates.snis_mean &&
         same_bits(a.estimates.z_hat, b.estimates.z_hat) &&
         same_bits(a.acceptance_rate, b.acceptance_rate);
}

}  // namespace

TEST_CASE("DM weights against a matching proposal") {
  const Vector mean{{0.5, -1.0}};
  const Vector var{{2.0, 0.5}};
  const ProposalBank bank(mean, var);
  hais::RngStream rng(3);
  const auto samples = hais::sample_bank(bank, 200, rng);

  SUBCASE("normalized target: every weight is one") {
    const Vector log_w = hais::weight_samples(bank, gaussian(mean, var), samples);
    CHECK(log_w.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("target with Z = 2: every weight is two") {
    const Vector log_w = hais::weight_samples(bank, gaussian(mean, var, 2.0), samples);
    CHECK((log_w.array() - std::log(2.0)).abs().maxCoeff() <= 1e-12);
    CHECK(hais::z_estimate(log_w) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("DM weights match direct evaluation") {
  const Matrix locations{{0.0, 1.5, -2.0}, {1.0, -0.5, 0.3}};
  const Vector var{{1.5, 0.8}};
  const ProposalBank bank(locations, var);
  const auto target = hais::banana_target({2, 1.0, 1.0});

  hais::SampleSet samples = hais::allocate_samples(bank, 1);
  samples.points = Matrix{{0.1, -0.3, 1.2}, {0.4, 0.9, -1.1}};
  hais::SampleSet five;
  five.points = Matrix{{0.1, -0.3, 1.2, 2.0, -1.7}, {0.4, 0.9, -1.1, 0.0, 0.6}};
  five.proposal = {0, 1, 2, 0, 1};
  five.draw = {0, 0, 0, 1, 1};

  const Vector log_w = hais::weight_samples(bank, target, five);
  for (int m = 0; m < 5; ++m) {
    const Vector x = five.points.col(m);
    double mixture = 0.0;
    for (int i = 0; i < 3; ++i) mixture += pdf(x, locations.col(i), var) / 3.0;
    const double direct = std::exp(target.log_density(x)) / mixture;
    CHECK(std::abs(std::exp(log_w[m]) - direct) <= 1e-12 * direct);
  }

  SUBCASE("literal reading uses each proposal's own k-th draw") {
    const Vector literal = hais::weight_samples(bank, target, samples, WeightingMode::kLiteralAlg2);
    double denom = 0.0;
    for (int i = 0; i < 3; ++i) denom += pdf(samples.points.col(i), locations.col(i), var) / 3.0;
    for (int m = 0; m < 3; ++m) {
      const double direct = std::exp(target.log_density(samples.points.col(m))) / denom;
      CHECK(std::abs(std::exp(literal[m]) - direct) <= 1e-12 * direct);
    }
  }
}

TEST_CASE("zero-density samples get zero weight") {
  const hais::TargetModel half(
      "half", 1, [](const Vector& x) { return x[0] > 0.0 ? 0.0 : kNegInf; },
      [](const Vector& x) { return Vector::Zero(x.size()); });
  const ProposalBank bank(Matrix::Zero(1, 1), Vector::Ones(1));
  hais::RngStream rng(4);
  const auto samples = hais::sample_bank(bank, 100, rng);
  const Vector log_w = hais::weight_samples(bank, half, samples);
  for (int m = 0; m < 100; ++m) {
    CHECK((samples.points(0, m) > 0.0 ? std::isfinite(log_w[m]) : log_w[m] == kNegInf));
  }
}

TEST_CASE("parallel HMC adaptation") {
  SUBCASE("free particles") {
    const auto target = flat(3);
    hais::RngStream init(1);
    const ProposalBank bank(hais::uniform_box_locations(3, 6, -1.0, 1.0, init), Vector::Ones(3));
    const auto params = hais::HmcParams::unit_mass(3, 0.3, 7);
    const auto moved = hais::adapt_parallel_hmc(bank, target, params, 55, 4);
    for (int n = 0; n < 6; ++n) {
      hais::RngStream chain(55, hais::StreamRole::kHmc, static_cast<std::uint64_t>(n), 4);
      Vector p0(3);
      for (int d = 0; d < 3; ++d) p0[d] = chain.normal();
      CHECK((moved.locations.col(n) - (bank.location(n) + 7 * 0.3 * p0)).norm() < 1e-13);
      CHECK(moved.accepted[static_cast<std::size_t>(n)]);
    }
    CHECK(moved.gradient_evals == 6 * 8);
  }
  SUBCASE("independent of thread count") {
    const auto target = hais::banana_target({4, 3.0, 1.0});
    hais::RngStream init(2);
    const ProposalBank bank(hais::uniform_box_locations(4, 33, -2.0, 2.0, init), Vector::Ones(4));
    const auto params = hais::HmcParams::unit_mass(4, 0.1, 12);
    const auto serial = hais::adapt_parallel_hmc(bank, target, params, 9, 0, 1);
    const auto threaded = hais::adapt_parallel_hmc(bank, target, params, 9, 0, 4);
    CHECK(serial.locations == threaded.locations);
    CHECK(serial.accepted == threaded.accepted);
  }
  SUBCASE("pooled chain states are stationary") {
    const auto target = gaussian(Vector::Zero(2), Vector::Ones(2));
    hais::RngStream init(3);
    ProposalBank bank(hais::uniform_box_locations(2, 100, -1.0, 1.0, init), Vector::Ones(2));
    const auto params = hais::HmcParams::unit_mass(2, 0.5, 10);
    Vector sum = Vector::Zero(2), sum_sq = Vector::Zero(2);
    double count = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto moved = hais::adapt_parallel_hmc(bank, target, params, 77, t);
      bank.set_locations(moved.locations);
      if (t < 20) continue;
      sum += moved.locations.rowwise().sum();
      sum_sq += moved.locations.array().square().matrix().rowwise().sum();
      count += 100.0;
    }
    const Vector mean = sum / count;
    const Vector var = (sum_sq / count).array() - mean.array().square();
    CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
    CHECK((var.array() - 1.0).abs().maxCoeff() < 0.2);
  }
}

TEST_CASE("cooperation weights") {
  const auto target = hais::banana_target({2, 1.0, 1.0});

  SUBCASE("single chain") {
    const ProposalBank bank(Matrix{{0.3}, {0.2}}, Vector::Ones(2));
    const auto m = hais::cooperation_weights(Matrix{{1.0}, {-2.0}}, bank, target);
    CHECK(m.weights[0] == 1.0);
  }
  SUBCASE("symmetric pair") {
    const auto sym = gaussian(Vector::Zero(2), Vector::Ones(2));
    const ProposalBank bank(Matrix{{1.0, -1.0}, {0.0, 0.0}}, Vector::Ones(2));
    const auto m = hais::cooperation_weights(Matrix{{2.0, -2.0}, {0.5, 0.5}}, bank, sym);
    CHECK(m.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.weights[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("matches direct evaluation") {
    hais::RngStream rng(12);
    const Matrix previous = hais::uniform_box_locations(2, 4, -1.5, 1.5, rng);
    const Matrix proposed = hais::uniform_box_locations(2, 4, -1.5, 1.5, rng);
    const Vector var{{0.7, 1.3}};
    const ProposalBank bank(previous, var);
    const auto m = hais::cooperation_weights(proposed, bank, target);
    Vector direct(4);
    for (int n = 0; n < 4; ++n) {
      double mixture = 0.0;
      for (int i = 0; i < 4; ++i) mixture += pdf(proposed.col(n), previous.col(i), var);
      direct[n] = std::exp(target.log_density(proposed.col(n))) / mixture;
    }
    direct /= direct.sum();
    CHECK((m.weights - direct).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(m.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.atoms == proposed);

    const auto literal = hais::cooperation_weights(proposed, bank, target, WeightingMode::kLiteralAlg2);
    Vector pi(4);
    for (int n = 0; n < 4; ++n) pi[n] = std::exp(target.log_density(proposed.col(n)));
    CHECK((literal.weights - pi / pi.sum()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("all chains at zero density") {
    const hais::TargetModel empty("empty", 1, [](const Vector&) { return kNegInf; },
                                  [](const Vector& x) { return Vector::Zero(x.size()); });
    const ProposalBank bank(Matrix::Zero(1, 3), Vector::Ones(1));
    CHECK_THROWS_AS(hais::cooperation_weights(Matrix::Ones(1, 3), bank, empty), hais::DegeneracyError);
  }
}

TEST_CASE("cooperative resampling") {
  SUBCASE("degenerate weights") {
    hais::CooperationMeasure m{Matrix{{1.0, 2.0, 3.0, 4.0}}, Vector{{1.0, 0.0, 0.0, 0.0}}};
    hais::RngStream rng(1);
    CHECK(hais::cooperate_resample(m, rng) == Matrix::Constant(1, 4, 1.0));
  }
  SUBCASE("uniform weights over two atoms") {
    hais::CooperationMeasure m{Matrix{{0.0, 1.0}}, Vector{{0.5, 0.5}}};
    hais::RngStream rng(2);
    double ones = 0.0;
    const int calls = 50000;
    for (int i = 0; i < calls; ++i) ones += hais::cooperate_resample(m, rng).sum();
    CHECK(std::abs(ones / (2.0 * calls) - 0.5) < 0.01);
  }
  SUBCASE("deterministic and support-preserving") {
    hais::RngStream init(3);
    hais::CooperationMeasure m{hais::uniform_box_locations(3, 10, -1.0, 1.0, init),
                               Vector::LinSpaced(10, 0.0, 1.0)};
    m.weights /= m.weights.sum();
    hais::RngStream a(4), b(4);
    const Matrix ra = hais::cooperate_resample(m, a);
    CHECK(ra == hais::cooperate_resample(m, b));
    for (int n = 0; n < 10; ++n) {
      bool found = false;
      for (int i = 1; i < 10; ++i) found = found || ra.col(n) == m.atoms.col(i);
      CHECK(found);
      CHECK(ra.col(n) != m.atoms.col(0));  // zero weight
    }
  }
}

TEST_CASE("full run") {
  const auto target = hais::banana_target({3, 2.0, 1.0});
  const HaisConfig config = small_config(3);
  const auto out = hais::run(config, target);

  SUBCASE("archive shape") {
    REQUIRE(out.archive.size() == 8 * 3 * 15);
    for (Eigen::Index i = 0; i < out.archive.size(); ++i) {
      const auto s = out.archive.sample(i);
      CHECK(s.proposal < 8);
      CHECK(s.iteration < 15);
      CHECK_FALSE(std::isnan(s.log_weight));
    }
    CHECK(out.diagnostics.size() == 15u);
    const Vector log_w = out.archive.log_weights();
    const Vector normalized = (log_w.array() - hais::log_sum_exp(log_w)).exp();
    CHECK(normalized.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(normalized.minCoeff() >= 0.0);
  }
  SUBCASE("evaluation accounting") {
    CHECK(out.evaluations.weighting_density == 8 * 3 * 15);
    // Divergent trajectories stop early, so L + 1 is an upper bound.
    CHECK(out.evaluations.hmc_gradient <= 8 * 15 * 9);
    CHECK(out.evaluations.hmc_gradient > 8 * 15);
    CHECK(out.evaluations.hmc_density <= 8 * 15 * 2);
    CHECK(out.evaluations.hmc_density >= 8 * 15);
  }
  SUBCASE("bit-identical across repeats and thread counts") {
    HaisConfig threaded = config;
    threaded.threads = 3;
    CHECK(identical(out, hais::run(config, target)));
    CHECK(identical(out, hais::run(threaded, target)));
  }
  SUBCASE("location adaptation never reads the estimation samples") {
    HaisConfig k1 = config, k5 = config;
    k1.per_proposal = 1;
    k5.per_proposal = 5;
    k1.record_locations = k5.record_locations = true;
    const auto a = hais::run(k1, target);
    const auto b = hais::run(k5, target);
    REQUIRE(a.location_history.size() == 15u);
    for (std::size_t t = 0; t < 15; ++t) CHECK(a.location_history[t] == b.location_history[t]);
    CHECK(a.final_locations == b.final_locations);
  }
  SUBCASE("burn-in drops early iterations from the estimates") {
    HaisConfig burned = config;
    burned.burn_in = 10;
    const auto b = hais::run(burned, target);
    const Eigen::Index first = b.archive.first_index_of_iteration(10);
    const auto tail_w = b.archive.log_weights().tail(b.archive.size() - first);
    CHECK(b.archive.size() == out.archive.size());
    CHECK(b.estimates.z_hat == doctest::Approx(hais::z_estimate(tail_w)).epsilon(1e-14));
  }
}

TEST_CASE("perfect single proposal") {
  const Vector mean{{0.2, -0.4}};
  const Vector var{{1.0, 1.0}};
  HaisConfig c = small_config(2);
  c.proposals = 1;
  c.init_locations = Matrix(mean);
  c.proposal_variances = var;
  c.hmc = hais::HmcParams::unit_mass(2, 1e-9, 1);
  const auto out = hais::run(c, gaussian(mean, var));
  CHECK(std::abs(out.estimates.z_hat - 1.0) < 1e-6);
  const auto points = out.archive.points();
  const Vector log_w = out.archive.log_weights();
  CHECK((out.estimates.snis_mean - hais::snis_estimate(points, log_w)).norm() == 0.0);
}

TEST_CASE("z scales linearly with the target") {
  const Vector mean{{1.0}};
  const Vector var{{2.0}};
  HaisConfig c = small_config(1);
  const auto one = hais::run(c, gaussian(mean, var));
  const auto two = hais::run(c, gaussian(mean, var, 2.0));
  CHECK(two.estimates.z_hat == doctest::Approx(2.0 * one.estimates.z_hat).epsilon(1e-12));
  CHECK((two.estimates.snis_mean - one.estimates.snis_mean).norm() < 1e-12);
}

TEST_CASE("initialization") {
  const hais::TargetModel half(
      "half", 2, [](const Vector& x) { return x[0] > 2.0 ? -0.5 * x.squaredNorm() : kNegInf; },
      [](const Vector& x) { return Vector(-x); });
  HaisConfig c = small_config(2);
  c.init_box = {-3.0, 3.0};
  const Matrix init = hais::initial_locations(c, half);
  for (int n = 0; n < c.proposals; ++n) CHECK(init(0, n) > 2.0);

  c.init_box = {-3.0, -1.0};
  CHECK_THROWS_AS(hais::initial_locations(c, half), hais::Error);

  c.init_locations = Matrix::Constant(2, c.proposals, 2.5);
  CHECK(hais::initial_locations(c, half) == *c.init_locations);
  c.init_locations = Matrix::Zero(2, c.proposals);
  CHECK_THROWS_AS(hais::initial_locations(c, half), hais::Error);
}

TEST_CASE("config validation") {
  const auto target = hais::banana_target({2, 1.0, 1.0});
  HaisConfig c = small_config(2);
  CHECK_NOTHROW(c.validate(2));
  auto bad = [&](auto mutate) {
    HaisConfig copy = c;
    mutate(copy);
    CHECK_THROWS_AS(hais::run(copy, target), hais::Error);
  };
  bad([](HaisConfig& x) { x.proposals = 0; });
  bad([](HaisConfig& x) { x.per_proposal = 0; });
  bad([](HaisConfig& x) { x.iterations = 0; });
  bad([](HaisConfig& x) { x.burn_in = x.iterations; });
  bad([](HaisConfig& x) { x.proposal_variances = Vector::Ones(3); });
  bad([](HaisConfig& x) { x.hmc.eps = -1.0; });
  bad([](HaisConfig& x) { x.init_box = {1.0, 1.0}; });
  bad([](HaisConfig& x) { x.init_locations = Matrix::Zero(2, 3); });
}
