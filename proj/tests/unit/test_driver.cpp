#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "greediris/diffusion.hpp"
#include "greediris/driver.hpp"
#include "greediris/error.hpp"
#include "support/instances.hpp"

using namespace greediris;
using namespace greediris::testing;

namespace {

// Independent evaluations of the closed forms: the binomial term is summed
// term by term instead of going through log-gamma.
double ln_choose(double n, double k) {
  double s = 0;
  for (double i = 1; i <= k; ++i) s += std::log((n - k + i) / i);
  return s;
}

double theta0_oracle(double n, double k, double eps, double ell) {
  const double ep = eps * std::sqrt(2.0);
  const double lam = (2.0 + 2.0 * ep / 3.0) * (ln_choose(n, k) + ell * std::log(n) + std::log(std::log2(n))) * n /
                     (ep * ep);
  return std::ceil(lam * 2.0 / n);
}

double lambda_star_oracle(double n, double k, double eps, double ell) {
  const double e = 1.0 - 1.0 / std::exp(1.0);
  const double a = std::sqrt(ell * std::log(n) + std::log(2.0));
  const double b = std::sqrt(e * (ln_choose(n, k) + ell * std::log(n) + std::log(2.0)));
  return 2.0 * n * std::pow(e * a + b, 2) / (eps * eps);
}

RunConfig config_for(Mode mode, std::size_t k, std::size_t m = 2) {
  RunConfig c;
  c.mode = mode;
  c.k = k;
  c.m = m;
  c.seeds = RunSeeds::from_master(17);
  c.deterministic = true;
  return c;
}

}  // namespace

TEST_CASE("log_binomial") {
  CHECK(log_binomial(10, 3) == doctest::Approx(std::log(120.0)));
  CHECK(log_binomial(50, 50) == doctest::Approx(0.0));
  CHECK_THROWS_AS(log_binomial(3, 4), ParameterError);
}

TEST_CASE("estimate_theta0") {
  const auto base = estimate_theta0(1024, 10, 0.5, 1.0);
  CHECK(static_cast<double>(base) == theta0_oracle(1024, 10, 0.5, 1.0));
  for (double eps : {0.5, 0.2, 0.13, 0.05}) {
    CHECK(static_cast<double>(estimate_theta0(2000, 20, eps, 1.0)) == theta0_oracle(2000, 20, eps, 1.0));
    CHECK(estimate_theta0(2000, 20, eps / 2, 1.0) > 3 * estimate_theta0(2000, 20, eps, 1.0));
  }
  const auto full = estimate_theta0(64, 64, 0.2, 1.0);
  CHECK(full > 0);
  CHECK(static_cast<double>(full) == theta0_oracle(64, 64, 0.2, 1.0));
  CHECK_THROWS_AS(estimate_theta0(10, 11, 0.1, 1.0), ParameterError);
}

TEST_CASE("check_goodness") {
  auto full = check_goodness(500, 500, 100, 1, 0.13);
  CHECK(full.passed);
  CHECK(full.influence == doctest::Approx(100));

  auto zero = check_goodness(0, 500, 100, 1, 0.13);
  CHECK_FALSE(zero.passed);
  CHECK(zero.lower_bound == 0.0);

  auto ex = check_goodness(400, 1000, 1000, 2, 0.13);
  CHECK(ex.influence == doctest::Approx(400));
  CHECK(ex.passed);
  CHECK(ex.lower_bound == doctest::Approx(337.9).epsilon(1e-3));
  // Just under the threshold (1 + 0.1838) * 250 = 295.96.
  CHECK_FALSE(check_goodness(295, 1000, 1000, 2, 0.13).passed);
  CHECK(check_goodness(296, 1000, 1000, 2, 0.13).passed);

  CHECK_THROWS_AS(check_goodness(0, 0, 10, 1, 0.1), ParameterError);
}

TEST_CASE("final_theta") {
  const auto t = final_theta(1000, 10, 0.13, 1.0, 100);
  CHECK(static_cast<double>(t) == std::ceil(lambda_star_oracle(1000, 10, 0.13, 1.0) / 100));
  const auto t2 = final_theta(1000, 10, 0.13, 1.0, 200);
  CHECK(std::abs(static_cast<double>(t) / 2.0 - static_cast<double>(t2)) <= 1.0);
  CHECK(final_theta(1000, 10, 0.2, 1.0, 100) < t);
  CHECK_THROWS_AS(final_theta(1000, 10, 0.13, 1.0, 0), ParameterError);
  CHECK_THROWS_AS(final_theta(1000, 10, 0.13, 1.0, -3), ParameterError);
}

TEST_CASE("guarantee calculators") {
  const double e = 1.0 - std::exp(-1.0);
  CHECK(std::abs(combined_guarantee(e, 0.5 - 0.077, 0.13) - 0.123) <= 0.001);
  CHECK(combined_guarantee(1, 1, 0) == doctest::Approx(0.5));
  CHECK(combined_guarantee(truncated_guarantee(0.125), 0.5 - 0.077, 0.13) == doctest::Approx(-0.038).epsilon(0.03));
  CHECK_THROWS_AS(combined_guarantee(0, 0.5, 0.1), ParameterError);
  CHECK_THROWS_AS(combined_guarantee(0.5, -1, 0.1), ParameterError);

  CHECK(truncated_guarantee(1) == doctest::Approx(e));
  CHECK(truncated_guarantee(0.125) == doctest::Approx(0.1175).epsilon(1e-3));
  double prev = 0;
  for (double a = 1e-6; a <= 1.0; a *= 1.7) {
    const double g = truncated_guarantee(a);
    CHECK(g > prev);
    prev = g;
  }
  CHECK(truncated_guarantee(1e-9) < 1e-8);
  CHECK_THROWS_AS(truncated_guarantee(0), ParameterError);
  CHECK_THROWS_AS(truncated_guarantee(1.01), ParameterError);

  // Relative agreement with direct evaluation.
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double l = 0.01 + 0.99 * rng.uniform01();
    const double g = 0.01 + 0.99 * rng.uniform01();
    const double eps = 0.5 * rng.uniform01();
    const double direct = (l * g) / (l + g) - eps;
    CHECK(std::abs(combined_guarantee(l, g, eps) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    const double a = 0.001 + 0.999 * rng.uniform01();
    CHECK(std::abs(truncated_guarantee(a) - (1.0 - std::exp(-a))) <= 1e-12 * (1.0 - std::exp(-a)));
  }

  RunConfig c;
  c.mode = Mode::Imm;
  CHECK(configured_guarantee(c) == doctest::Approx(combined_guarantee(e, 0.5 - c.delta, c.epsilon)));
  c.mode = Mode::Sequential;
  CHECK(configured_guarantee(c) == doctest::Approx(e - c.epsilon));
}

TEST_CASE("RunConfig validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.alpha = 0; }).validate(), ParameterError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.epsilon = 1; }).validate(), ParameterError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.delta = 0.5; }).validate(), ParameterError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.k = 0; }).validate(), ParameterError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.m = 1; }).validate(), ConfigError);
  CHECK_NOTHROW(bad([](RunConfig& c) {
                  c.m = 1;
                  c.mode = Mode::Sequential;
                }).validate());
  CHECK(parse_mode("opim") == Mode::Opim);
  CHECK_THROWS_AS(parse_mode("tim"), ParameterError);
}

TEST_CASE("run_imm: saturated graph passes in round one") {
  const Graph g = prepared(8, complete_edges(8, 1.0));
  for (Mode mode : {Mode::Sequential, Mode::Imm}) {
    const auto r = run_imm(g, config_for(mode, 2));
    REQUIRE_FALSE(r.rounds.empty());
    CHECK(r.rounds.size() == 1);
    CHECK(r.rounds[0].passed);
    CHECK(r.converged);
    CHECK(r.solution.coverage == r.solution.universe_size);
    CHECK(r.solution.marginals[0] == r.solution.universe_size);
  }
}

TEST_CASE("run_imm: one sender matches sequential round by round") {
  const Graph g = prepared(64, path_edges(64, 0.5));
  const auto seq = run_imm(g, config_for(Mode::Sequential, 4));
  const auto imm = run_imm(g, config_for(Mode::Imm, 4, 2));
  REQUIRE(seq.rounds.size() == imm.rounds.size());
  for (std::size_t i = 0; i < seq.rounds.size(); ++i) {
    CHECK(seq.rounds[i].theta_hat == imm.rounds[i].theta_hat);
    CHECK(seq.rounds[i].coverage == imm.rounds[i].coverage);
  }
  CHECK(seq.solution.coverage == imm.solution.coverage);
  CHECK(seq.final_theta == imm.final_theta);
}

TEST_CASE("run_imm: rounds double and keep samples") {
  Rng rng(2);
  const Graph g = prepared(300, random_edges(rng, 300, 1500), Model::IC, 0.0, 0.1);
  const auto r = run_imm(g, config_for(Mode::Imm, 5, 3));
  for (std::size_t i = 1; i < r.rounds.size(); ++i) {
    CHECK(r.rounds[i].theta_hat == 2 * r.rounds[i - 1].theta_hat);
    CHECK(r.rounds[i].samples_retained == r.rounds[i - 1].theta_hat);
    CHECK_FALSE(r.rounds[i - 1].passed);
  }
  CHECK(r.rounds.size() <= static_cast<std::size_t>(std::ceil(std::log2(300.0))));
  CHECK(r.converged);
  CHECK(r.final_theta >= r.rounds.back().theta_hat);
  CHECK(r.solution.universe_size == r.final_theta);
}

TEST_CASE("run_imm: no edges means the most frequent roots win") {
  Rng rng(3);
  const Graph g = prepared(40, random_edges(rng, 40, 100, 0.0));
  const auto c = config_for(Mode::Sequential, 3);
  const auto r = run_imm(g, c);
  // Recount roots over the final universe.
  const auto batch = generate_batch(g, Model::IC, 0, static_cast<sample_t>(r.final_theta), c.seeds.sampling);
  std::vector<std::uint64_t> count(40, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) ++count[batch[i].root];
  auto sorted = count;
  std::sort(sorted.rbegin(), sorted.rend());
  CHECK(r.solution.coverage == sorted[0] + sorted[1] + sorted[2]);
  for (std::size_t i = 0; i < 3; ++i) CHECK(count[r.solution.seeds[i]] == r.solution.marginals[i]);
  const auto influence = expected_influence(g, r.solution.seeds, Model::IC, 100, 1);
  CHECK(influence.mean == doctest::Approx(3.0));
}

TEST_CASE("run_imm: unconverged runs are flagged") {
  // Isolated vertices: one seed covers about 1/n of the samples, which stays
  // below the last round's threshold of (1 + sqrt(2) eps).
  const Graph g = prepared(64, std::vector<EdgeTriple>{});
  const auto r = run_imm(g, config_for(Mode::Sequential, 1));
  CHECK_FALSE(r.converged);
  CHECK(r.rounds.size() == 6);
  CHECK(r.solution.seeds.size() == 1);
}

TEST_CASE("coverage fraction is the empirical influence") {
  Rng rng(4);
  const Graph g = prepared(20, random_edges(rng, 20, 60), Model::IC, 0.2, 0.6);
  const auto batch = generate_batch(g, Model::IC, 0, 64, 9);
  const auto sets = build_covering_sets(batch);
  const std::vector<vertex_t> seeds{1, 4, 7};
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto m = batch[i].members;
    hits += std::any_of(seeds.begin(), seeds.end(),
                        [&](vertex_t s) { return std::binary_search(m.begin(), m.end(), s); });
  }
  const auto check = check_goodness(union_coverage(64, sets, seeds), 64, 20, 1, 0.1);
  CHECK(check.influence == doctest::Approx(20.0 * static_cast<double>(hits) / 64.0));
}

TEST_CASE("opim bounds") {
  CHECK(opim_sigma_low(0, 100, 50, 3.0) == 0.0);
  CHECK(opim_sigma_low(10, 0, 50, 3.0) == 0.0);
  CHECK(opim_sigma_low(90, 100, 50, 3.0) < 50.0 * 0.9);
  CHECK(opim_sigma_up(90, 100, 50, 0.5, 3.0) > 50.0 * 0.9 / 0.5);
  // Bounds tighten as samples grow at fixed fractions.
  const double lo_small = opim_sigma_low(90, 100, 50, 3.0) / (50 * 0.9);
  const double lo_big = opim_sigma_low(90000, 100000, 50, 3.0) / (50 * 0.9);
  CHECK(lo_big > lo_small);
  CHECK(lo_big > 0.99);
}

TEST_CASE("run_opim: saturated graph approaches the ratio") {
  const Graph g = prepared(10, complete_edges(10, 1.0));
  auto c = config_for(Mode::Opim, 2, 3);
  c.epsilon = 0.05;
  c.opim_budget = 1 << 18;
  const auto r = run_opim(g, c);
  REQUIRE_FALSE(r.rounds.empty());
  for (const auto& round : r.rounds) {
    CHECK(round.cov1 == round.r1);
    CHECK(round.cov2 == round.r2);
    CHECK(round.r1 >= round.r2);
    CHECK(round.r1 - round.r2 <= 1);
  }
  CHECK(r.reached_target);
  CHECK(r.guarantee >= r.target);
  CHECK(r.guarantee <= r.approx_ratio);
  CHECK(r.guarantee == doctest::Approx(r.approx_ratio).epsilon(0.1));
}

TEST_CASE("run_opim: sequential selection and budget exhaustion") {
  Rng rng(5);
  const Graph g = prepared(200, random_edges(rng, 200, 800), Model::LT, 0.0, 0.3);
  auto c = config_for(Mode::Opim, 5, 3);
  c.model = Model::LT;
  c.epsilon = 0.01;
  c.opim_budget = 4096;
  c.opim_sequential_selection = true;
  const auto r = run_opim(g, c);
  CHECK(r.approx_ratio == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK_FALSE(r.reached_target);
  CHECK(r.rounds.back().samples == 4096);
  double best = 0;
  for (const auto& round : r.rounds) best = std::max(best, round.guarantee);
  CHECK(r.guarantee == best);
  for (std::size_t i = 1; i < r.rounds.size(); ++i) CHECK(r.rounds[i].samples >= r.rounds[i - 1].samples);
}

TEST_CASE("run_opim: bounds bracket the true influence") {
  // A small graph where Monte-Carlo estimates are cheap and accurate.
  Rng rng(6);
  const Graph g = prepared(30, random_edges(rng, 30, 90), Model::IC, 0.1, 0.4, 2);
  std::size_t inside = 0;
  const int runs = 100;
  for (int t = 0; t < runs; ++t) {
    auto c = config_for(Mode::Opim, 3, 2);
    c.seeds = RunSeeds::from_master(1000 + t);
    c.epsilon = 0.3;
    c.opim_budget = 2048;
    c.opim_sequential_selection = true;
    const auto r = run_opim(g, c);
    const auto& last = r.rounds.back();
    const auto sigma = expected_influence(g, r.solution.seeds, Model::IC, 10000, 77 + t).mean;
    const auto& chosen = *std::max_element(r.rounds.begin(), r.rounds.end(),
                                           [](const auto& a, const auto& b) { return a.guarantee < b.guarantee; });
    const auto& bounds = r.reached_target ? last : chosen;
    inside += bounds.sigma_low <= sigma && sigma <= bounds.sigma_up;
  }
  CHECK(inside >= 95);
}
