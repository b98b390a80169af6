#include "greediris/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "greediris/error.hpp"
#include "greediris/rng.hpp"

namespace greediris {

namespace {

constexpr double kGreedyRatio = 1.0 - 1.0 / std::numbers::e;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Sequential: return "sequential";
    case Mode::Imm: return "imm";
    case Mode::Opim: return "opim";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "sequential") return Mode::Sequential;
  if (text == "imm") return Mode::Imm;
  if (text == "opim") return Mode::Opim;
  throw ParameterError("unknown mode '" + std::string(text) + "' (expected sequential, imm or opim)");
}

RunSeeds RunSeeds::from_master(std::uint64_t master) noexcept {
  return {derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3), derive_seed(master, 4),
          derive_seed(master, 5)};
}

void RunConfig::validate() const {
  if (k < 1) throw ParameterError("k must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  if (!(ell > 0.0)) throw ParameterError("ell must be positive");
  if (!(delta > 0.0 && delta < 0.5)) throw ParameterError("delta must lie in (0, 1/2)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  if (mode != Mode::Sequential && m < 2) throw ConfigError("distributed modes need at least 2 workers");
  if (bucket_override && *bucket_override == 0) throw ParameterError("bucket override must be positive");
  if (mode == Mode::Opim && opim_budget < 2) throw ParameterError("OPIM budget must be at least 2 samples");
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) throw ParameterError("k must not exceed n");
  const auto nn = static_cast<double>(n);
  const auto kk = static_cast<double>(k);
  return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
}

std::size_t estimate_theta0(std::size_t n, std::size_t k, double epsilon, double ell) {
  if (k < 1 || k > n) throw ParameterError("estimate_theta0 requires 1 <= k <= n");
  const double nn = static_cast<double>(n);
  const double eps_prime = std::numbers::sqrt2 * epsilon;
  const double log_log = std::log(std::max(1.0, std::log2(nn)));
  const double lambda_prime = (2.0 + 2.0 / 3.0 * eps_prime) *
                              (log_binomial(n, k) + ell * std::log(nn) + log_log) * nn /
                              (eps_prime * eps_prime);
  return static_cast<std::size_t>(std::ceil(lambda_prime / (nn / 2.0)));
}

GoodnessCheck check_goodness(std::uint64_t coverage, std::uint64_t universe_size, std::size_t n,
                             std::size_t round_index, double epsilon) {
  if (universe_size == 0) throw ParameterError("goodness check needs a non-empty universe");
  const double nn = static_cast<double>(n);
  const double eps_prime = std::numbers::sqrt2 * epsilon;
  GoodnessCheck out;
  out.influence = nn * static_cast<double>(coverage) / static_cast<double>(universe_size);
  out.lower_bound = out.influence / (1.0 + eps_prime);
  out.passed = out.influence >= (1.0 + eps_prime) * nn / std::ldexp(1.0, static_cast<int>(round_index));
  return out;
}

std::size_t final_theta(std::size_t n, std::size_t k, double epsilon, double ell, double lower_bound) {
  if (!(lower_bound > 0.0)) throw ParameterError("final_theta needs a positive lower bound");
  const double nn = static_cast<double>(n);
  const double a = std::sqrt(ell * std::log(nn) + std::numbers::ln2);
  const double b = std::sqrt(kGreedyRatio * (log_binomial(n, k) + ell * std::log(nn) + std::numbers::ln2));
  const double root = kGreedyRatio * a + b;
  const double lambda_star = 2.0 * nn * root * root / (epsilon * epsilon);
  return static_cast<std::size_t>(std::ceil(lambda_star / lower_bound));
}

double adjusted_ell(double ell, std::size_t n) {
  if (n < 2) return ell;
  return ell * (1.0 + std::numbers::ln2 / std::log(static_cast<double>(n)));
}

double combined_guarantee(double local_ratio, double global_ratio, double epsilon) {
  if (!(local_ratio > 0.0 && local_ratio <= 1.0 && global_ratio > 0.0 && global_ratio <= 1.0)) {
    throw ParameterError("approximation ratios must lie in (0, 1]");
  }
  return local_ratio * global_ratio / (local_ratio + global_ratio) - epsilon;
}

double truncated_guarantee(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  return -std::expm1(-alpha);
}

double configured_guarantee(const RunConfig& config) {
  const bool sequential = config.mode == Mode::Sequential ||
                          (config.mode == Mode::Opim && config.opim_sequential_selection);
  if (sequential) return kGreedyRatio - config.epsilon;
  return combined_guarantee(truncated_guarantee(config.alpha), 0.5 - config.delta, config.epsilon);
}

namespace {

// Runs one seed selection over ids [0, theta) (restricted by parity) and
// folds timings and diagnostics into the caller's accumulators.
class Selector {
 public:
  Selector(SampleStore& store, const RunConfig& config, bool sequential)
      : store_(store), config_(config), sequential_(sequential) {}

  Solution select(std::size_t theta, std::size_t round_index, IdParity parity = IdParity::All) {
    if (sequential_) {
      auto t = Clock::now();
      store_.grow_to(theta);
      timings.sampling += seconds_since(t);
      t = Clock::now();
      Solution sol = select_sequential(store_, theta, config_.k, parity);
      const double s = seconds_since(t);
      timings.sender_select += s;
      source = 0;
      return sol;
    }
    RoundConfig rc;
    rc.k = config_.k;
    rc.m = config_.m;
    rc.delta = config_.delta;
    rc.alpha = config_.alpha;
    rc.bucket_workers = config_.bucket_workers;
    rc.bucket_override = config_.bucket_override;
    rc.partition_seed = derive_seed(config_.seeds.partition, round_index);
    if (config_.deterministic) rc.scheduler_seed = derive_seed(config_.seeds.scheduler, round_index);
    rc.transport = config_.transport;
    rc.parity = parity;
    RoundResult r = run_round(store_, theta, rc);
    timings += r.timings;
    diagnostics = std::move(r.diagnostics);
    seeds_streamed = r.seeds_streamed;
    seeds_truncated = r.seeds_truncated;
    source = r.selected.source;
    return std::move(r.selected.solution);
  }

  RoundTimings timings;
  ReceiverDiagnostics diagnostics;
  std::uint64_t seeds_streamed = 0;
  std::uint64_t seeds_truncated = 0;
  std::uint32_t source = 0;

 private:
  SampleStore& store_;
  const RunConfig& config_;
  bool sequential_;
};

}  // namespace

RunResult run_imm(const Graph& graph, const RunConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const std::size_t n = graph.vertex_count();
  if (config.k > n) throw ParameterError("k exceeds the number of vertices");

  RunResult result;
  result.ell_used = adjusted_ell(config.ell, n);
  SampleStore store(graph, config.model, config.seeds.sampling);
  Selector selector(store, config, config.mode == Mode::Sequential);

  std::size_t theta_hat = estimate_theta0(n, config.k, config.epsilon, result.ell_used);
  const std::size_t max_rounds =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))));
  Solution solution;
  double lower_bound = 0;
  for (std::size_t x = 1; x <= max_rounds; ++x) {
    if (x > 1) theta_hat *= 2;
    RoundState state;
    state.round_index = x;
    state.theta_hat = theta_hat;
    state.samples_retained = std::min(store.size(), theta_hat);
    solution = selector.select(theta_hat, x);
    const auto check = check_goodness(solution.coverage, theta_hat, n, x, config.epsilon);
    state.coverage = solution.coverage;
    state.influence_estimate = check.influence;
    state.lower_bound = check.lower_bound;
    state.passed = check.passed;
    result.rounds.push_back(state);
    if (check.passed) {
      lower_bound = check.lower_bound;
      result.converged = true;
      break;
    }
  }

  if (result.converged) {
    const std::size_t theta = final_theta(n, config.k, config.epsilon, result.ell_used, lower_bound);
    result.final_theta = std::max(theta, theta_hat);
    solution = selector.select(result.final_theta, max_rounds + 1);
  } else {
    result.final_theta = theta_hat;
  }

  result.solution = std::move(solution);
  result.final_source = selector.source;
  result.timings = selector.timings;
  result.timings.total = seconds_since(start);
  result.diagnostics = std::move(selector.diagnostics);
  result.seeds_streamed = selector.seeds_streamed;
  result.seeds_truncated = selector.seeds_truncated;
  return result;
}

double opim_sigma_low(std::uint64_t cov2, std::size_t r2, std::size_t n, double log_term) {
  if (r2 == 0) return 0.0;
  const double a = log_term;
  const double root = std::sqrt(static_cast<double>(cov2) + 2.0 * a / 9.0) - std::sqrt(a / 2.0);
  const double low = root * root - a / 18.0;
  // The lower bound is meaningless once the square root goes negative.
  if (root <= 0.0 || low <= 0.0) return 0.0;
  return low * static_cast<double>(n) / static_cast<double>(r2);
}

double opim_sigma_up(std::uint64_t cov1, std::size_t r1, std::size_t n, double approx_ratio, double log_term) {
  if (r1 == 0) return static_cast<double>(n);
  const double a = log_term;
  const double root = std::sqrt(static_cast<double>(cov1) / approx_ratio + a / 2.0) + std::sqrt(a / 2.0);
  return root * root * static_cast<double>(n) / static_cast<double>(r1);
}

OpimResult run_opim(const Graph& graph, const RunConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const std::size_t n = graph.vertex_count();
  if (config.k > n) throw ParameterError("k exceeds the number of vertices");
  const bool sequential = config.opim_sequential_selection || config.mode == Mode::Sequential;

  OpimResult result;
  result.approx_ratio = sequential ? kGreedyRatio
                                   : combined_guarantee(truncated_guarantee(config.alpha), 0.5 - config.delta, 0.0);
  result.target = result.approx_ratio - config.epsilon;

  // Sample schedule: start at theta_max * eps^2 * k / n and double up to
  // theta_max, where theta_max is the IMM count for OPT >= k, capped by the budget.
  const double nn = static_cast<double>(n);
  const std::size_t theta_formula =
      final_theta(n, config.k, config.epsilon, config.ell, static_cast<double>(config.k));
  const std::size_t theta_max = std::max<std::size_t>(2, std::min(config.opim_budget, theta_formula));
  const double scaled = static_cast<double>(theta_max) * config.epsilon * config.epsilon *
                        static_cast<double>(config.k) / nn;
  const std::size_t theta0 =
      std::min(theta_max, std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(scaled))));
  const std::size_t i_max = 1 + static_cast<std::size_t>(std::ceil(
                                    std::log2(static_cast<double>(theta_max) / static_cast<double>(theta0))));
  const double log_term = config.ell * std::log(nn) + std::log(3.0 * static_cast<double>(i_max));

  SampleStore store(graph, config.model, config.seeds.sampling);
  Selector selector(store, config, sequential);
  std::vector<std::uint8_t> in_seed_set(n, 0);
  bool have_best = false;

  for (std::size_t x = 1;; ++x) {
    const std::size_t theta =
        std::min(theta_max, theta0 << std::min<std::size_t>(x - 1, 62));
    Solution sol = selector.select(theta, x, IdParity::Even);

    OpimRound round;
    round.round_index = x;
    round.samples = theta;
    round.r1 = (theta + 1) / 2;
    round.r2 = theta / 2;
    round.cov1 = sol.coverage;
    for (vertex_t s : sol.seeds) in_seed_set[s] = 1;
    for (const auto& view : store.views(0, static_cast<sample_t>(theta), IdParity::Odd)) {
      for (vertex_t v : view.members) {
        if (in_seed_set[v]) {
          ++round.cov2;
          break;
        }
      }
    }
    for (vertex_t s : sol.seeds) in_seed_set[s] = 0;
    round.sigma_low = opim_sigma_low(round.cov2, round.r2, n, log_term);
    round.sigma_up = opim_sigma_up(round.cov1, round.r1, n, result.approx_ratio, log_term);
    round.guarantee = round.sigma_up > 0 ? round.sigma_low / round.sigma_up : 0.0;
    result.rounds.push_back(round);

    if (!have_best || round.guarantee > result.guarantee) {
      result.solution = sol;
      result.guarantee = round.guarantee;
      have_best = true;
    }
    if (round.guarantee >= result.target) {
      result.solution = std::move(sol);
      result.guarantee = round.guarantee;
      result.reached_target = true;
      break;
    }
    if (theta >= theta_max) break;
  }

  result.timings = selector.timings;
  result.timings.total = seconds_since(start);
  result.diagnostics = std::move(selector.diagnostics);
  return result;
}

}  // namespace greediris
