#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "greediris/channel.hpp"
#include "greediris/graph.hpp"
#include "greediris/max_cover.hpp"
#include "greediris/runtime.hpp"

namespace greediris {

enum class Mode : std::uint8_t { Sequential, Imm, Opim };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

/// Sub-seeds, all derived from one master seed.
struct RunSeeds {
  std::uint64_t graph_weights = 0;
  std::uint64_t sampling = 0;
  std::uint64_t partition = 0;
  std::uint64_t scheduler = 0;
  std::uint64_t influence = 0;

  static RunSeeds from_master(std::uint64_t master) noexcept;
};

struct RunConfig {
  std::size_t k = 100;
  double epsilon = 0.13;
  double ell = 1.0;  // failure probability n^-ell
  double delta = 0.077;
  double alpha = 1.0;
  std::size_t m = 2;
  Model model = Model::IC;
  Mode mode = Mode::Imm;
  RunSeeds seeds;
  std::optional<std::size_t> bucket_override;
  std::size_t opim_budget = std::size_t{1} << 20;
  std::size_t bucket_workers = 1;
  /// Serialize the receiver through the seeded scheduler.
  bool deterministic = false;
  Transport transport = Transport::Buffered;
  /// OPIM always runs its selection distributed unless this is set.
  bool opim_sequential_selection = false;

  /// Throws ParameterError / ConfigError on out-of-range values.
  void validate() const;
};

struct RoundState {
  std::size_t round_index = 0;
  std::size_t theta_hat = 0;
  std::size_t samples_retained = 0;  // samples carried over from the previous round
  std::uint64_t coverage = 0;
  double influence_estimate = 0;  // n * coverage / theta_hat
  double lower_bound = 0;
  bool passed = false;
};

/// ln C(n, k) via log-gamma.
double log_binomial(std::size_t n, std::size_t k);

/// Initial martingale sample count ceil(lambda' / (n / 2)).
std::size_t estimate_theta0(std::size_t n, std::size_t k, double epsilon, double ell);

struct GoodnessCheck {
  bool passed = false;
  double lower_bound = 0;
  double influence = 0;
};

/// Passes when n * coverage / universe_size >= (1 + sqrt(2) eps) * n / 2^round.
GoodnessCheck check_goodness(std::uint64_t coverage, std::uint64_t universe_size, std::size_t n,
                             std::size_t round_index, double epsilon);

/// ceil(lambda* / lower_bound).
std::size_t final_theta(std::size_t n, std::size_t k, double epsilon, double ell, double lower_bound);

/// Failure exponent widened to cover the union over martingale rounds.
double adjusted_ell(double ell, std::size_t n);

/// local * global / (local + global) - epsilon. May be non-positive.
double combined_guarantee(double local_ratio, double global_ratio, double epsilon);
/// 1 - e^-alpha.
double truncated_guarantee(double alpha);
/// Worst-case ratio for a configuration: combined (distributed modes) or
/// plain greedy (sequential), minus epsilon.
double configured_guarantee(const RunConfig& config);

struct RunResult {
  Solution solution;
  std::vector<RoundState> rounds;
  std::size_t final_theta = 0;
  bool converged = false;
  double ell_used = 0;
  std::uint32_t final_source = 0;
  RoundTimings timings;
  ReceiverDiagnostics diagnostics;  // from the final distributed selection
  std::uint64_t seeds_streamed = 0;
  std::uint64_t seeds_truncated = 0;
};

RunResult run_imm(const Graph& graph, const RunConfig& config);

struct OpimRound {
  std::size_t round_index = 0;
  std::size_t samples = 0;
  std::size_t r1 = 0;
  std::size_t r2 = 0;
  std::uint64_t cov1 = 0;
  std::uint64_t cov2 = 0;
  double sigma_low = 0;
  double sigma_up = 0;
  double guarantee = 0;
};

struct OpimResult {
  Solution solution;
  std::vector<OpimRound> rounds;
  double guarantee = 0;
  double target = 0;
  double approx_ratio = 0;
  bool reached_target = false;
  RoundTimings timings;
  ReceiverDiagnostics diagnostics;
};

/// Lower confidence bound on the influence of S from its coverage of R2.
double opim_sigma_low(std::uint64_t cov2, std::size_t r2, std::size_t n, double log_term);
/// Upper confidence bound on OPT from the R1 coverage of an approx_ratio solution.
double opim_sigma_up(std::uint64_t cov1, std::size_t r1, std::size_t n, double approx_ratio, double log_term);

OpimResult run_opim(const Graph& graph, const RunConfig& config);

}  // namespace greediris
