#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "greediris/diffusion.hpp"
#include "greediris/driver.hpp"

namespace greediris {

/// Everything a run report prints. The guarantee is not stored; it is
/// recomputed from `config` when the report is formatted.
struct RunReport {
  RunConfig config;
  std::uint64_t master_seed = 0;
  std::string input;
  std::string format;
  double weight_lo = 0;
  double weight_hi = 0;
  std::size_t vertices = 0;
  std::size_t edges = 0;

  std::vector<RoundState> rounds;      // imm / sequential
  std::vector<OpimRound> opim_rounds;  // opim
  double instance_guarantee = 0;  // opim only
  double target = 0;
  double approx_ratio = 0;

  std::vector<std::int64_t> seed_labels;
  std::vector<std::uint64_t> marginals;
  std::uint64_t coverage = 0;
  std::uint64_t universe = 0;
  std::size_t final_theta = 0;
  bool converged = false;
  std::uint32_t final_source = 0;
  double ell_used = 0;

  InfluenceEstimate influence;
  ReceiverDiagnostics diagnostics;
  std::uint64_t seeds_streamed = 0;
  std::uint64_t seeds_truncated = 0;
  RoundTimings timings;
};

RunReport make_report(const Graph& graph, const RunConfig& config, const RunResult& result);
RunReport make_report(const Graph& graph, const RunConfig& config, const OpimResult& result);

/// Structured text: `[section]` headers followed by `key = value` lines or a
/// whitespace-separated table whose first line names the columns. [timings]
/// is always the last section.
std::string format_report(const RunReport& report);

/// Required keys per section, in emission order ("section.key").
std::vector<std::string> report_schema();

/// Returns the schema entries missing from `text` (empty when it validates).
std::vector<std::string> validate_report(std::string_view text);

/// The report with its [timings] section removed.
std::string strip_timings(std::string_view text);

struct BenchRow {
  std::string label;  // "sequential" or "streaming"
  std::size_t m = 1;
  double alpha = 1.0;
  std::uint64_t coverage = 0;
  InfluenceEstimate influence;
  double influence_change_pct = 0;  // vs. the sequential row
  double guarantee = 0;
  RoundTimings timings;
};

std::string format_bench(const RunConfig& config, std::size_t theta, std::span<const BenchRow> rows);

}  // namespace greediris
