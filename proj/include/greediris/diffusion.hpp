#pragma once

#include <cstdint>
#include <span>

#include "greediris/graph.hpp"

namespace greediris {

struct InfluenceEstimate {
  double mean = 0;
  double std_error = 0;  // standard error of the mean; 0 for a single trial
  std::uint64_t trials = 0;
};

/// One forward cascade from `seeds`; returns the number of active vertices
/// at quiescence. IC: each newly active vertex tries every out-edge once.
/// LT: thresholds are drawn per vertex from the trial seed, and vertices
/// activate in synchronous rounds once active in-weight reaches them.
std::uint64_t simulate_once(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                            std::uint64_t trial_seed);

/// Mean and standard error over `trials` cascades, OpenMP-parallel over
/// trials. Trial t uses derive_seed(base_seed, t), so the result does not
/// depend on the thread count.
InfluenceEstimate expected_influence(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                                     std::uint64_t trials, std::uint64_t base_seed);
/// Single-threaded reference for expected_influence.
InfluenceEstimate expected_influence_serial(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                                            std::uint64_t trials, std::uint64_t base_seed);

}  // namespace greediris
