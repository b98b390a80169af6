#include "greediris/diffusion.hpp"

#include <cmath>
#include <vector>

#include <omp.h>

#include "greediris/error.hpp"
#include "greediris/rng.hpp"

namespace greediris {

namespace {

// Per-lane scratch reused across trials.
class CascadeWorkspace {
 public:
  explicit CascadeWorkspace(std::size_t n) : stamp_(n, 0), load_(n, 0.0), load_stamp_(n, 0) {}

  std::uint64_t run(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                    std::uint64_t trial_seed) {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      std::fill(load_stamp_.begin(), load_stamp_.end(), 0);
      epoch_ = 1;
    }
    frontier_.clear();
    for (vertex_t s : seeds) {
      if (stamp_[s] != epoch_) {
        stamp_[s] = epoch_;
        frontier_.push_back(s);
      }
    }
    std::uint64_t active = frontier_.size();
    Rng rng(trial_seed);

    while (!frontier_.empty()) {
      next_.clear();
      for (vertex_t u : frontier_) {
        for (const Arc& a : graph.out_arcs(u)) {
          const vertex_t v = a.vertex;
          if (stamp_[v] == epoch_) continue;
          if (model == Model::IC) {
            if (rng.bernoulli(a.weight)) {
              stamp_[v] = epoch_;
              next_.push_back(v);
            }
            continue;
          }
          if (load_stamp_[v] != epoch_) {
            load_stamp_[v] = epoch_;
            load_[v] = 0.0;
          }
          load_[v] += a.weight;
          // Threshold of v is a pure function of (trial, v).
          const double tau = Rng(derive_seed(trial_seed, v)).uniform01();
          if (load_[v] >= tau) {
            stamp_[v] = epoch_;
            next_.push_back(v);
          }
        }
      }
      active += next_.size();
      frontier_.swap(next_);
    }
    return active;
  }

 private:
  std::vector<std::uint32_t> stamp_;
  std::vector<double> load_;
  std::vector<std::uint32_t> load_stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<vertex_t> frontier_;
  std::vector<vertex_t> next_;
};

void check_seeds(const Graph& graph, std::span<const vertex_t> seeds, Model model) {
  for (vertex_t s : seeds) {
    if (s >= graph.vertex_count()) throw ParameterError("seed vertex " + std::to_string(s) + " out of range");
  }
  if (!graph.prepared_for(model)) {
    throw StateError("graph weights are not prepared for the " + std::string(to_string(model)) + " model");
  }
}

InfluenceEstimate summarize(const std::vector<std::uint64_t>& counts) {
  InfluenceEstimate est;
  est.trials = counts.size();
  if (counts.empty()) return est;
  double sum = 0;
  for (auto c : counts) sum += static_cast<double>(c);
  est.mean = sum / static_cast<double>(counts.size());
  if (counts.size() > 1) {
    double ss = 0;
    for (auto c : counts) {
      const double d = static_cast<double>(c) - est.mean;
      ss += d * d;
    }
    const double var = ss / static_cast<double>(counts.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(counts.size()));
  }
  return est;
}

}  // namespace

std::uint64_t simulate_once(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                            std::uint64_t trial_seed) {
  check_seeds(graph, seeds, model);
  CascadeWorkspace ws(graph.vertex_count());
  return ws.run(graph, seeds, model, trial_seed);
}

InfluenceEstimate expected_influence_serial(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                                            std::uint64_t trials, std::uint64_t base_seed) {
  if (trials == 0) throw ParameterError("trials must be at least 1");
  check_seeds(graph, seeds, model);
  CascadeWorkspace ws(graph.vertex_count());
  std::vector<std::uint64_t> counts(trials);
  for (std::uint64_t t = 0; t < trials; ++t) counts[t] = ws.run(graph, seeds, model, derive_seed(base_seed, t));
  return summarize(counts);
}

InfluenceEstimate expected_influence(const Graph& graph, std::span<const vertex_t> seeds, Model model,
                                     std::uint64_t trials, std::uint64_t base_seed) {
  if (trials == 0) throw ParameterError("trials must be at least 1");
  check_seeds(graph, seeds, model);
  std::vector<std::uint64_t> counts(trials);
#pragma omp parallel
  {
    CascadeWorkspace ws(graph.vertex_count());
#pragma omp for schedule(dynamic, 16)
    for (std::uint64_t t = 0; t < trials; ++t) {
      counts[t] = ws.run(graph, seeds, model, derive_seed(base_seed, t));
    }
  }
  return summarize(counts);
}

}  // namespace greediris
