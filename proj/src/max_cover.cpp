#include "greediris/max_cover.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "greediris/error.hpp"

namespace greediris {

LazyGreedy::LazyGreedy(std::uint64_t universe_size, const CoveringSets& sets)
    : sets_(&sets), covered_(universe_size, 0) {
  heap_.reserve(sets.size());
  for (std::uint32_t i = 0; i < sets.size(); ++i) {
    heap_.push_back({sets.samples(i).size(), sets.vertex(i), i});
  }
  std::make_heap(heap_.begin(), heap_.end(), heap_less);
}

std::uint64_t LazyGreedy::marginal(std::uint32_t index) const noexcept {
  std::uint64_t gain = 0;
  for (sample_t id : sets_->samples(index)) gain += covered_[id] == 0;
  return gain;
}

std::optional<GreedyPick> LazyGreedy::next() {
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), heap_less);
    Entry e = heap_.back();
    heap_.pop_back();
    if (e.key == 0) {
      heap_.clear();
      return std::nullopt;
    }
    e.key = marginal(e.index);
    if (!heap_.empty() && heap_less(e, heap_.front())) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), heap_less);
      continue;
    }
    if (e.key == 0) {
      heap_.clear();
      return std::nullopt;
    }
    for (sample_t id : sets_->samples(e.index)) covered_[id] = 1;
    coverage_ += e.key;
    return GreedyPick{e.vertex, e.key};
  }
  return std::nullopt;
}

namespace {

void check_ids(std::uint64_t universe_size, const CoveringSets& sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto s = sets.samples(i);
    if (!s.empty() && s.back() >= universe_size) {
      throw ParameterError("covering set of vertex " + std::to_string(sets.vertex(i)) +
                           " references a sample outside the universe");
    }
  }
}

Solution standard_greedy(std::uint64_t universe_size, const CoveringSets& sets, std::size_t k) {
  Solution sol;
  sol.universe_size = universe_size;
  std::vector<std::uint8_t> covered(universe_size, 0);
  std::vector<std::uint8_t> taken(sets.size(), 0);
  while (sol.seeds.size() < k) {
    std::uint64_t best_gain = 0;
    std::size_t best = sets.size();
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (taken[i]) continue;
      std::uint64_t gain = 0;
      for (sample_t id : sets.samples(i)) gain += covered[id] == 0;
      // Vertices are listed in ascending order, so strict > keeps the smallest id.
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == sets.size()) break;
    taken[best] = 1;
    for (sample_t id : sets.samples(best)) covered[id] = 1;
    sol.seeds.push_back(sets.vertex(best));
    sol.marginals.push_back(best_gain);
    sol.coverage += best_gain;
  }
  return sol;
}

}  // namespace

Solution lazy_greedy_max_cover(std::uint64_t universe_size, const CoveringSets& sets, std::size_t k,
                               GreedyMode mode) {
  check_ids(universe_size, sets);
  if (mode == GreedyMode::Standard) return standard_greedy(universe_size, sets, k);

  Solution sol;
  sol.universe_size = universe_size;
  if (k == 0 || sets.empty()) return sol;
  LazyGreedy greedy(universe_size, sets);
  while (sol.seeds.size() < k) {
    auto pick = greedy.next();
    if (!pick) break;
    sol.seeds.push_back(pick->vertex);
    sol.marginals.push_back(pick->marginal);
  }
  sol.coverage = greedy.coverage();
  return sol;
}

Solution brute_force_max_cover(std::uint64_t universe_size, const CoveringSets& sets, std::size_t k) {
  constexpr std::size_t kMaxSets = 22;
  constexpr std::size_t kMaxK = 6;
  if (sets.size() > kMaxSets || k > kMaxK) {
    throw ParameterError("brute force limited to 22 sets and k <= 6");
  }
  check_ids(universe_size, sets);

  const std::size_t words = static_cast<std::size_t>((universe_size + 63) / 64);
  std::vector<std::vector<std::uint64_t>> bits(sets.size(), std::vector<std::uint64_t>(words, 0));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (sample_t id : sets.samples(i)) bits[i][id / 64] |= 1ULL << (id % 64);
  }

  const std::size_t r = std::min(k, sets.size());
  std::vector<std::size_t> pick(r);
  for (std::size_t i = 0; i < r; ++i) pick[i] = i;
  std::vector<std::size_t> best = pick;
  std::uint64_t best_cov = 0;
  bool first = true;
  std::vector<std::uint64_t> acc(words);
  // Combinations in lexicographic order; strict improvement keeps the
  // lexicographically smallest optimum.
  for (;;) {
    std::fill(acc.begin(), acc.end(), 0);
    for (std::size_t i : pick) {
      for (std::size_t w = 0; w < words; ++w) acc[w] |= bits[i][w];
    }
    std::uint64_t cov = 0;
    for (auto w : acc) cov += static_cast<std::uint64_t>(std::popcount(w));
    if (first || cov > best_cov) {
      best_cov = cov;
      best = pick;
      first = false;
    }
    std::size_t i = r;
    while (i > 0 && pick[i - 1] == sets.size() - r + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < r; ++j) pick[j] = pick[j - 1] + 1;
  }

  Solution sol;
  sol.universe_size = universe_size;
  std::vector<std::uint8_t> covered(universe_size, 0);
  for (std::size_t i : best) {
    std::uint64_t gain = 0;
    for (sample_t id : sets.samples(i)) {
      if (!covered[id]) {
        covered[id] = 1;
        ++gain;
      }
    }
    sol.seeds.push_back(sets.vertex(i));
    sol.marginals.push_back(gain);
    sol.coverage += gain;
  }
  return sol;
}

std::size_t truncated_count(std::size_t k, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  // Small slack so products such as 0.1 * 30 do not round up past the integer.
  const double raw = alpha * static_cast<double>(k);
  return std::min(k, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

Solution truncate_stream_order(const Solution& solution, std::size_t k, double alpha) {
  const std::size_t keep = std::min(truncated_count(k, alpha), solution.seeds.size());
  Solution out;
  out.universe_size = solution.universe_size;
  out.seeds.assign(solution.seeds.begin(), solution.seeds.begin() + static_cast<std::ptrdiff_t>(keep));
  out.marginals.assign(solution.marginals.begin(),
                       solution.marginals.begin() + static_cast<std::ptrdiff_t>(keep));
  for (auto g : out.marginals) out.coverage += g;
  return out;
}

std::uint64_t union_coverage(std::uint64_t universe_size, const CoveringSets& sets,
                             std::span<const vertex_t> seeds) {
  std::vector<std::uint8_t> covered(universe_size, 0);
  std::uint64_t cov = 0;
  for (vertex_t v : seeds) {
    auto list = sets.find(v);
    if (!list) continue;
    for (sample_t id : *list) {
      if (id < universe_size && !covered[id]) {
        covered[id] = 1;
        ++cov;
      }
    }
  }
  return cov;
}

std::size_t StreamingSketch::bucket_count(std::size_t k, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw ParameterError("delta must lie in (0, 1/2)");
  if (k <= 1) return 1;
  const double raw = std::log(static_cast<double>(k)) / std::log1p(delta);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

StreamingSketch::StreamingSketch(std::size_t k, double delta, double lower_bound,
                                 std::uint64_t universe_size,
                                 std::optional<std::size_t> bucket_override)
    : k_(k), delta_(delta), lower_bound_(lower_bound), universe_size_(universe_size) {
  const std::size_t computed = bucket_count(k, delta);
  if (!(lower_bound >= 1.0)) throw ParameterError("sketch lower bound must be at least 1");
  if (k == 0) throw ParameterError("sketch budget k must be positive");
  if (bucket_override && *bucket_override == 0) throw ParameterError("bucket override must be positive");
  const std::size_t count = bucket_override.value_or(computed);
  buckets_.resize(count);
  double guess = lower_bound;
  for (auto& b : buckets_) {
    b.guess = guess;
    b.covered.assign(universe_size, 0);
    guess *= 1.0 + delta;
  }
}

void StreamingSketch::offer(Bucket& bucket, vertex_t seed, std::span<const sample_t> covering) {
  ++bucket.applied;
  if (bucket.seeds.size() >= k_) return;
  if (bucket.members.contains(seed)) {
    ++bucket.duplicates;
    return;
  }
  std::uint64_t gain = 0;
  for (sample_t id : covering) gain += bucket.covered[id] == 0;
  if (gain == 0) return;
  if (static_cast<double>(gain) < bucket.guess / (2.0 * static_cast<double>(k_))) return;
  for (sample_t id : covering) bucket.covered[id] = 1;
  bucket.covered_count += gain;
  bucket.seeds.push_back(seed);
  bucket.marginals.push_back(gain);
  bucket.members.insert(seed);
}

void StreamingSketch::insert_range(std::size_t lo, std::size_t hi, vertex_t seed,
                                   std::span<const sample_t> covering) {
  if (!covering.empty() && covering.back() >= universe_size_) {
    throw ParameterError("covering set references a sample outside the universe");
  }
  hi = std::min(hi, buckets_.size());
  for (std::size_t b = lo; b < hi; ++b) offer(buckets_[b], seed, covering);
}

void StreamingSketch::insert(vertex_t seed, std::span<const sample_t> covering) {
  insert_range(0, buckets_.size(), seed, covering);
  ++processed_;
}

Solution StreamingSketch::finalize() const {
  Solution sol;
  sol.universe_size = universe_size_;
  std::size_t best = buckets_.size();
  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    if (best == buckets_.size() || buckets_[b].covered_count > buckets_[best].covered_count) best = b;
  }
  if (best == buckets_.size() || buckets_[best].seeds.empty()) return sol;
  const auto& bk = buckets_[best];
  sol.seeds = bk.seeds;
  sol.marginals = bk.marginals;
  sol.coverage = bk.covered_count;
  return sol;
}

}  // namespace greediris
