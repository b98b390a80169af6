#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "greediris/rrr.hpp"

namespace greediris {

/// Seeds in selection order, their marginal gains, and the number of
/// distinct samples they cover out of `universe_size`.
struct Solution {
  std::vector<vertex_t> seeds;
  std::vector<std::uint64_t> marginals;
  std::uint64_t coverage = 0;
  std::uint64_t universe_size = 0;

  std::size_t size() const noexcept { return seeds.size(); }
  bool empty() const noexcept { return seeds.empty(); }
  bool operator==(const Solution&) const = default;
};

enum class GreedyMode : std::uint8_t { Lazy, Standard };

/// One greedy selection step.
struct GreedyPick {
  vertex_t vertex;
  std::uint64_t marginal;
};

/// Lazy greedy max-k-cover driven one pick at a time, so callers can act on
/// each seed as soon as it is selected. Ties go to the smaller vertex id.
class LazyGreedy {
 public:
  LazyGreedy(std::uint64_t universe_size, const CoveringSets& sets);

  /// Next seed, or nullopt once every remaining marginal gain is 0.
  std::optional<GreedyPick> next();

  std::uint64_t coverage() const noexcept { return coverage_; }

 private:
  struct Entry {
    std::uint64_t key;
    vertex_t vertex;
    std::uint32_t index;
  };
  static bool heap_less(const Entry& a, const Entry& b) noexcept {
    return a.key != b.key ? a.key < b.key : a.vertex > b.vertex;
  }
  std::uint64_t marginal(std::uint32_t index) const noexcept;

  const CoveringSets* sets_;
  std::vector<std::uint8_t> covered_;
  std::vector<Entry> heap_;
  std::uint64_t coverage_ = 0;
};

Solution lazy_greedy_max_cover(std::uint64_t universe_size, const CoveringSets& sets, std::size_t k,
                               GreedyMode mode = GreedyMode::Lazy);

/// Exhaustive optimum for tiny instances (at most 22 sets, k at most 6);
/// the lexicographically smallest optimal seed set is returned.
Solution brute_force_max_cover(std::uint64_t universe_size, const CoveringSets& sets, std::size_t k);

/// ceil(alpha * k) with alpha in (0, 1].
std::size_t truncated_count(std::size_t k, double alpha);

/// The first ceil(alpha * k) seeds of a greedy solution.
Solution truncate_stream_order(const Solution& solution, std::size_t k, double alpha);

/// Number of distinct ids in the union of the given sets' lists.
std::uint64_t union_coverage(std::uint64_t universe_size, const CoveringSets& sets,
                             std::span<const vertex_t> seeds);

/// One-pass threshold-bucket max-k-cover. Bucket b admits a set while it
/// holds fewer than k seeds and the set's marginal gain is at least
/// guess_b / (2k), with guess_b = lower_bound * (1 + delta)^b.
class StreamingSketch {
 public:
  struct Bucket {
    double guess = 0;
    std::vector<std::uint8_t> covered;
    std::uint64_t covered_count = 0;
    std::vector<vertex_t> seeds;
    std::vector<std::uint64_t> marginals;
    std::unordered_set<vertex_t> members;
    std::uint64_t applied = 0;     // messages examined by this bucket
    std::uint64_t duplicates = 0;  // re-sent seeds skipped
  };

  StreamingSketch(std::size_t k, double delta, double lower_bound, std::uint64_t universe_size,
                  std::optional<std::size_t> bucket_override = std::nullopt);

  static std::size_t bucket_count(std::size_t k, double delta);

  std::size_t k() const noexcept { return k_; }
  double delta() const noexcept { return delta_; }
  double lower_bound() const noexcept { return lower_bound_; }
  std::uint64_t universe_size() const noexcept { return universe_size_; }
  std::size_t size() const noexcept { return buckets_.size(); }
  const Bucket& bucket(std::size_t b) const noexcept { return buckets_[b]; }
  double threshold(std::size_t b) const noexcept { return buckets_[b].guess / (2.0 * static_cast<double>(k_)); }

  /// Offers (seed, covering) to every bucket.
  void insert(vertex_t seed, std::span<const sample_t> covering);
  /// Offers (seed, covering) to buckets [lo, hi) only. Distinct workers may
  /// call this concurrently on disjoint bucket ranges.
  void insert_range(std::size_t lo, std::size_t hi, vertex_t seed, std::span<const sample_t> covering);

  Solution finalize() const;

  std::uint64_t processed() const noexcept { return processed_; }
  void note_processed(std::uint64_t count = 1) noexcept { processed_ += count; }

 private:
  void offer(Bucket& bucket, vertex_t seed, std::span<const sample_t> covering);

  std::size_t k_;
  double delta_;
  double lower_bound_;
  std::uint64_t universe_size_;
  std::vector<Bucket> buckets_;
  std::uint64_t processed_ = 0;
};

/// sketch_create with the ceiling bucket-count rule.
inline StreamingSketch sketch_create(std::size_t k, double delta, double lower_bound,
                                     std::uint64_t universe_size,
                                     std::optional<std::size_t> bucket_override = std::nullopt) {
  return StreamingSketch(k, delta, lower_bound, universe_size, bucket_override);
}

}  // namespace greediris
