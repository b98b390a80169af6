#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "greediris/graph.hpp"

namespace greediris {

using sample_t = std::uint32_t;

/// One random reverse reachable set.
struct RRRSample {
  sample_t id = 0;
  vertex_t root = 0;
  std::vector<vertex_t> members;  // sorted, contains root

  bool operator==(const RRRSample&) const = default;
};

/// Non-owning view of a sample inside a batch.
struct SampleView {
  sample_t id;
  vertex_t root;
  std::span<const vertex_t> members;
};

/// Samples for a contiguous id range, stored flat.
class SampleBatch {
 public:
  SampleBatch() = default;
  explicit SampleBatch(sample_t id_lo) : id_lo_(id_lo) {}

  sample_t id_lo() const noexcept { return id_lo_; }
  sample_t id_hi() const noexcept { return id_lo_ + static_cast<sample_t>(roots_.size()); }
  std::size_t size() const noexcept { return roots_.size(); }
  bool empty() const noexcept { return roots_.empty(); }
  std::size_t total_members() const noexcept { return members_.size(); }

  SampleView operator[](std::size_t i) const noexcept {
    return {static_cast<sample_t>(id_lo_ + i), roots_[i],
            {members_.data() + offsets_[i], members_.data() + offsets_[i + 1]}};
  }

  void push_back(vertex_t root, std::span<const vertex_t> members);
  void append(const SampleBatch& next);  // next.id_lo() must equal id_hi()

  RRRSample to_sample(std::size_t i) const;

  bool operator==(const SampleBatch&) const = default;

 private:
  sample_t id_lo_ = 0;
  std::vector<vertex_t> roots_;
  std::vector<std::size_t> offsets_{0};
  std::vector<vertex_t> members_;
};

/// Reusable visited-marker scratch space for one sampling lane.
class SamplerWorkspace {
 public:
  explicit SamplerWorkspace(std::size_t n) : stamp_(n, 0) {}

  /// Samples into `out` (unsorted traversal order, root first).
  void sample(const Graph& graph, Model model, sample_t id, std::uint64_t global_seed,
              vertex_t& root, std::vector<vertex_t>& out);

 private:
  bool mark(vertex_t v) noexcept {
    if (stamp_[v] == epoch_) return false;
    stamp_[v] = epoch_;
    return true;
  }
  void next_epoch();

  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<vertex_t> queue_;
};

/// Draws sample `sample_id`. All randomness comes from (global_seed, sample_id).
/// Throws StateError unless the graph was prepared for `model`.
RRRSample sample_rrr(const Graph& graph, Model model, sample_t sample_id, std::uint64_t global_seed);

/// Vertices of an LT sample in walk order (root first). Each entry after the
/// first is the in-neighbor selected at the previous entry.
std::vector<vertex_t> lt_walk(const Graph& graph, sample_t sample_id, std::uint64_t global_seed);

/// Samples for ids [id_lo, id_hi), OpenMP-parallel over blocks of ids.
SampleBatch generate_batch(const Graph& graph, Model model, sample_t id_lo, sample_t id_hi,
                           std::uint64_t global_seed);
/// Single-threaded reference for generate_batch.
SampleBatch generate_batch_serial(const Graph& graph, Model model, sample_t id_lo, sample_t id_hi,
                                  std::uint64_t global_seed);

/// Writes "sample_id: root: v1,v2,..." per sample.
void dump_batch(std::ostream& out, const SampleBatch& batch);

/// Per-vertex covering sets: for each listed vertex, the sorted ids of the
/// samples containing it. Stored flat, vertices in ascending order.
class CoveringSets {
 public:
  CoveringSets() = default;

  std::size_t size() const noexcept { return vertices_.size(); }
  bool empty() const noexcept { return vertices_.empty(); }
  vertex_t vertex(std::size_t i) const noexcept { return vertices_[i]; }
  std::span<const vertex_t> vertices() const noexcept { return vertices_; }
  std::span<const sample_t> samples(std::size_t i) const noexcept {
    return {ids_.data() + offsets_[i], ids_.data() + offsets_[i + 1]};
  }
  /// Covering set of v, or nullopt when v is not listed.
  std::optional<std::span<const sample_t>> find(vertex_t v) const noexcept;
  std::size_t total_entries() const noexcept { return ids_.size(); }

  /// Appends v (greater than every listed vertex) with its sample ids.
  void push_back(vertex_t v, std::span<const sample_t> ids);

  bool operator==(const CoveringSets&) const = default;

 private:
  std::vector<vertex_t> vertices_;
  std::vector<std::size_t> offsets_{0};
  std::vector<sample_t> ids_;
};

/// Inverts a list of samples. With a filter, exactly the filter's vertices
/// are emitted (possibly with empty lists); otherwise every vertex that
/// appears in some sample. Throws IntegrityError on duplicate sample ids.
CoveringSets build_covering_sets(std::span<const SampleView> samples,
                                 std::optional<std::span<const vertex_t>> vertex_filter = std::nullopt);
CoveringSets build_covering_sets(const SampleBatch& batch,
                                 std::optional<std::span<const vertex_t>> vertex_filter = std::nullopt);
CoveringSets build_covering_sets(std::span<const RRRSample> samples,
                                 std::optional<std::span<const vertex_t>> vertex_filter = std::nullopt);

enum class IdParity : std::uint8_t { All, Even, Odd };

inline bool parity_admits(IdParity parity, sample_t id) noexcept {
  return parity == IdParity::All || (parity == IdParity::Even) == (id % 2 == 0);
}

/// Sample ids in [0, size()) retained across rounds. Growing the store only
/// generates the missing ids, so retained samples keep their ids.
class SampleStore {
 public:
  SampleStore(const Graph& graph, Model model, std::uint64_t global_seed)
      : graph_(&graph), model_(model), seed_(global_seed) {}

  std::size_t size() const noexcept { return batch_.size(); }
  const SampleBatch& batch() const noexcept { return batch_; }
  const Graph& graph() const noexcept { return *graph_; }
  Model model() const noexcept { return model_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Generates ids [size(), target). The missing range is cut at the
  /// boundaries of the m contiguous rank slices of [0, target) and each piece
  /// is generated separately, mirroring per-rank sampling.
  void grow_to(std::size_t target, std::size_t ranks = 1);

  /// Views of the samples with ids in [lo, hi) admitted by `parity`.
  std::vector<SampleView> views(sample_t lo, sample_t hi, IdParity parity = IdParity::All) const;

 private:
  const Graph* graph_;
  Model model_;
  std::uint64_t seed_;
  SampleBatch batch_;
};

/// First sample id of rank p when [0, theta) is split into m contiguous slices.
inline sample_t slice_begin(std::size_t theta, std::size_t m, std::size_t p) noexcept {
  return static_cast<sample_t>(static_cast<unsigned __int128>(theta) * p / m);
}

}  // namespace greediris
