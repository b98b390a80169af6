#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace greediris {

using vertex_t = std::uint32_t;
using edge_index_t = std::uint64_t;

enum class Model : std::uint8_t { IC = 1, LT = 2 };

std::string_view to_string(Model model) noexcept;
/// Parses "ic" / "lt" (case-insensitive). Throws ParameterError.
Model parse_model(std::string_view text);

enum class Directedness : std::uint8_t { Directed, Undirected };

struct EdgeTriple {
  vertex_t src = 0;
  vertex_t dst = 0;
  std::optional<double> weight;

  bool operator==(const EdgeTriple&) const = default;
};

/// Parsed edge list with ids remapped densely in order of first appearance.
/// labels[v] is the original id of dense vertex v.
struct EdgeList {
  std::vector<EdgeTriple> edges;
  std::vector<std::int64_t> labels;

  std::size_t vertex_count() const noexcept { return labels.size(); }
};

EdgeList parse_edge_list(std::string_view text, Directedness directedness);
EdgeList load_edge_list(const std::filesystem::path& path, Directedness directedness);

/// Neighbor entry in either adjacency direction. For forward lists `vertex`
/// is the head of the edge, for reverse lists it is the tail.
struct Arc {
  vertex_t vertex;
  double weight;
};

/// Immutable weighted directed graph in CSR form with both adjacency
/// directions. Edge weights start unassigned (NaN) unless the input carried
/// them; prepare_weights() fills them in for a diffusion model.
class Graph {
 public:
  Graph() = default;

  std::size_t vertex_count() const noexcept { return offsets_fwd_.empty() ? 0 : offsets_fwd_.size() - 1; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const Arc> out_arcs(vertex_t u) const noexcept {
    return {arcs_fwd_.data() + offsets_fwd_[u], arcs_fwd_.data() + offsets_fwd_[u + 1]};
  }
  std::span<const Arc> in_arcs(vertex_t v) const noexcept {
    return {arcs_rev_.data() + offsets_rev_[v], arcs_rev_.data() + offsets_rev_[v + 1]};
  }
  /// Canonical edge index of each forward / reverse slot.
  std::span<const edge_index_t> out_edge_ids(vertex_t u) const noexcept {
    return {ids_fwd_.data() + offsets_fwd_[u], ids_fwd_.data() + offsets_fwd_[u + 1]};
  }
  std::span<const edge_index_t> in_edge_ids(vertex_t v) const noexcept {
    return {ids_rev_.data() + offsets_rev_[v], ids_rev_.data() + offsets_rev_[v + 1]};
  }

  /// Edges in canonical (input) order.
  std::span<const EdgeTriple> edges() const noexcept { return edges_; }

  std::optional<Model> prepared_model() const noexcept { return prepared_; }
  bool prepared_for(Model model) const noexcept { return prepared_ == model; }

  /// Original labels for report emission; identity when built without them.
  std::span<const std::int64_t> labels() const noexcept { return labels_; }
  std::int64_t label(vertex_t v) const noexcept { return labels_[v]; }

  /// Sum of incoming weights of v (unassigned weights count as 0).
  double in_weight_sum(vertex_t v) const noexcept;

  friend Graph build_graph(std::size_t n, std::span<const EdgeTriple> edges,
                           std::vector<std::int64_t> labels);
  friend Graph prepare_weights(const Graph& graph, Model model, double lo, double hi,
                               std::uint64_t seed);
  friend void save_binary(const Graph& graph, const std::filesystem::path& path);
  friend Graph load_binary(const std::filesystem::path& path);

 private:
  void refresh_arc_weights();

  std::vector<EdgeTriple> edges_;
  std::vector<std::uint64_t> offsets_fwd_;
  std::vector<Arc> arcs_fwd_;
  std::vector<edge_index_t> ids_fwd_;
  std::vector<std::uint64_t> offsets_rev_;
  std::vector<Arc> arcs_rev_;
  std::vector<edge_index_t> ids_rev_;
  std::vector<std::int64_t> labels_;
  std::optional<Model> prepared_;
};

/// Builds CSR adjacency in both directions. Parallel edges are kept.
/// `labels` may be empty (identity labelling) or hold n entries.
Graph build_graph(std::size_t n, std::span<const EdgeTriple> edges,
                  std::vector<std::int64_t> labels = {});
Graph build_graph(const EdgeList& list);

/// Assigns every missing weight uniformly from [lo, hi] with randomness that
/// depends only on (seed, canonical edge index). For LT, incoming weights of
/// each vertex are then divided by max(1, incoming sum).
Graph prepare_weights(const Graph& graph, Model model, double lo, double hi, std::uint64_t seed);

// Binary cache: "GIRI1", u64 n, u64 edge_count, u8 prepared model, then the
// forward CSR (offsets, heads, weights, canonical ids) and labels.
void save_binary(const Graph& graph, const std::filesystem::path& path);
Graph load_binary(const std::filesystem::path& path);

}  // namespace greediris
