#include "greediris/rrr.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <omp.h>

#include "greediris/error.hpp"
#include "greediris/rng.hpp"

namespace greediris {

void SampleBatch::push_back(vertex_t root, std::span<const vertex_t> members) {
  roots_.push_back(root);
  members_.insert(members_.end(), members.begin(), members.end());
  offsets_.push_back(members_.size());
}

void SampleBatch::append(const SampleBatch& next) {
  if (next.id_lo_ != id_hi()) throw IntegrityError("appended batch does not continue the id range");
  const std::size_t base = members_.size();
  roots_.insert(roots_.end(), next.roots_.begin(), next.roots_.end());
  members_.insert(members_.end(), next.members_.begin(), next.members_.end());
  offsets_.reserve(offsets_.size() + next.roots_.size());
  for (std::size_t i = 1; i < next.offsets_.size(); ++i) offsets_.push_back(base + next.offsets_[i]);
}

RRRSample SampleBatch::to_sample(std::size_t i) const {
  const SampleView v = (*this)[i];
  return {v.id, v.root, {v.members.begin(), v.members.end()}};
}

void SamplerWorkspace::next_epoch() {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
}

void SamplerWorkspace::sample(const Graph& graph, Model model, sample_t id,
                              std::uint64_t global_seed, vertex_t& root,
                              std::vector<vertex_t>& out) {
  Rng rng(derive_seed(global_seed, id));
  next_epoch();
  out.clear();
  root = static_cast<vertex_t>(rng.uniform_index(graph.vertex_count()));
  mark(root);
  out.push_back(root);

  if (model == Model::IC) {
    // Probabilistic BFS over in-edges; `out` doubles as the queue.
    for (std::size_t head = 0; head < out.size(); ++head) {
      for (const Arc& a : graph.in_arcs(out[head])) {
        if (stamp_[a.vertex] == epoch_) continue;
        if (rng.bernoulli(a.weight)) {
          mark(a.vertex);
          out.push_back(a.vertex);
        }
      }
    }
    return;
  }

  // LT live-edge walk: each reached vertex keeps at most one in-edge.
  vertex_t v = root;
  for (;;) {
    const double r = rng.uniform01();
    double acc = 0.0;
    std::optional<vertex_t> chosen;
    for (const Arc& a : graph.in_arcs(v)) {
      acc += a.weight;
      if (r < acc) {
        chosen = a.vertex;
        break;
      }
    }
    if (!chosen || !mark(*chosen)) return;
    out.push_back(*chosen);
    v = *chosen;
  }
}

namespace {

void require_prepared(const Graph& graph, Model model) {
  if (!graph.prepared_for(model)) {
    throw StateError("graph weights are not prepared for the " + std::string(to_string(model)) +
                     " model");
  }
  if (graph.vertex_count() == 0) throw StateError("cannot sample from an empty graph");
}

constexpr sample_t kBlock = 1024;

}  // namespace

RRRSample sample_rrr(const Graph& graph, Model model, sample_t sample_id, std::uint64_t global_seed) {
  require_prepared(graph, model);
  SamplerWorkspace ws(graph.vertex_count());
  RRRSample s;
  s.id = sample_id;
  ws.sample(graph, model, sample_id, global_seed, s.root, s.members);
  std::sort(s.members.begin(), s.members.end());
  return s;
}

std::vector<vertex_t> lt_walk(const Graph& graph, sample_t sample_id, std::uint64_t global_seed) {
  require_prepared(graph, Model::LT);
  SamplerWorkspace ws(graph.vertex_count());
  vertex_t root = 0;
  std::vector<vertex_t> order;
  ws.sample(graph, Model::LT, sample_id, global_seed, root, order);
  return order;
}

SampleBatch generate_batch_serial(const Graph& graph, Model model, sample_t id_lo, sample_t id_hi,
                                  std::uint64_t global_seed) {
  if (id_lo > id_hi) throw ParameterError("generate_batch requires id_lo <= id_hi");
  SampleBatch batch(id_lo);
  if (id_lo == id_hi) return batch;
  require_prepared(graph, model);
  SamplerWorkspace ws(graph.vertex_count());
  std::vector<vertex_t> members;
  vertex_t root = 0;
  for (sample_t id = id_lo; id < id_hi; ++id) {
    ws.sample(graph, model, id, global_seed, root, members);
    std::sort(members.begin(), members.end());
    batch.push_back(root, members);
  }
  return batch;
}

SampleBatch generate_batch(const Graph& graph, Model model, sample_t id_lo, sample_t id_hi,
                           std::uint64_t global_seed) {
  if (id_lo > id_hi) throw ParameterError("generate_batch requires id_lo <= id_hi");
  if (id_hi - id_lo <= kBlock) return generate_batch_serial(graph, model, id_lo, id_hi, global_seed);
  require_prepared(graph, model);

  const std::size_t blocks = (static_cast<std::size_t>(id_hi - id_lo) + kBlock - 1) / kBlock;
  std::vector<SampleBatch> parts(blocks);
#pragma omp parallel
  {
    SamplerWorkspace ws(graph.vertex_count());
    std::vector<vertex_t> members;
    vertex_t root = 0;
#pragma omp for schedule(dynamic)
    for (std::size_t b = 0; b < blocks; ++b) {
      const sample_t lo = id_lo + static_cast<sample_t>(b * kBlock);
      const sample_t hi = std::min<sample_t>(id_hi, lo + kBlock);
      SampleBatch part(lo);
      for (sample_t id = lo; id < hi; ++id) {
        ws.sample(graph, model, id, global_seed, root, members);
        std::sort(members.begin(), members.end());
        part.push_back(root, members);
      }
      parts[b] = std::move(part);
    }
  }

  SampleBatch batch(id_lo);
  for (const auto& part : parts) batch.append(part);
  return batch;
}

void dump_batch(std::ostream& out, const SampleBatch& batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SampleView s = batch[i];
    out << s.id << ": " << s.root << ": ";
    for (std::size_t j = 0; j < s.members.size(); ++j) {
      if (j) out << ',';
      out << s.members[j];
    }
    out << '\n';
  }
}

std::optional<std::span<const sample_t>> CoveringSets::find(vertex_t v) const noexcept {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
  if (it == vertices_.end() || *it != v) return std::nullopt;
  return samples(static_cast<std::size_t>(it - vertices_.begin()));
}

void CoveringSets::push_back(vertex_t v, std::span<const sample_t> ids) {
  vertices_.push_back(v);
  ids_.insert(ids_.end(), ids.begin(), ids.end());
  offsets_.push_back(ids_.size());
}

CoveringSets build_covering_sets(std::span<const SampleView> samples,
                                 std::optional<std::span<const vertex_t>> vertex_filter) {
  // Bounds of the vertex range touched, for a dense counting pass.
  vertex_t max_vertex = 0;
  bool any = false;
  for (const auto& s : samples) {
    for (vertex_t v : s.members) {
      max_vertex = std::max(max_vertex, v);
      any = true;
    }
  }
  std::vector<vertex_t> filter;
  if (vertex_filter) {
    filter.assign(vertex_filter->begin(), vertex_filter->end());
    std::sort(filter.begin(), filter.end());
    filter.erase(std::unique(filter.begin(), filter.end()), filter.end());
    if (!filter.empty()) {
      max_vertex = std::max(max_vertex, filter.back());
      any = true;
    }
  }
  CoveringSets out;
  if (!any) return out;

  // Sample ids must be unique; order them so every list comes out sorted.
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (samples[order[i]].id == samples[order[i - 1]].id) {
      throw IntegrityError("duplicate sample id " + std::to_string(samples[order[i]].id));
    }
  }

  const std::size_t span_n = static_cast<std::size_t>(max_vertex) + 1;
  std::vector<std::uint8_t> keep;
  if (vertex_filter) {
    keep.assign(span_n, 0);
    for (vertex_t v : filter) keep[v] = 1;
  }
  std::vector<std::size_t> count(span_n + 1, 0);
  for (const auto& s : samples) {
    for (vertex_t v : s.members) {
      if (keep.empty() || keep[v]) ++count[v + 1];
    }
  }
  std::vector<std::size_t> start(count.size(), 0);
  for (std::size_t v = 0; v < span_n; ++v) start[v + 1] = start[v] + count[v + 1];
  std::vector<sample_t> ids(start.back());
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (std::size_t idx : order) {
    const auto& s = samples[idx];
    for (vertex_t v : s.members) {
      if (keep.empty() || keep[v]) ids[fill[v]++] = s.id;
    }
  }

  auto emit = [&](vertex_t v) {
    out.push_back(v, std::span<const sample_t>(ids.data() + start[v], ids.data() + start[v + 1]));
  };
  if (vertex_filter) {
    for (vertex_t v : filter) emit(v);
  } else {
    for (std::size_t v = 0; v < span_n; ++v) {
      if (count[v + 1] > 0) emit(static_cast<vertex_t>(v));
    }
  }
  return out;
}

CoveringSets build_covering_sets(const SampleBatch& batch,
                                 std::optional<std::span<const vertex_t>> vertex_filter) {
  std::vector<SampleView> views;
  views.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) views.push_back(batch[i]);
  return build_covering_sets(std::span<const SampleView>(views), vertex_filter);
}

CoveringSets build_covering_sets(std::span<const RRRSample> samples,
                                 std::optional<std::span<const vertex_t>> vertex_filter) {
  std::vector<SampleView> views;
  views.reserve(samples.size());
  for (const auto& s : samples) views.push_back({s.id, s.root, s.members});
  return build_covering_sets(std::span<const SampleView>(views), vertex_filter);
}

void SampleStore::grow_to(std::size_t target, std::size_t ranks) {
  if (target > std::numeric_limits<sample_t>::max()) {
    throw ParameterError("sample target exceeds the 32-bit sample id space");
  }
  if (ranks == 0) ranks = 1;
  while (batch_.size() < target) {
    const auto lo = static_cast<sample_t>(batch_.size());
    sample_t hi = static_cast<sample_t>(target);
    for (std::size_t p = 1; p < ranks; ++p) {
      const sample_t cut = slice_begin(target, ranks, p);
      if (cut > lo) {
        hi = std::min(hi, cut);
        break;
      }
    }
    batch_.append(generate_batch(*graph_, model_, lo, hi, seed_));
  }
}

std::vector<SampleView> SampleStore::views(sample_t lo, sample_t hi, IdParity parity) const {
  std::vector<SampleView> out;
  hi = std::min<sample_t>(hi, static_cast<sample_t>(batch_.size()));
  if (lo >= hi) return out;
  out.reserve(hi - lo);
  for (sample_t id = lo; id < hi; ++id) {
    if (parity_admits(parity, id)) out.push_back(batch_[id]);
  }
  return out;
}

}  // namespace greediris
