#include "greediris/graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "greediris/error.hpp"
#include "greediris/rng.hpp"

namespace greediris {

static_assert(std::endian::native == std::endian::little,
              "binary cache I/O assumes a little-endian host");

std::string_view to_string(Model model) noexcept {
  return model == Model::IC ? "ic" : "lt";
}

Model parse_model(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ic") return Model::IC;
  if (lower == "lt") return Model::LT;
  throw ParameterError("unknown diffusion model '" + std::string(text) + "' (expected ic or lt)");
}

namespace {

constexpr double kNoWeight = std::numeric_limits<double>::quiet_NaN();

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::int64_t parse_endpoint(std::string_view token, std::size_t line_no) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(line_no, "endpoint '" + std::string(token) + "' is not an integer");
  }
  return value;
}

double parse_weight(std::string_view token, std::size_t line_no) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError(line_no, "weight '" + std::string(token) + "' is not a number");
  }
  if (value < 0.0 || value > 1.0) {
    throw ParseError(line_no, "weight " + std::string(token) + " out of range [0,1]");
  }
  return value;
}

}  // namespace

EdgeList parse_edge_list(std::string_view text, Directedness directedness) {
  EdgeList out;
  std::unordered_map<std::int64_t, vertex_t> remap;
  auto dense = [&](std::int64_t label) {
    auto [it, inserted] = remap.try_emplace(label, static_cast<vertex_t>(out.labels.size()));
    if (inserted) out.labels.push_back(label);
    return it->second;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    auto tokens = split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw ParseError(line_no, "expected 'src dst [weight]'");
    }
    const std::int64_t src_label = parse_endpoint(tokens[0], line_no);
    const std::int64_t dst_label = parse_endpoint(tokens[1], line_no);
    std::optional<double> weight;
    if (tokens.size() == 3) weight = parse_weight(tokens[2], line_no);

    const vertex_t src = dense(src_label);
    const vertex_t dst = dense(dst_label);
    out.edges.push_back({src, dst, weight});
    if (directedness == Directedness::Undirected) out.edges.push_back({dst, src, weight});
  }
  if (out.edges.empty()) throw EmptyGraphError("edge list contains no edges");
  return out;
}

EdgeList load_edge_list(const std::filesystem::path& path, Directedness directedness) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open edge list '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str(), directedness);
}

double Graph::in_weight_sum(vertex_t v) const noexcept {
  double sum = 0.0;
  for (const Arc& a : in_arcs(v)) {
    if (!std::isnan(a.weight)) sum += a.weight;
  }
  return sum;
}

void Graph::refresh_arc_weights() {
  for (std::size_t i = 0; i < arcs_fwd_.size(); ++i) {
    arcs_fwd_[i].weight = edges_[ids_fwd_[i]].weight.value_or(kNoWeight);
  }
  for (std::size_t i = 0; i < arcs_rev_.size(); ++i) {
    arcs_rev_[i].weight = edges_[ids_rev_[i]].weight.value_or(kNoWeight);
  }
}

Graph build_graph(std::size_t n, std::span<const EdgeTriple> edges,
                  std::vector<std::int64_t> labels) {
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw ParameterError("edge endpoint outside [0, n)");
  }
  if (!labels.empty() && labels.size() != n) {
    throw ParameterError("label count does not match vertex count");
  }

  Graph g;
  g.edges_.assign(edges.begin(), edges.end());
  if (labels.empty()) {
    labels.resize(n);
    for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<std::int64_t>(v);
  }
  g.labels_ = std::move(labels);

  const std::size_t m = edges.size();
  g.offsets_fwd_.assign(n + 1, 0);
  g.offsets_rev_.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++g.offsets_fwd_[e.src + 1];
    ++g.offsets_rev_[e.dst + 1];
  }
  for (std::size_t v = 0; v < n; ++v) {
    g.offsets_fwd_[v + 1] += g.offsets_fwd_[v];
    g.offsets_rev_[v + 1] += g.offsets_rev_[v];
  }

  g.arcs_fwd_.resize(m);
  g.ids_fwd_.resize(m);
  g.arcs_rev_.resize(m);
  g.ids_rev_.resize(m);
  std::vector<std::uint64_t> fill_fwd(g.offsets_fwd_.begin(), g.offsets_fwd_.end() - 1);
  std::vector<std::uint64_t> fill_rev(g.offsets_rev_.begin(), g.offsets_rev_.end() - 1);
  for (edge_index_t i = 0; i < m; ++i) {
    const auto& e = edges[i];
    const double w = e.weight.value_or(kNoWeight);
    const auto f = fill_fwd[e.src]++;
    g.arcs_fwd_[f] = {e.dst, w};
    g.ids_fwd_[f] = i;
    const auto r = fill_rev[e.dst]++;
    g.arcs_rev_[r] = {e.src, w};
    g.ids_rev_[r] = i;
  }
  return g;
}

Graph build_graph(const EdgeList& list) {
  return build_graph(list.vertex_count(), list.edges, list.labels);
}

Graph prepare_weights(const Graph& graph, Model model, double lo, double hi, std::uint64_t seed) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
    throw ParameterError("weight interval requires 0 <= lo <= hi <= 1");
  }
  Graph g = graph;
  for (edge_index_t i = 0; i < g.edges_.size(); ++i) {
    auto& w = g.edges_[i].weight;
    if (w) continue;
    Rng rng(derive_seed(seed, i));
    w = lo + (hi - lo) * rng.uniform01();
  }

  if (model == Model::LT) {
    std::vector<double> sums(g.vertex_count(), 0.0);
    for (const auto& e : g.edges_) sums[e.dst] += *e.weight;
    for (auto& e : g.edges_) {
      const double s = sums[e.dst];
      if (s > 1.0) e.weight = *e.weight / s;
    }
  }
  g.refresh_arc_weights();
  g.prepared_ = model;
  return g;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void write_array(std::ostream& out, const std::vector<T>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error("binary graph cache truncated");
  }
  return value;
}

template <typename T>
std::vector<T> read_array(std::istream& in, std::size_t count) {
  std::vector<T> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(T)))) {
    throw Error("binary graph cache truncated");
  }
  return values;
}

constexpr char kMagic[5] = {'G', 'I', 'R', 'I', '1'};

}  // namespace

void save_binary(const Graph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write binary graph '" + path.string() + "'");
  const std::uint64_t n = graph.vertex_count();
  const std::uint64_t m = graph.edge_count();
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, n);
  write_pod(out, m);
  write_pod(out, static_cast<std::uint8_t>(graph.prepared_ ? static_cast<std::uint8_t>(*graph.prepared_) : 0));
  write_array(out, graph.offsets_fwd_);
  std::vector<std::uint32_t> heads(m);
  std::vector<double> weights(m);
  for (std::size_t i = 0; i < m; ++i) {
    heads[i] = graph.arcs_fwd_[i].vertex;
    weights[i] = graph.arcs_fwd_[i].weight;
  }
  write_array(out, heads);
  write_array(out, weights);
  write_array(out, graph.ids_fwd_);
  write_array(out, graph.labels_);
  if (!out) throw Error("failed writing binary graph '" + path.string() + "'");
}

Graph load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open binary graph '" + path.string() + "'");
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error("'" + path.string() + "' is not a GIRI1 graph cache");
  }
  const auto n = read_pod<std::uint64_t>(in);
  const auto m = read_pod<std::uint64_t>(in);
  const auto prepared = read_pod<std::uint8_t>(in);
  if (prepared > 2) throw Error("binary graph cache has invalid model tag");
  const auto offsets = read_array<std::uint64_t>(in, n + 1);
  const auto heads = read_array<std::uint32_t>(in, m);
  const auto weights = read_array<double>(in, m);
  const auto ids = read_array<edge_index_t>(in, m);
  auto labels = read_array<std::int64_t>(in, n);
  if (offsets.front() != 0 || offsets.back() != m) throw Error("binary graph cache has corrupt offsets");

  std::vector<EdgeTriple> edges(m);
  std::vector<bool> seen(m, false);
  for (std::uint64_t u = 0; u < n; ++u) {
    for (auto slot = offsets[u]; slot < offsets[u + 1]; ++slot) {
      const auto id = ids[slot];
      if (id >= m || seen[id] || heads[slot] >= n) throw Error("binary graph cache has corrupt edges");
      seen[id] = true;
      std::optional<double> w;
      if (!std::isnan(weights[slot])) w = weights[slot];
      edges[id] = {static_cast<vertex_t>(u), heads[slot], w};
    }
  }
  Graph g = build_graph(n, edges, std::move(labels));
  if (prepared != 0) g.prepared_ = static_cast<Model>(prepared);
  return g;
}

}  // namespace greediris
