#include "greediris/report.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace greediris {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(xs[i]);
  }
  return out;
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

struct Writer {
  std::ostringstream out;

  void section(std::string_view name) { out << '[' << name << "]\n"; }
  template <typename V>
  void kv(std::string_view key, const V& value) {
    out << key << " = " << value << '\n';
  }
};

RunReport base_report(const Graph& graph, const RunConfig& config, const Solution& solution) {
  RunReport r;
  r.config = config;
  r.vertices = graph.vertex_count();
  r.edges = graph.edge_count();
  for (vertex_t s : solution.seeds) r.seed_labels.push_back(graph.label(s));
  r.marginals = solution.marginals;
  r.coverage = solution.coverage;
  r.universe = solution.universe_size;
  return r;
}

}  // namespace

RunReport make_report(const Graph& graph, const RunConfig& config, const RunResult& result) {
  RunReport r = base_report(graph, config, result.solution);
  r.rounds = result.rounds;
  r.final_theta = result.final_theta;
  r.converged = result.converged;
  r.final_source = result.final_source;
  r.ell_used = result.ell_used;
  r.diagnostics = result.diagnostics;
  r.seeds_streamed = result.seeds_streamed;
  r.seeds_truncated = result.seeds_truncated;
  r.timings = result.timings;
  return r;
}

RunReport make_report(const Graph& graph, const RunConfig& config, const OpimResult& result) {
  RunReport r = base_report(graph, config, result.solution);
  r.opim_rounds = result.rounds;
  r.final_theta = result.rounds.empty() ? 0 : result.rounds.back().samples;
  r.converged = result.reached_target;
  r.ell_used = config.ell;
  r.instance_guarantee = result.guarantee;
  r.target = result.target;
  r.approx_ratio = result.approx_ratio;
  r.diagnostics = result.diagnostics;
  r.timings = result.timings;
  return r;
}

std::string format_report(const RunReport& r) {
  const RunConfig& c = r.config;
  const bool opim = c.mode == Mode::Opim;
  Writer w;
  w.out << "# greediris run report\n";

  w.section("config");
  w.kv("mode", to_string(c.mode));
  w.kv("model", to_string(c.model));
  w.kv("k", c.k);
  w.kv("epsilon", num(c.epsilon));
  w.kv("ell", num(c.ell));
  w.kv("delta", num(c.delta));
  w.kv("alpha", num(c.alpha));
  w.kv("workers", c.m);
  w.kv("bucket_workers", c.bucket_workers);
  w.kv("buckets", c.bucket_override ? std::to_string(*c.bucket_override) : std::string("auto"));
  w.kv("opim_budget", c.opim_budget);
  w.kv("seed", r.master_seed);
  w.kv("deterministic", yes_no(c.deterministic));
  w.kv("transport", c.transport == Transport::Wire ? "wire" : "buffered");
  w.kv("input", r.input);
  w.kv("format", r.format);
  w.kv("weight_lo", num(r.weight_lo));
  w.kv("weight_hi", num(r.weight_hi));

  w.section("graph");
  w.kv("vertices", r.vertices);
  w.kv("edges", r.edges);

  w.section("rounds");
  if (opim) {
    w.out << "round samples r1 r2 cov1 cov2 sigma_low sigma_up guarantee\n";
    for (const auto& o : r.opim_rounds) {
      w.out << o.round_index << ' ' << o.samples << ' ' << o.r1 << ' ' << o.r2 << ' ' << o.cov1 << ' ' << o.cov2
            << ' ' << num(o.sigma_low) << ' ' << num(o.sigma_up) << ' ' << num(o.guarantee) << '\n';
    }
  } else {
    w.out << "round theta_hat retained coverage influence lower_bound passed\n";
    for (const auto& s : r.rounds) {
      w.out << s.round_index << ' ' << s.theta_hat << ' ' << s.samples_retained << ' ' << s.coverage << ' '
            << num(s.influence_estimate) << ' ' << num(s.lower_bound) << ' ' << yes_no(s.passed) << '\n';
    }
  }

  w.section("result");
  w.kv("seeds", join(r.seed_labels));
  w.kv("marginals", join(r.marginals));
  w.kv("coverage", r.coverage);
  w.kv("universe", r.universe);
  w.kv("coverage_fraction",
       num(r.universe ? static_cast<double>(r.coverage) / static_cast<double>(r.universe) : 0.0));
  w.kv("final_theta", r.final_theta);
  w.kv("converged", yes_no(r.converged));
  w.kv("source", r.final_source == 0 ? std::string("global") : "sender " + std::to_string(r.final_source));
  w.kv("ell_used", num(r.ell_used));
  const bool sequential = c.mode == Mode::Sequential || (opim && c.opim_sequential_selection);
  w.kv("guarantee_kind", sequential ? "greedy" : "combined");
  w.kv("guarantee", num(configured_guarantee(c)));
  if (opim) {
    w.kv("approx_ratio", num(r.approx_ratio));
    w.kv("instance_guarantee", num(r.instance_guarantee));
    w.kv("target", num(r.target));
  }

  w.section("influence");
  w.kv("mean", num(r.influence.mean));
  w.kv("std_error", num(r.influence.std_error));
  w.kv("trials", r.influence.trials);

  const auto& d = r.diagnostics;
  w.section("diagnostics");
  w.kv("seed_messages", d.seed_messages);
  w.kv("termination_messages", d.termination_messages);
  w.kv("sketch_lower_bound", num(d.lower_bound));
  w.kv("buckets", d.buckets);
  w.kv("bucket_workers", d.bucket_workers);
  w.kv("bucket_occupancy", join(d.bucket_occupancy));
  w.kv("bucket_coverage", join(d.bucket_coverage));
  w.kv("duplicate_skips", d.duplicate_skips);
  w.kv("seeds_streamed", r.seeds_streamed);
  w.kv("seeds_truncated", r.seeds_truncated);

  w.section("timings");
  w.kv("sampling", num(r.timings.sampling));
  w.kv("shuffle", num(r.timings.shuffle));
  w.kv("sender_select", num(r.timings.sender_select));
  w.kv("receiver_select", num(r.timings.receiver_select));
  w.kv("total", num(r.timings.total));
  return w.out.str();
}

std::vector<std::string> report_schema() {
  return {
      "config.mode", "config.model", "config.k", "config.epsilon", "config.ell", "config.delta", "config.alpha",
      "config.workers", "config.bucket_workers", "config.buckets", "config.opim_budget", "config.seed",
      "config.deterministic", "config.transport", "config.input", "config.format", "config.weight_lo",
      "config.weight_hi", "graph.vertices", "graph.edges", "rounds", "result.seeds", "result.marginals",
      "result.coverage", "result.universe", "result.coverage_fraction", "result.final_theta", "result.converged",
      "result.source", "result.ell_used", "result.guarantee_kind", "result.guarantee", "influence.mean",
      "influence.std_error", "influence.trials", "diagnostics.seed_messages", "diagnostics.termination_messages",
      "diagnostics.sketch_lower_bound", "diagnostics.buckets", "diagnostics.bucket_workers",
      "diagnostics.bucket_occupancy", "diagnostics.bucket_coverage", "diagnostics.duplicate_skips",
      "diagnostics.seeds_streamed", "diagnostics.seeds_truncated", "timings.sampling", "timings.shuffle",
      "timings.sender_select", "timings.receiver_select", "timings.total",
  };
}

std::vector<std::string> validate_report(std::string_view text) {
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      seen.insert(section);
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) seen.insert(section + "." + line.substr(0, eq));
  }
  std::vector<std::string> missing;
  for (auto& key : report_schema()) {
    if (!seen.contains(key)) missing.push_back(key);
  }
  return missing;
}

std::string strip_timings(std::string_view text) {
  const auto pos = text.find("[timings]\n");
  return std::string(pos == std::string_view::npos ? text : text.substr(0, pos));
}

std::string format_bench(const RunConfig& config, std::size_t theta, std::span<const BenchRow> rows) {
  Writer w;
  w.out << "# greediris bench report\n";
  w.section("config");
  w.kv("model", to_string(config.model));
  w.kv("k", config.k);
  w.kv("epsilon", num(config.epsilon));
  w.kv("delta", num(config.delta));
  w.kv("theta", theta);
  w.section("rows");
  w.out << "label m alpha coverage influence std_error influence_change_pct guarantee sampling shuffle "
           "sender_select receiver_select total\n";
  for (const auto& row : rows) {
    w.out << row.label << ' ' << row.m << ' ' << num(row.alpha) << ' ' << row.coverage << ' '
          << num(row.influence.mean) << ' ' << num(row.influence.std_error) << ' '
          << num(row.influence_change_pct) << ' ' << num(row.guarantee) << ' ' << num(row.timings.sampling) << ' '
          << num(row.timings.shuffle) << ' ' << num(row.timings.sender_select) << ' '
          << num(row.timings.receiver_select) << ' ' << num(row.timings.total) << '\n';
  }
  return w.out.str();
}

}  // namespace greediris
