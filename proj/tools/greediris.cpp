#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "greediris/diffusion.hpp"
#include "greediris/driver.hpp"
#include "greediris/error.hpp"
#include "greediris/graph.hpp"
#include "greediris/report.hpp"
#include "greediris/runtime.hpp"

namespace gi = greediris;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct Options {
  std::string input;
  std::string format = "edgelist";
  std::string model = "ic";
  std::string mode = "imm";
  std::string transport = "buffered";
  std::size_t k = 100;
  double epsilon = 0.13;
  double ell = 1.0;
  double delta = 0.077;
  double alpha = 1.0;
  std::size_t workers = 2;
  std::size_t bucket_workers = 1;
  std::size_t buckets = 0;
  std::size_t opim_budget = std::size_t{1} << 20;
  std::uint64_t seed = 0;
  std::uint64_t trials = 64;
  std::string output;
  bool deterministic = false;
  bool undirected = false;
  bool opim_sequential = false;
  double weight_lo = 0.0;
  double weight_hi = 0.1;

  // bench only
  std::vector<std::size_t> sweep_workers{2, 4, 8};
  std::vector<double> sweep_alpha{1.0, 0.5, 0.125};
  std::size_t theta = 0;
};

void add_input_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--input", o.input, "Graph file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"edgelist", "binary"}));
  cmd->add_flag("--undirected", o.undirected, "Treat edge-list input as undirected");
  cmd->add_option("--model", o.model, "Diffusion model")->check(CLI::IsMember({"ic", "lt"}, CLI::ignore_case));
  cmd->add_option("--weight-lo", o.weight_lo, "Lower bound for generated edge weights");
  cmd->add_option("--weight-hi", o.weight_hi, "Upper bound for generated edge weights");
  cmd->add_option("--seed", o.seed, "Master seed; all sub-seeds derive from it");
}

void add_run_flags(CLI::App* cmd, Options& o) {
  add_input_flags(cmd, o);
  cmd->add_option("--k", o.k, "Seed budget");
  cmd->add_option("--epsilon", o.epsilon, "Sampling precision");
  cmd->add_option("--ell", o.ell, "Failure probability exponent (n^-ell)");
  cmd->add_option("--delta", o.delta, "Streaming bucket spacing");
  cmd->add_option("--alpha", o.alpha, "Fraction of local seeds streamed");
  cmd->add_option("--workers", o.workers, "Simulated machines, receiver included");
  cmd->add_option("--bucket-workers", o.bucket_workers, "Receiver threads applying bucket inserts (0 = inline)");
  cmd->add_option("--buckets", o.buckets, "Override the bucket count");
  cmd->add_option("--mode", o.mode, "Driver")->check(CLI::IsMember({"sequential", "imm", "opim"}));
  cmd->add_option("--opim-budget", o.opim_budget, "Maximum OPIM sample count");
  cmd->add_flag("--opim-sequential", o.opim_sequential, "Select OPIM seeds with sequential lazy greedy");
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials for the influence estimate");
  cmd->add_option("--transport", o.transport, "Channel implementation")
      ->check(CLI::IsMember({"buffered", "wire"}));
  cmd->add_option("--output", o.output, "Report path (default: stdout)");
  cmd->add_flag("--deterministic", o.deterministic, "Serialize message consumption through a seeded scheduler");
}

gi::RunConfig make_config(const Options& o) {
  gi::RunConfig c;
  c.k = o.k;
  c.epsilon = o.epsilon;
  c.ell = o.ell;
  c.delta = o.delta;
  c.alpha = o.alpha;
  c.m = o.workers;
  c.model = gi::parse_model(o.model);
  c.mode = gi::parse_mode(o.mode);
  c.seeds = gi::RunSeeds::from_master(o.seed);
  if (o.buckets > 0) c.bucket_override = o.buckets;
  c.opim_budget = o.opim_budget;
  c.bucket_workers = o.bucket_workers;
  c.deterministic = o.deterministic;
  c.transport = o.transport == "wire" ? gi::Transport::Wire : gi::Transport::Buffered;
  c.opim_sequential_selection = o.opim_sequential;
  return c;
}

gi::Graph load_graph(const Options& o, const gi::RunConfig& c) {
  const auto t = std::chrono::steady_clock::now();
  gi::Graph g;
  if (o.format == "binary") {
    g = gi::load_binary(o.input);
  } else {
    g = gi::build_graph(gi::load_edge_list(o.input, o.undirected ? gi::Directedness::Undirected
                                                                   : gi::Directedness::Directed));
  }
  if (!g.prepared_for(c.model)) g = gi::prepare_weights(g, c.model, o.weight_lo, o.weight_hi, c.seeds.graph_weights);
  spdlog::info("loaded {}: {} vertices, {} edges in {:.3f}s", o.input, g.vertex_count(), g.edge_count(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count());
  return g;
}

void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output, std::ios::binary);
  if (!out) throw gi::ConfigError("cannot open output file " + o.output);
  out << text;
  if (!out) throw gi::ConfigError("failed writing " + o.output);
}

void run_command(const Options& o, const gi::RunConfig& c) {
  const gi::Graph g = load_graph(o, c);
  gi::RunReport report;
  std::vector<gi::vertex_t> seeds;
  if (c.mode == gi::Mode::Opim) {
    const auto result = gi::run_opim(g, c);
    report = gi::make_report(g, c, result);
    seeds = result.solution.seeds;
    spdlog::info("opim: {} rounds, guarantee {:.4f} (target {:.4f})", result.rounds.size(), result.guarantee,
                 result.target);
  } else {
    const auto result = gi::run_imm(g, c);
    report = gi::make_report(g, c, result);
    seeds = result.solution.seeds;
    if (!result.converged) spdlog::warn("goodness check never passed; reporting the last round");
    spdlog::info("{}: {} rounds, final theta {}", gi::to_string(c.mode), result.rounds.size(), result.final_theta);
  }
  report.master_seed = o.seed;
  report.input = o.input;
  report.format = o.format;
  report.weight_lo = o.weight_lo;
  report.weight_hi = o.weight_hi;
  report.influence = gi::expected_influence(g, seeds, c.model, o.trials, c.seeds.influence);
  emit(o, gi::format_report(report));
}

void bench_command(const Options& o, gi::RunConfig c) {
  const gi::Graph g = load_graph(o, c);
  std::size_t theta = o.theta;
  if (theta == 0) {
    gi::RunConfig seq = c;
    seq.mode = gi::Mode::Sequential;
    theta = gi::run_imm(g, seq).final_theta;
    spdlog::info("bench: theta {} from a sequential IMM run", theta);
  }

  gi::SampleStore store(g, c.model, c.seeds.sampling);
  std::vector<gi::BenchRow> rows;

  auto t = std::chrono::steady_clock::now();
  store.grow_to(theta);
  gi::BenchRow base;
  base.label = "sequential";
  base.timings.sampling = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  t = std::chrono::steady_clock::now();
  const gi::Solution seq = gi::select_sequential(store, theta, c.k);
  base.timings.sender_select = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  base.timings.total = base.timings.sampling + base.timings.sender_select;
  base.coverage = seq.coverage;
  base.influence = gi::expected_influence(g, seq.seeds, c.model, o.trials, c.seeds.influence);
  gi::RunConfig seq_cfg = c;
  seq_cfg.mode = gi::Mode::Sequential;
  base.guarantee = gi::configured_guarantee(seq_cfg);
  rows.push_back(base);

  for (std::size_t m : o.sweep_workers) {
    for (double alpha : o.sweep_alpha) {
      gi::RunConfig cfg = c;
      cfg.m = m;
      cfg.alpha = alpha;
      cfg.mode = gi::Mode::Imm;
      cfg.validate();
      gi::RoundConfig rc;
      rc.k = cfg.k;
      rc.m = m;
      rc.delta = cfg.delta;
      rc.alpha = alpha;
      rc.bucket_workers = cfg.bucket_workers;
      rc.bucket_override = cfg.bucket_override;
      rc.partition_seed = cfg.seeds.partition;
      if (cfg.deterministic) rc.scheduler_seed = cfg.seeds.scheduler;
      rc.transport = cfg.transport;
      const auto result = gi::run_round(store, theta, rc);

      gi::BenchRow row;
      row.label = "streaming";
      row.m = m;
      row.alpha = alpha;
      row.coverage = result.selected.solution.coverage;
      row.influence = gi::expected_influence(g, result.selected.solution.seeds, c.model, o.trials, c.seeds.influence);
      row.influence_change_pct =
          base.influence.mean > 0 ? 100.0 * (row.influence.mean - base.influence.mean) / base.influence.mean : 0.0;
      row.guarantee = gi::configured_guarantee(cfg);
      row.timings = result.timings;
      rows.push_back(row);
      spdlog::info("bench: m={} alpha={} coverage={}", m, alpha, row.coverage);
    }
  }
  emit(o, gi::format_bench(c, theta, rows));
}

void convert_command(const Options& o, const gi::RunConfig& c, bool prepare) {
  gi::Graph g = gi::build_graph(
      gi::load_edge_list(o.input, o.undirected ? gi::Directedness::Undirected : gi::Directedness::Directed));
  if (prepare) g = gi::prepare_weights(g, c.model, o.weight_lo, o.weight_hi, c.seeds.graph_weights);
  if (o.output.empty()) throw gi::ConfigError("convert needs --output");
  gi::save_binary(g, o.output);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("greediris");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("GREEDIRIS_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"RIS influence maximization with distributed streaming seed selection"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Select seeds and write a run report");
  add_run_flags(run, o);

  auto* bench = app.add_subcommand("bench", "Compare sequential selection with a worker/alpha sweep");
  add_run_flags(bench, o);
  bench->add_option("--sweep-workers", o.sweep_workers, "Worker counts to sweep")->delimiter(',');
  bench->add_option("--sweep-alpha", o.sweep_alpha, "Truncation fractions to sweep")->delimiter(',');
  bench->add_option("--theta", o.theta, "Sample count (default: from a sequential IMM run)");

  auto* convert = app.add_subcommand("convert", "Write the binary graph cache for an edge list");
  add_input_flags(convert, o);
  bool prepare = false;
  convert->add_flag("--prepare", prepare, "Assign model weights before saving");
  convert->add_option("--output", o.output, "Binary cache path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  gi::RunConfig config;
  try {
    if (run->parsed() || bench->parsed()) {
      // OPIM runs take their own defaults unless overridden.
      if (o.mode == "opim") {
        auto* cmd = run->parsed() ? run : bench;
        if (cmd->count("--k") == 0) o.k = 1000;
        if (cmd->count("--epsilon") == 0) o.epsilon = 0.01;
        if (cmd->count("--delta") == 0) o.delta = 0.0562;
      }
      config = make_config(o);
      config.validate();
    } else {
      config = make_config(o);
    }
    if (o.weight_lo > o.weight_hi || o.weight_lo < 0 || o.weight_hi > 1) {
      throw gi::ParameterError("edge weights need 0 <= weight-lo <= weight-hi <= 1");
    }
    if (o.trials == 0) throw gi::ParameterError("--trials must be positive");
  } catch (const gi::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return kUsageError;
  }

  try {
    if (run->parsed()) run_command(o, config);
    if (bench->parsed()) bench_command(o, config);
    if (convert->parsed()) convert_command(o, config, prepare);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
