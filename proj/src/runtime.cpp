#include "greediris/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <thread>

#include "greediris/error.hpp"
#include "greediris/rng.hpp"

namespace greediris {

std::vector<vertex_t> PartitionAssignment::owned_by(std::uint32_t rank) const {
  std::vector<vertex_t> out;
  for (std::size_t v = 0; v < owner.size(); ++v) {
    if (owner[v] == rank) out.push_back(static_cast<vertex_t>(v));
  }
  return out;
}

PartitionAssignment partition_vertices(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 2) throw ConfigError("at least two workers are required (one sender and the receiver)");
  PartitionAssignment a;
  a.m = m;
  a.seed = seed;
  a.owner.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    Rng rng(derive_seed(seed, v));
    a.owner[v] = 1 + static_cast<std::uint32_t>(rng.uniform_index(m - 1));
  }
  return a;
}

namespace {

// Rows destined for one rank, as packed by a single source rank.
struct SendBuffer {
  std::vector<vertex_t> vertices;
  std::vector<std::size_t> offsets{0};
  std::vector<sample_t> ids;
};

}  // namespace

std::vector<CoveringSets> shuffle_covering_sets(std::span<const LocalCoveringSets> local_sets,
                                                const PartitionAssignment& assignment) {
  const std::size_t m = assignment.m;
  const std::size_t n = assignment.owner.size();

  // Sample-id slices must be disjoint; merge order follows id order.
  std::vector<std::size_t> by_range(local_sets.size());
  for (std::size_t i = 0; i < by_range.size(); ++i) by_range[i] = i;
  std::sort(by_range.begin(), by_range.end(), [&](std::size_t a, std::size_t b) {
    return local_sets[a].id_lo < local_sets[b].id_lo;
  });
  for (std::size_t i = 0; i < by_range.size(); ++i) {
    const auto& ls = local_sets[by_range[i]];
    if (ls.id_lo > ls.id_hi) throw IntegrityError("rank " + std::to_string(ls.rank) + " has an inverted id range");
    if (i > 0 && local_sets[by_range[i - 1]].id_hi > ls.id_lo && ls.id_lo < ls.id_hi) {
      throw IntegrityError("sample id ranges of ranks " + std::to_string(local_sets[by_range[i - 1]].rank) +
                           " and " + std::to_string(ls.rank) + " overlap");
    }
    for (std::size_t j = 0; j < ls.sets.size(); ++j) {
      auto ids = ls.sets.samples(j);
      if (!ids.empty() && (ids.front() < ls.id_lo || ids.back() >= ls.id_hi)) {
        throw IntegrityError("rank " + std::to_string(ls.rank) + " holds sample ids outside its slice");
      }
      if (ls.sets.vertex(j) >= n) throw IntegrityError("covering set for unknown vertex");
    }
  }

  // Pack: each source rank splits its rows by owner (the all-to-all send side).
  std::vector<std::vector<SendBuffer>> inbox(m, std::vector<SendBuffer>(local_sets.size()));
  for (std::size_t s = 0; s < by_range.size(); ++s) {
    const auto& ls = local_sets[by_range[s]];
    for (std::size_t j = 0; j < ls.sets.size(); ++j) {
      const vertex_t v = ls.sets.vertex(j);
      auto& buf = inbox[assignment.owner[v]][s];
      auto ids = ls.sets.samples(j);
      buf.vertices.push_back(v);
      buf.ids.insert(buf.ids.end(), ids.begin(), ids.end());
      buf.offsets.push_back(buf.ids.size());
    }
  }

  // Unpack: each owner merges the partial rows of its vertices in id order.
  std::vector<CoveringSets> out(m);
  std::vector<std::vector<vertex_t>> owned(m);
  for (std::size_t v = 0; v < n; ++v) owned[assignment.owner[v]].push_back(static_cast<vertex_t>(v));
  std::vector<sample_t> merged;
  for (std::size_t q = 1; q < m; ++q) {
    std::vector<std::size_t> cursor(local_sets.size(), 0);
    for (vertex_t v : owned[q]) {
      merged.clear();
      for (std::size_t s = 0; s < local_sets.size(); ++s) {
        const auto& buf = inbox[q][s];
        auto& c = cursor[s];
        if (c < buf.vertices.size() && buf.vertices[c] == v) {
          for (auto i = buf.offsets[c]; i < buf.offsets[c + 1]; ++i) {
            if (!merged.empty() && merged.back() >= buf.ids[i]) {
              throw IntegrityError("sample id " + std::to_string(buf.ids[i]) + " appears twice for vertex " +
                                   std::to_string(v));
            }
            merged.push_back(buf.ids[i]);
          }
          ++c;
        }
      }
      out[q].push_back(v, merged);
    }
  }
  return out;
}

Solution run_sender(std::uint32_t rank, const CoveringSets& owned_sets, std::uint64_t universe_size,
                    std::size_t k, double alpha, Channel& outbox) {
  try {
    const std::size_t limit = truncated_count(k, alpha);
    Solution sol;
    sol.universe_size = universe_size;
    if (k > 0 && !owned_sets.empty()) {
      LazyGreedy greedy(universe_size, owned_sets);
      while (sol.seeds.size() < k) {
        auto pick = greedy.next();
        if (!pick) break;
        const auto order = static_cast<std::uint32_t>(sol.seeds.size());
        sol.seeds.push_back(pick->vertex);
        sol.marginals.push_back(pick->marginal);
        if (order < limit) {
          auto covering = owned_sets.find(pick->vertex);
          outbox.send(SeedMessage{rank, order, pick->vertex, {covering->begin(), covering->end()}});
        }
      }
      sol.coverage = greedy.coverage();
    }
    outbox.send(TerminationMessage{rank, sol});
    outbox.close();
    return sol;
  } catch (...) {
    outbox.close();
    throw;
  }
}

namespace {

struct LogEntry {
  std::uint32_t rank = 0;
  std::uint32_t order = 0;
  vertex_t seed = 0;
  std::vector<sample_t> covering;
};

// Append-only log with one writer (the communicating role) and any number of
// readers. An entry may be read only after its publication flag is set.
class SeedLog {
 public:
  explicit SeedLog(std::size_t capacity) : entries_(capacity), flags_(capacity) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return entries_.size(); }

  void publish(LogEntry entry) {
    entries_[size_] = std::move(entry);
    flags_[size_].store(1, std::memory_order_release);
    ++size_;
    epoch_.fetch_add(1, std::memory_order_acq_rel);
    epoch_.notify_all();
  }

  void seal() {
    sealed_.store(size_, std::memory_order_release);
    epoch_.fetch_add(1, std::memory_order_acq_rel);
    epoch_.notify_all();
  }

  /// Entry i once published, or nullptr if the log was sealed before it.
  const LogEntry* wait(std::size_t i) const {
    for (;;) {
      const auto seen = epoch_.load(std::memory_order_acquire);
      if (i < flags_.size() && flags_[i].load(std::memory_order_acquire)) return &entries_[i];
      if (sealed_.load(std::memory_order_acquire) <= i) return nullptr;
      epoch_.wait(seen, std::memory_order_acquire);
    }
  }

  const LogEntry& operator[](std::size_t i) const noexcept { return entries_[i]; }

 private:
  std::vector<LogEntry> entries_;
  std::vector<std::atomic<std::uint8_t>> flags_;
  std::size_t size_ = 0;
  std::atomic<std::size_t> sealed_{std::numeric_limits<std::size_t>::max()};
  mutable std::atomic<std::uint64_t> epoch_{0};
};

void validate_seed(const SeedMessage& msg, std::uint64_t universe_size) {
  const auto& c = msg.covering;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] >= universe_size || (i > 0 && c[i - 1] >= c[i])) {
      throw ProtocolError(static_cast<int>(msg.sender_rank), "malformed covering set for seed " + std::to_string(msg.seed));
    }
  }
}

}  // namespace

ReceiverResult run_receiver(std::span<Channel* const> inboxes, std::size_t k, double delta,
                            std::size_t bucket_workers, const ReceiverOptions& options) {
  const std::size_t senders = inboxes.size();
  ReceiverResult result;
  result.reports.resize(senders);
  auto& diag = result.diagnostics;

  std::vector<std::uint8_t> seen(senders, 0);
  std::vector<std::uint8_t> terminated(senders, 0);
  std::vector<std::optional<std::uint32_t>> last_order(senders);
  std::size_t pending_first = senders;
  std::size_t pending_term = senders;
  std::optional<Rng> scheduler;
  if (options.scheduler_seed) scheduler.emplace(*options.scheduler_seed);
  std::size_t cursor = 0;

  auto next_message = [&](const std::vector<std::uint8_t>& done) -> std::pair<std::size_t, Message> {
    if (scheduler) {
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < senders; ++i) {
        if (!done[i]) eligible.push_back(i);
      }
      const std::size_t i = eligible[scheduler->uniform_index(eligible.size())];
      auto msg = inboxes[i]->receive();
      if (!msg) throw ProtocolError(static_cast<int>(i + 1), "channel closed before termination");
      return {i, std::move(*msg)};
    }
    Message msg;
    for (;;) {
      const std::uint64_t ticket = options.doorbell ? options.doorbell->count() : 0;
      for (std::size_t j = 0; j < senders; ++j) {
        const std::size_t i = (cursor + j) % senders;
        if (done[i]) continue;
        const RecvStatus st = inboxes[i]->try_receive(msg);
        if (st == RecvStatus::Message) {
          cursor = i + 1;
          return {i, std::move(msg)};
        }
        if (st == RecvStatus::Closed) {
          throw ProtocolError(static_cast<int>(i + 1), "channel closed before termination");
        }
      }
      if (options.doorbell) {
        options.doorbell->wait(ticket);
      } else {
        std::this_thread::yield();
      }
    }
  };

  auto validate = [&](std::size_t i, const Message& msg) {
    const auto rank = static_cast<std::uint32_t>(i + 1);
    if (sender_of(msg) != rank) {
      throw ProtocolError(static_cast<int>(rank), "message claims sender rank " + std::to_string(sender_of(msg)));
    }
    if (const auto* seed = std::get_if<SeedMessage>(&msg)) {
      if (last_order[i] && seed->order_index <= *last_order[i]) {
        throw ProtocolError(static_cast<int>(rank), "seed messages out of order");
      }
      last_order[i] = seed->order_index;
      validate_seed(*seed, options.universe_size);
    }
  };

  // Phase 1: hold messages until every sender has produced one; the largest
  // first-seed marginal is the global maximum singleton coverage.
  std::vector<std::pair<std::size_t, Message>> held;
  while (pending_first > 0) {
    auto [i, msg] = next_message(seen);
    validate(i, msg);
    seen[i] = 1;
    --pending_first;
    held.emplace_back(i, std::move(msg));
  }
  double lower_bound = 1.0;
  for (const auto& [i, msg] : held) {
    if (const auto* seed = std::get_if<SeedMessage>(&msg)) {
      lower_bound = std::max(lower_bound, static_cast<double>(seed->covering.size()));
    }
  }
  StreamingSketch sketch(std::max<std::size_t>(k, 1), delta, lower_bound, options.universe_size,
                         options.bucket_override);
  diag.lower_bound = lower_bound;
  diag.buckets = sketch.size();

  // Phase 2: the communicating role appends to the log; bucket workers each
  // own a fixed bucket range and apply entries in log order.
  const std::size_t workers = std::min(bucket_workers, sketch.size());
  diag.bucket_workers = workers;
  SeedLog log(options.log_capacity.value_or(senders * std::max<std::size_t>(k, 1)));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = sketch.size() * w / workers;
    const std::size_t hi = sketch.size() * (w + 1) / workers;
    threads.emplace_back([&log, &sketch, lo, hi] {
      for (std::size_t i = 0;; ++i) {
        const LogEntry* e = log.wait(i);
        if (!e) return;
        sketch.insert_range(lo, hi, e->seed, e->covering);
      }
    });
  }

  auto consume = [&](std::size_t i, Message&& msg) {
    if (auto* seed = std::get_if<SeedMessage>(&msg)) {
      ++diag.seed_messages;
      diag.log_order.emplace_back(seed->sender_rank, seed->order_index);
      if (workers == 0) {
        sketch.insert(seed->seed, seed->covering);
        return;
      }
      if (log.size() == log.capacity()) {
        throw ProtocolError(static_cast<int>(i + 1), "seed log capacity exceeded");
      }
      log.publish({seed->sender_rank, seed->order_index, seed->seed, std::move(seed->covering)});
      return;
    }
    auto& term = std::get<TerminationMessage>(msg);
    ++diag.termination_messages;
    terminated[i] = 1;
    --pending_term;
    result.reports[i] = std::move(term.local_solution);
    result.reports[i].universe_size = options.universe_size;
  };

  try {
    for (auto& [i, msg] : held) consume(i, std::move(msg));
    while (pending_term > 0) {
      auto [i, msg] = next_message(terminated);
      validate(i, msg);
      consume(i, std::move(msg));
    }
  } catch (...) {
    log.seal();
    for (auto& t : threads) t.join();
    throw;
  }
  log.seal();
  for (auto& t : threads) t.join();
  if (workers > 0) sketch.note_processed(log.size());

  result.global = sketch.finalize();
  for (std::size_t b = 0; b < sketch.size(); ++b) {
    const auto& bk = sketch.bucket(b);
    diag.bucket_applied.push_back(bk.applied);
    diag.bucket_occupancy.push_back(bk.seeds.size());
    diag.bucket_coverage.push_back(bk.covered_count);
    diag.duplicate_skips += bk.duplicates;
  }
  return result;
}

Selection select_final(const std::optional<Solution>& global, std::span<const Solution> reports) {
  if (!global && reports.empty()) throw ParameterError("select_final needs at least one candidate");
  Selection best;
  bool have = false;
  if (global) {
    best = {*global, 0};
    have = true;
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!have || reports[i].coverage > best.solution.coverage) {
      best = {reports[i], static_cast<std::uint32_t>(i + 1)};
      have = true;
    }
  }
  return best;
}

RoundTimings& RoundTimings::operator+=(const RoundTimings& o) noexcept {
  sampling += o.sampling;
  shuffle += o.shuffle;
  sender_select += o.sender_select;
  receiver_select += o.receiver_select;
  total += o.total;
  return *this;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

RoundResult run_round(SampleStore& store, std::size_t theta_hat, const RoundConfig& config) {
  const std::size_t m = config.m;
  if (m < 2) throw ConfigError("at least two workers are required (one sender and the receiver)");
  if (config.k == 0) throw ParameterError("k must be positive");
  const std::size_t limit = truncated_count(config.k, config.alpha);
  const auto start = Clock::now();
  RoundResult result;

  // S1: every rank, the receiver included, samples its own id slice.
  auto t = Clock::now();
  store.grow_to(theta_hat, m);
  result.timings.sampling = seconds_since(t);

  // S2: local inversion, uniform partition, all-to-all.
  t = Clock::now();
  std::vector<LocalCoveringSets> local(m);
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < m; ++p) {
    const sample_t lo = slice_begin(theta_hat, m, p);
    const sample_t hi = slice_begin(theta_hat, m, p + 1);
    const auto views = store.views(lo, hi, config.parity);
    local[p] = {static_cast<std::uint32_t>(p), lo, hi, build_covering_sets(std::span<const SampleView>(views))};
  }
  const auto assignment = partition_vertices(store.graph().vertex_count(), m, config.partition_seed);
  const auto owned = shuffle_covering_sets(local, assignment);
  local.clear();
  result.timings.shuffle = seconds_since(t);

  // S3/S4: senders stream while the receiver aggregates.
  auto bell = std::make_shared<Doorbell>();
  std::vector<std::unique_ptr<Channel>> channels;
  std::vector<Channel*> inboxes;
  for (std::size_t p = 1; p < m; ++p) {
    channels.push_back(make_channel(config.transport, bell));
    inboxes.push_back(channels.back().get());
  }
  result.local.resize(m - 1);
  std::vector<std::exception_ptr> sender_errors(m - 1);
  std::vector<double> sender_seconds(m - 1, 0.0);
  std::exception_ptr receiver_error;
  ReceiverResult received;
  {
    std::vector<std::jthread> senders;
    for (std::size_t p = 1; p < m; ++p) {
      senders.emplace_back([&, p] {
        const auto s0 = Clock::now();
        try {
          result.local[p - 1] = run_sender(static_cast<std::uint32_t>(p), owned[p], theta_hat, config.k,
                                           config.alpha, *channels[p - 1]);
        } catch (...) {
          sender_errors[p - 1] = std::current_exception();
        }
        sender_seconds[p - 1] = seconds_since(s0);
      });
    }
    const auto r0 = Clock::now();
    try {
      ReceiverOptions opts;
      opts.universe_size = theta_hat;
      opts.bucket_override = config.bucket_override;
      opts.scheduler_seed = config.scheduler_seed;
      opts.log_capacity = (m - 1) * limit;
      opts.doorbell = bell;
      received = run_receiver(inboxes, config.k, config.delta, config.bucket_workers, opts);
    } catch (...) {
      receiver_error = std::current_exception();
      for (auto& c : channels) c->close();
    }
    result.timings.receiver_select = seconds_since(r0);
  }
  for (auto& e : sender_errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      if (!receiver_error) throw;
    }
  }
  if (receiver_error) std::rethrow_exception(receiver_error);

  result.timings.sender_select = *std::max_element(sender_seconds.begin(), sender_seconds.end());
  for (const auto& sol : result.local) {
    const std::uint64_t sent = std::min<std::uint64_t>(limit, sol.seeds.size());
    result.seeds_streamed += sent;
    result.seeds_truncated += sol.seeds.size() - sent;
  }
  result.global = received.global;
  result.diagnostics = std::move(received.diagnostics);
  result.selected = select_final(received.global, received.reports);
  result.timings.total = seconds_since(start);
  return result;
}

Solution select_sequential(SampleStore& store, std::size_t theta_hat, std::size_t k, IdParity parity) {
  store.grow_to(theta_hat);
  const auto views = store.views(0, static_cast<sample_t>(theta_hat), parity);
  const auto sets = build_covering_sets(std::span<const SampleView>(views));
  return lazy_greedy_max_cover(theta_hat, sets, k);
}

}  // namespace greediris
