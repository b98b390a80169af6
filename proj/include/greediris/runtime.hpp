#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "greediris/channel.hpp"
#include "greediris/max_cover.hpp"
#include "greediris/rrr.hpp"

namespace greediris {

/// Uniform random assignment of vertices to sender ranks [1, m-1]. Rank 0 is
/// the receiver and owns nothing.
struct PartitionAssignment {
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> owner;

  std::vector<vertex_t> owned_by(std::uint32_t rank) const;
};

PartitionAssignment partition_vertices(std::size_t n, std::size_t m, std::uint64_t seed);

/// Partial covering sets built at one rank from its own sample-id slice.
struct LocalCoveringSets {
  std::uint32_t rank = 0;
  sample_t id_lo = 0;
  sample_t id_hi = 0;
  CoveringSets sets;
};

/// All-to-all exchange: returns, per rank, the complete covering sets of the
/// vertices it owns (index 0, the receiver, is always empty). Throws
/// IntegrityError when rank id ranges overlap or a set strays outside its
/// rank's range.
std::vector<CoveringSets> shuffle_covering_sets(std::span<const LocalCoveringSets> local_sets,
                                                const PartitionAssignment& assignment);

/// Local lazy greedy for all k seeds. The first ceil(alpha*k) picks are sent
/// as they are made, then the full local solution goes out in a
/// TerminationMessage and the outbox is closed.
Solution run_sender(std::uint32_t rank, const CoveringSets& owned_sets, std::uint64_t universe_size,
                    std::size_t k, double alpha, Channel& outbox);

struct ReceiverOptions {
  std::uint64_t universe_size = 0;
  std::optional<std::size_t> bucket_override;
  /// Serializes consumption through a seeded scheduler when set.
  std::optional<std::uint64_t> scheduler_seed;
  /// Maximum number of seed messages in the shared log (default: senders * k).
  std::optional<std::size_t> log_capacity;
  /// Rung by the inbox channels; lets the receiver sleep while all are empty.
  std::shared_ptr<Doorbell> doorbell;
};

struct ReceiverDiagnostics {
  std::uint64_t seed_messages = 0;
  std::uint64_t termination_messages = 0;
  double lower_bound = 0;
  std::size_t buckets = 0;
  std::size_t bucket_workers = 0;
  std::vector<std::uint64_t> bucket_applied;    // per bucket, log entries examined
  std::vector<std::size_t> bucket_occupancy;    // per bucket, seeds admitted
  std::vector<std::uint64_t> bucket_coverage;   // per bucket, |C_b|
  std::uint64_t duplicate_skips = 0;
  /// (sender rank, order index) of every logged seed, in log order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> log_order;
};

struct ReceiverResult {
  Solution global;
  std::vector<Solution> reports;  // index i holds sender rank i+1
  ReceiverDiagnostics diagnostics;
};

/// Receiver side of one round. inboxes[i] carries sender rank i+1.
ReceiverResult run_receiver(std::span<Channel* const> inboxes, std::size_t k, double delta,
                            std::size_t bucket_workers, const ReceiverOptions& options);

struct Selection {
  Solution solution;
  std::uint32_t source = 0;  // 0 for the global solution, else the sender rank
};

/// Highest coverage among the global solution and the sender reports
/// (reports[i] is rank i+1). Ties go to the global solution, then the lowest
/// rank.
Selection select_final(const std::optional<Solution>& global, std::span<const Solution> reports);

struct RoundConfig {
  std::size_t k = 1;
  std::size_t m = 2;
  double delta = 0.077;
  double alpha = 1.0;
  std::size_t bucket_workers = 1;
  std::optional<std::size_t> bucket_override;
  std::uint64_t partition_seed = 0;
  std::optional<std::uint64_t> scheduler_seed;
  Transport transport = Transport::Buffered;
  IdParity parity = IdParity::All;
};

struct RoundTimings {
  double sampling = 0;
  double shuffle = 0;
  double sender_select = 0;
  double receiver_select = 0;
  double total = 0;

  RoundTimings& operator+=(const RoundTimings& o) noexcept;
};

struct RoundResult {
  Selection selected;
  Solution global;
  std::vector<Solution> local;
  ReceiverDiagnostics diagnostics;
  RoundTimings timings;
  std::uint64_t seeds_streamed = 0;
  std::uint64_t seeds_truncated = 0;  // computed locally but not sent
};

/// One distributed round over sample ids [0, theta_hat): grows the store
/// (per-rank slices), inverts each rank's slice, partitions and shuffles,
/// then runs senders and the receiver concurrently.
RoundResult run_round(SampleStore& store, std::size_t theta_hat, const RoundConfig& config);

/// Single-lane lazy greedy over every sample in [0, theta_hat).
Solution select_sequential(SampleStore& store, std::size_t theta_hat, std::size_t k,
                           IdParity parity = IdParity::All);

}  // namespace greediris
