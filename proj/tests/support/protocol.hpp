#pragma once

#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "greediris/channel.hpp"
#include "greediris/runtime.hpp"

namespace greediris::testing {

struct ProtocolRun {
  ReceiverResult receiver;
  std::vector<Solution> local;  // index i is sender rank i+1
  Selection selected;
};

/// Splits `sets` among `senders` ranks by `owner` (values in [1, senders]).
inline std::vector<CoveringSets> split_sets(const CoveringSets& sets, const std::vector<std::uint32_t>& owner,
                                            std::size_t senders) {
  std::vector<CoveringSets> out(senders);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out[owner[sets.vertex(i)] - 1].push_back(sets.vertex(i), sets.samples(i));
  }
  return out;
}

/// Runs senders on their own threads against one receiver. With a scheduler
/// seed the receiver's consumption order is fixed by that seed.
inline ProtocolRun run_protocol(const std::vector<CoveringSets>& owned, std::uint64_t universe, std::size_t k,
                                double alpha, double delta, std::size_t bucket_workers,
                                std::optional<std::uint64_t> scheduler_seed,
                                Transport transport = Transport::Buffered) {
  const std::size_t senders = owned.size();
  auto bell = std::make_shared<Doorbell>();
  std::vector<std::unique_ptr<Channel>> channels;
  std::vector<Channel*> inboxes;
  for (std::size_t i = 0; i < senders; ++i) {
    channels.push_back(make_channel(transport, bell));
    inboxes.push_back(channels.back().get());
  }
  ProtocolRun run;
  run.local.resize(senders);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < senders; ++i) {
      threads.emplace_back([&, i] {
        run.local[i] = run_sender(static_cast<std::uint32_t>(i + 1), owned[i], universe, k, alpha, *channels[i]);
      });
    }
    ReceiverOptions opts;
    opts.universe_size = universe;
    opts.scheduler_seed = scheduler_seed;
    opts.doorbell = bell;
    run.receiver = run_receiver(inboxes, k, delta, bucket_workers, opts);
  }
  run.selected = select_final(run.receiver.global, run.receiver.reports);
  return run;
}

}  // namespace greediris::testing
