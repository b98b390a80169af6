#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "greediris/channel.hpp"
#include "greediris/error.hpp"
#include "greediris/runtime.hpp"
#include "support/instances.hpp"
#include "support/protocol.hpp"

using namespace greediris;
using namespace greediris::testing;

namespace {

std::vector<Message> drain(Channel& ch) {
  std::vector<Message> out;
  while (auto msg = ch.receive()) out.push_back(std::move(*msg));
  return out;
}

// Best coverage achievable with k of the given seeds' covering sets.
std::uint64_t streamed_opt(const CoveringSets& sets, const std::vector<vertex_t>& streamed, std::uint64_t universe,
                           std::size_t k) {
  std::vector<vertex_t> sorted = streamed;
  std::sort(sorted.begin(), sorted.end());
  CoveringSets sub;
  for (vertex_t v : sorted) sub.push_back(v, *sets.find(v));
  return brute_force_max_cover(universe, sub, std::min(k, sorted.size())).coverage;
}

}  // namespace

TEST_CASE("partition: single sender owns everything") {
  const auto p = partition_vertices(4, 2, 9);
  CHECK(p.owner == std::vector<std::uint32_t>{1, 1, 1, 1});
  CHECK(p.owned_by(1).size() == 4);
  CHECK(p.owned_by(0).empty());
}

TEST_CASE("partition: pure in its inputs") {
  CHECK(partition_vertices(1000, 5, 3).owner == partition_vertices(1000, 5, 3).owner);
  CHECK(partition_vertices(1000, 5, 3).owner != partition_vertices(1000, 5, 4).owner);
  CHECK_THROWS_AS(partition_vertices(10, 1, 0), ConfigError);
}

TEST_CASE("partition: uniform over senders") {
  const std::size_t n = 100000, m = 9;
  const auto p = partition_vertices(n, m, 2024);
  std::vector<std::size_t> counts(m, 0);
  for (auto r : p.owner) {
    REQUIRE(r >= 1);
    REQUIRE(r < m);
    ++counts[r];
  }
  const double mean = static_cast<double>(n) / 8.0;
  const double sigma = std::sqrt(static_cast<double>(n) * (1.0 / 8.0) * (7.0 / 8.0));
  for (std::size_t r = 1; r < m; ++r) CHECK(std::abs(static_cast<double>(counts[r]) - mean) <= 4 * sigma);
}

TEST_CASE("shuffle: union of partial sets") {
  // a = 0 owned by rank 1
  PartitionAssignment p{3, 0, {1, 2}};
  std::vector<LocalCoveringSets> local(3);
  local[0] = {0, 0, 0, {}};
  local[1] = {1, 0, 5, make_sets({{0, {0}}})};
  local[2] = {2, 5, 10, make_sets({{0, {5}}, {1, {6, 7}}})};
  const auto merged = shuffle_covering_sets(local, p);
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].empty());
  REQUIRE(merged[1].find(0).has_value());
  CHECK(std::vector<sample_t>(merged[1].find(0)->begin(), merged[1].find(0)->end()) ==
        std::vector<sample_t>{0, 5});
  CHECK(merged[2].find(1)->size() == 2);
}

TEST_CASE("shuffle: unseen vertex gets an empty set") {
  PartitionAssignment p{2, 0, {1, 1, 1}};
  std::vector<LocalCoveringSets> local{{0, 0, 2, make_sets({{0, {0, 1}}})}, {1, 2, 4, make_sets({{2, {3}}})}};
  const auto merged = shuffle_covering_sets(local, p);
  REQUIRE(merged[1].find(1).has_value());
  CHECK(merged[1].find(1)->empty());
  CHECK(merged[1].size() == 3);
}

TEST_CASE("shuffle: overlapping ranges are rejected") {
  PartitionAssignment p{3, 0, {1, 2}};
  std::vector<LocalCoveringSets> overlap{{1, 0, 6, make_sets({{0, {0}}})}, {2, 5, 10, make_sets({{0, {7}}})}};
  CHECK_THROWS_AS(shuffle_covering_sets(overlap, p), IntegrityError);
  std::vector<LocalCoveringSets> stray{{1, 0, 5, make_sets({{0, {7}}})}, {2, 5, 10, {}}};
  CHECK_THROWS_AS(shuffle_covering_sets(stray, p), IntegrityError);
}

TEST_CASE("shuffle: matches single-machine inversion") {
  Rng rng(31);
  for (int round = 0; round < 10; ++round) {
    const std::size_t n = 40, m = 2 + rng.uniform_index(6);
    const sample_t theta = 500;
    const Graph g = prepared(n, random_edges(rng, n, 300), Model::IC, 0.0, 0.5, round);
    const auto batch = generate_batch(g, Model::IC, 0, theta, round);
    const auto p = partition_vertices(n, m, round);

    std::vector<LocalCoveringSets> local;
    for (std::size_t r = 0; r < m; ++r) {
      const sample_t lo = slice_begin(theta, m, r), hi = slice_begin(theta, m, r + 1);
      std::vector<SampleView> views;
      for (sample_t id = lo; id < hi; ++id) views.push_back(batch[id]);
      local.push_back({static_cast<std::uint32_t>(r), lo, hi, build_covering_sets(views)});
    }
    const auto merged = shuffle_covering_sets(local, p);
    for (std::uint32_t r = 1; r < m; ++r) {
      const auto owned = p.owned_by(r);
      CHECK(merged[r] == build_covering_sets(batch, std::span<const vertex_t>(owned)));
    }
  }
}

TEST_CASE("sender: full stream") {
  BufferedChannel ch;
  const auto sets = make_sets({{0, {0, 1, 2}}, {1, {3, 4}}, {2, {5}}});
  const auto sol = run_sender(1, sets, 6, 3, 1.0, ch);
  const auto msgs = drain(ch);
  REQUIRE(msgs.size() == 4);
  std::uint64_t prev = ~0ULL;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = std::get<SeedMessage>(msgs[i]);
    CHECK(s.order_index == i);
    CHECK(s.sender_rank == 1);
    CHECK(s.covering.size() <= prev);
    prev = s.covering.size();
  }
  CHECK(std::get<TerminationMessage>(msgs[3]).local_solution == sol);
  CHECK(ch.closed());
}

TEST_CASE("sender: truncated stream still reports all seeds") {
  BufferedChannel ch;
  const auto sets = make_sets({{0, {0, 1, 2}}, {1, {3, 4}}, {2, {5}}});
  run_sender(2, sets, 6, 3, 0.34, ch);
  const auto msgs = drain(ch);
  REQUIRE(msgs.size() == 3);
  CHECK(std::holds_alternative<SeedMessage>(msgs[0]));
  CHECK(std::holds_alternative<SeedMessage>(msgs[1]));
  CHECK(std::get<TerminationMessage>(msgs[2]).local_solution.seeds.size() == 3);
}

TEST_CASE("sender: nothing owned") {
  BufferedChannel ch;
  const auto sol = run_sender(1, CoveringSets{}, 6, 3, 1.0, ch);
  const auto msgs = drain(ch);
  REQUIRE(msgs.size() == 1);
  CHECK(std::get<TerminationMessage>(msgs[0]).local_solution.seeds.empty());
  CHECK(sol.coverage == 0);
}

TEST_CASE("sender: closed outbox aborts") {
  BufferedChannel ch;
  ch.close();
  CHECK_THROWS_AS(run_sender(1, make_sets({{0, {0}}}), 1, 1, 1.0, ch), TransportError);
}

TEST_CASE("wire frames round trip") {
  const Message seed = SeedMessage{3, 7, 42, {1, 5, 9}};
  Solution sol;
  sol.seeds = {4, 2};
  sol.marginals = {10, 3};
  sol.coverage = 13;
  const Message term = TerminationMessage{3, sol};
  for (const Message& msg : {seed, term}) {
    auto bytes = encode_frame(msg);
    const auto decoded = decode_frame(bytes);
    REQUIRE(decoded.has_value());
    CHECK(decoded->second == bytes.size());
    CHECK(decoded->first == msg);
    CHECK_FALSE(decode_frame(std::span<const std::uint8_t>(bytes).first(bytes.size() - 1)).has_value());
  }
  const auto bytes = encode_frame(seed);
  // u32 length, u8 kind, u32 rank ...
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 3);
  CHECK(bytes.size() == 4 + 1 + 4 * 4 + 3 * 4);
  auto bad = bytes;
  bad[4] = 9;
  CHECK_THROWS_AS(decode_frame(bad), TransportError);
}

TEST_CASE("wire channel preserves order") {
  WireChannel ch;
  for (std::uint32_t i = 0; i < 5; ++i) ch.send(SeedMessage{1, i, i, {i}});
  ch.close();
  CHECK(ch.bytes_sent() > 0);
  const auto msgs = drain(ch);
  REQUIRE(msgs.size() == 5);
  for (std::uint32_t i = 0; i < 5; ++i) CHECK(std::get<SeedMessage>(msgs[i]).order_index == i);
  CHECK_THROWS_AS(ch.send(SeedMessage{}), TransportError);
}

TEST_CASE("receiver: one sender") {
  Rng rng(41);
  for (int round = 0; round < 20; ++round) {
    const auto inst = random_cover(rng, 12, 40);
    const std::size_t k = 1 + rng.uniform_index(4);
    const double delta = 0.1;
    const auto run = run_protocol({inst.sets}, inst.universe, k, 1.0, delta, 1, round);
    const auto& local = run.local[0];
    CHECK(static_cast<double>(run.receiver.global.coverage) >= (0.5 - delta) * static_cast<double>(local.coverage));
    CHECK(run.receiver.reports[0].seeds == local.seeds);
  }
}

TEST_CASE("receiver: all senders empty") {
  const auto run = run_protocol({CoveringSets{}, CoveringSets{}}, 10, 3, 1.0, 0.1, 1, std::nullopt);
  CHECK(run.receiver.global.seeds.empty());
  CHECK(run.receiver.global.coverage == 0);
  for (const auto& r : run.receiver.reports) CHECK(r.seeds.empty());
  CHECK(run.receiver.diagnostics.lower_bound == 1.0);
}

TEST_CASE("receiver: lower bound is the largest first seed") {
  const auto a = make_sets({{0, {0, 1, 2, 3}}, {1, {4}}});
  const auto b = make_sets({{2, {5, 6}}});
  const auto run = run_protocol({a, b}, 7, 2, 1.0, 0.1, 1, 5);
  CHECK(run.receiver.diagnostics.lower_bound == 4.0);
  CHECK(run.receiver.diagnostics.seed_messages == 3);
  CHECK(run.receiver.diagnostics.termination_messages == 2);
}

TEST_CASE("receiver: closing without termination names the rank") {
  BufferedChannel good, bad;
  good.send(TerminationMessage{1, {}});
  good.close();
  bad.send(SeedMessage{2, 0, 3, {0}});
  bad.close();
  std::vector<Channel*> inboxes{&good, &bad};
  ReceiverOptions opts;
  opts.universe_size = 4;
  try {
    (void)run_receiver(inboxes, 2, 0.1, 1, opts);
    FAIL("expected a protocol error");
  } catch (const ProtocolError& e) {
    CHECK(e.rank() == 2);
  }
}

TEST_CASE("receiver: rejects out-of-order and misaddressed messages") {
  auto expect_rank = [](std::vector<Message> stream, int rank) {
    BufferedChannel ch;
    for (auto& m : stream) ch.send(m);
    ch.close();
    std::vector<Channel*> inboxes{&ch};
    ReceiverOptions opts;
    opts.universe_size = 10;
    opts.scheduler_seed = 1;
    try {
      (void)run_receiver(inboxes, 3, 0.1, 2, opts);
      FAIL("expected a protocol error");
    } catch (const ProtocolError& e) {
      CHECK(e.rank() == rank);
    }
  };
  expect_rank({SeedMessage{1, 1, 0, {0}}, SeedMessage{1, 0, 1, {1}}, TerminationMessage{1, {}}}, 1);
  expect_rank({SeedMessage{2, 0, 0, {0}}, TerminationMessage{1, {}}}, 1);
  expect_rank({SeedMessage{1, 0, 0, {3, 1}}, TerminationMessage{1, {}}}, 1);
  expect_rank({SeedMessage{1, 0, 0, {11}}, TerminationMessage{1, {}}}, 1);
}

TEST_CASE("receiver: three senders over many interleavings") {
  Rng rng(43);
  const double delta = 0.077;
  for (int round = 0; round < 30; ++round) {
    const auto inst = random_cover(rng, 18, 40);
    const std::size_t k = 1 + rng.uniform_index(4);
    std::vector<std::uint32_t> owner(inst.sets.size());
    for (auto& o : owner) o = 1 + static_cast<std::uint32_t>(rng.uniform_index(3));
    const auto owned = split_sets(inst.sets, owner, 3);
    const auto run = run_protocol(owned, inst.universe, k, 1.0, delta, 1 + round % 3, rng());

    std::vector<vertex_t> streamed;
    for (const auto& l : run.local) streamed.insert(streamed.end(), l.seeds.begin(), l.seeds.end());
    const auto opt = streamed_opt(inst.sets, streamed, inst.universe, k);
    CHECK(static_cast<double>(run.selected.solution.coverage) >= (0.5 - delta) * static_cast<double>(opt));

    // Per-sender FIFO in the log.
    std::map<std::uint32_t, std::uint32_t> next;
    for (const auto& [rank, order] : run.receiver.diagnostics.log_order) CHECK(order == next[rank]++);
    for (auto applied : run.receiver.diagnostics.bucket_applied) CHECK(applied == run.receiver.diagnostics.seed_messages);
  }
}

TEST_CASE("receiver: scheduler seed fixes the outcome") {
  Rng rng(44);
  const auto inst = random_cover(rng, 18, 60, 0.2);
  std::vector<std::uint32_t> owner(inst.sets.size());
  for (auto& o : owner) o = 1 + static_cast<std::uint32_t>(rng.uniform_index(3));
  const auto owned = split_sets(inst.sets, owner, 3);
  const auto a = run_protocol(owned, inst.universe, 4, 1.0, 0.1, 1, 99);
  const auto b = run_protocol(owned, inst.universe, 4, 1.0, 0.1, 4, 99, Transport::Wire);
  const auto c = run_protocol(owned, inst.universe, 4, 1.0, 0.1, 0, 99);
  CHECK(a.receiver.diagnostics.log_order == b.receiver.diagnostics.log_order);
  CHECK(a.receiver.global.seeds == b.receiver.global.seeds);
  CHECK(a.receiver.global.seeds == c.receiver.global.seeds);
  CHECK(a.receiver.diagnostics.bucket_occupancy == b.receiver.diagnostics.bucket_occupancy);
}

TEST_CASE("select_final: examples") {
  auto with = [](std::uint64_t cov, vertex_t tag) {
    Solution s;
    s.seeds = {tag};
    s.coverage = cov;
    return s;
  };
  const std::vector<Solution> low{with(8, 1)};
  auto sel = select_final(with(10, 0), low);
  CHECK(sel.source == 0);
  CHECK(sel.solution.coverage == 10);

  const std::vector<Solution> two{with(7, 1), with(6, 2)};
  sel = select_final(with(5, 0), two);
  CHECK(sel.source == 1);
  CHECK(sel.solution.coverage == 7);

  const std::vector<Solution> tie{with(5, 1)};
  CHECK(select_final(with(5, 0), tie).source == 0);
  const std::vector<Solution> tie2{with(5, 1), with(9, 2), with(9, 3)};
  CHECK(select_final(with(5, 0), tie2).source == 2);
  CHECK(select_final(std::nullopt, tie2).source == 2);
  CHECK_THROWS_AS(select_final(std::nullopt, std::span<const Solution>{}), ParameterError);
}

TEST_CASE("run_round: one sender equals sequential greedy") {
  Rng rng(51);
  for (int round = 0; round < 5; ++round) {
    const Graph g = prepared(60, random_edges(rng, 60, 300), Model::IC, 0.0, 0.4, round);
    SampleStore store(g, Model::IC, round);
    RoundConfig rc;
    rc.k = 4;
    rc.m = 2;
    rc.partition_seed = round;
    const auto r = run_round(store, 800, rc);
    const auto seq = select_sequential(store, 800, 4);
    CHECK(r.selected.solution.coverage == seq.coverage);
    CHECK(r.selected.solution.universe_size == 800);
  }
}

TEST_CASE("run_round: zero samples") {
  const Graph g = prepared(5, path_edges(5, 0.5));
  SampleStore store(g, Model::IC, 1);
  RoundConfig rc;
  rc.k = 2;
  rc.m = 3;
  const auto r = run_round(store, 0, rc);
  CHECK(r.selected.solution.seeds.empty());
  CHECK(r.selected.solution.coverage == 0);
}

TEST_CASE("run_round: dominates every local solution") {
  Rng rng(52);
  for (int round = 0; round < 10; ++round) {
    const Graph g = prepared(16, random_edges(rng, 16, 40), Model::IC, 0.1, 0.5, round);
    SampleStore store(g, Model::IC, round);
    RoundConfig rc;
    rc.k = 3;
    rc.m = 4;
    rc.partition_seed = round;
    rc.scheduler_seed = round;
    const auto r = run_round(store, 64, rc);
    for (const auto& l : r.local) CHECK(r.selected.solution.coverage >= l.coverage);
    CHECK(r.selected.solution.coverage ==
          union_coverage(64, build_covering_sets(store.batch()), r.selected.solution.seeds));
  }
}

TEST_CASE("run_round: truncation counters and parity") {
  Rng rng(53);
  const Graph g = prepared(80, random_edges(rng, 80, 400), Model::LT, 0.0, 0.4);
  SampleStore store(g, Model::LT, 3);
  RoundConfig rc;
  rc.k = 8;
  rc.m = 3;
  rc.alpha = 0.25;
  rc.parity = IdParity::Even;
  const auto r = run_round(store, 1000, rc);
  CHECK(r.seeds_streamed + r.seeds_truncated == r.local[0].seeds.size() + r.local[1].seeds.size());
  CHECK(r.seeds_streamed <= 2 * truncated_count(8, 0.25));
  CHECK(r.selected.solution.universe_size == 1000);
  CHECK(r.selected.solution.coverage <= 500);
}
