#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "greediris/max_cover.hpp"

namespace greediris {

/// A streamed local seed with its complete (post-shuffle) covering set.
struct SeedMessage {
  std::uint32_t sender_rank = 0;
  std::uint32_t order_index = 0;
  vertex_t seed = 0;
  std::vector<sample_t> covering;

  bool operator==(const SeedMessage&) const = default;
};

/// Sent once per sender after its last SeedMessage.
struct TerminationMessage {
  std::uint32_t sender_rank = 0;
  Solution local_solution;

  bool operator==(const TerminationMessage&) const = default;
};

using Message = std::variant<SeedMessage, TerminationMessage>;

inline std::uint32_t sender_of(const Message& msg) noexcept {
  return std::visit([](const auto& m) { return m.sender_rank; }, msg);
}

// Wire format. Each frame is a u32 little-endian payload length followed by
// the payload:
//   kind 1 (seed):      u8 1, u32 sender_rank, u32 order_index, u32 seed_vertex,
//                       u32 covering_len, u32 sample_ids[covering_len]
//   kind 2 (terminate): u8 2, u32 sender_rank, u32 count,
//                       count x (u32 vertex, u64 marginal)
// All integers are little-endian. A decoded termination's coverage is the
// sum of its marginals; universe_size is not carried.
std::vector<std::uint8_t> encode_frame(const Message& msg);
/// Decodes one frame starting at `bytes`. Returns the message and the number
/// of bytes consumed, or nullopt if the frame is incomplete. Throws
/// TransportError on a malformed frame.
std::optional<std::pair<Message, std::size_t>> decode_frame(std::span<const std::uint8_t> bytes);

/// Wakes a single consumer waiting on several channels.
class Doorbell {
 public:
  void ring();
  /// Current ring count; pass it to wait() to sleep until the next ring.
  std::uint64_t count() const;
  void wait(std::uint64_t seen) const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::uint64_t rings_ = 0;
};

enum class RecvStatus : std::uint8_t { Message, Empty, Closed };

/// Ordered, unbounded single-producer single-consumer channel. send() never
/// blocks; it throws TransportError once the channel is closed.
class Channel {
 public:
  explicit Channel(std::shared_ptr<Doorbell> bell = nullptr) : bell_(std::move(bell)) {}
  virtual ~Channel() = default;
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void send(const Message& msg);
  RecvStatus try_receive(Message& out);
  /// Blocks until a message arrives; nullopt once closed and drained.
  std::optional<Message> receive();
  void close();
  bool closed() const;

 protected:
  virtual void push_locked(const Message& msg) = 0;
  virtual std::optional<Message> pop_locked() = 0;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool closed_ = false;
  std::shared_ptr<Doorbell> bell_;
};

/// Passes message objects through an in-memory queue.
class BufferedChannel final : public Channel {
 public:
  using Channel::Channel;

 protected:
  void push_locked(const Message& msg) override { queue_.push_back(msg); }
  std::optional<Message> pop_locked() override;

 private:
  std::deque<Message> queue_;
};

/// Serializes every message to wire frames on an in-memory byte stream.
class WireChannel final : public Channel {
 public:
  using Channel::Channel;
  std::uint64_t bytes_sent() const noexcept { return bytes_sent_; }

 protected:
  void push_locked(const Message& msg) override;
  std::optional<Message> pop_locked() override;

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t read_pos_ = 0;
  std::uint64_t bytes_sent_ = 0;
};

enum class Transport : std::uint8_t { Buffered, Wire };

std::unique_ptr<Channel> make_channel(Transport transport, std::shared_ptr<Doorbell> bell);

}  // namespace greediris
