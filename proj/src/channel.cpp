#include "greediris/channel.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "greediris/error.hpp"

namespace greediris {

namespace {

class FrameWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> bytes;
};

class FrameReader {
 public:
  explicit FrameReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw TransportError("frame payload truncated");
    std::make_unsigned_t<T> value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr std::uint8_t kSeedFrame = 1;
constexpr std::uint8_t kTerminateFrame = 2;

std::uint32_t checked_u32(std::size_t value) {
  if (value > std::numeric_limits<std::uint32_t>::max()) throw TransportError("frame field overflows u32");
  return static_cast<std::uint32_t>(value);
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Message& msg) {
  FrameWriter w;
  w.put<std::uint32_t>(0);  // length placeholder
  if (const auto* seed = std::get_if<SeedMessage>(&msg)) {
    w.put<std::uint8_t>(kSeedFrame);
    w.put<std::uint32_t>(seed->sender_rank);
    w.put<std::uint32_t>(seed->order_index);
    w.put<std::uint32_t>(seed->seed);
    w.put<std::uint32_t>(checked_u32(seed->covering.size()));
    for (sample_t id : seed->covering) w.put<std::uint32_t>(id);
  } else {
    const auto& term = std::get<TerminationMessage>(msg);
    const auto& sol = term.local_solution;
    w.put<std::uint8_t>(kTerminateFrame);
    w.put<std::uint32_t>(term.sender_rank);
    w.put<std::uint32_t>(checked_u32(sol.seeds.size()));
    for (std::size_t i = 0; i < sol.seeds.size(); ++i) {
      w.put<std::uint32_t>(sol.seeds[i]);
      w.put<std::uint64_t>(sol.marginals[i]);
    }
  }
  const std::uint32_t len = checked_u32(w.bytes.size() - 4);
  for (std::size_t i = 0; i < 4; ++i) w.bytes[i] = static_cast<std::uint8_t>(len >> (8 * i));
  return std::move(w.bytes);
}

std::optional<std::pair<Message, std::size_t>> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) return std::nullopt;
  FrameReader header(bytes.first(4));
  const auto len = header.get<std::uint32_t>();
  if (bytes.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  FrameReader r(bytes.subspan(4, len));

  const auto kind = r.get<std::uint8_t>();
  Message msg;
  if (kind == kSeedFrame) {
    SeedMessage seed;
    seed.sender_rank = r.get<std::uint32_t>();
    seed.order_index = r.get<std::uint32_t>();
    seed.seed = r.get<std::uint32_t>();
    const auto count = r.get<std::uint32_t>();
    if (static_cast<std::size_t>(count) * 4 > len) throw TransportError("seed frame covering length exceeds frame");
    seed.covering.resize(count);
    for (auto& id : seed.covering) id = r.get<std::uint32_t>();
    msg = std::move(seed);
  } else if (kind == kTerminateFrame) {
    TerminationMessage term;
    term.sender_rank = r.get<std::uint32_t>();
    const auto count = r.get<std::uint32_t>();
    if (static_cast<std::size_t>(count) * 12 > len) throw TransportError("termination frame count exceeds frame");
    for (std::uint32_t i = 0; i < count; ++i) {
      term.local_solution.seeds.push_back(r.get<std::uint32_t>());
      term.local_solution.marginals.push_back(r.get<std::uint64_t>());
      term.local_solution.coverage += term.local_solution.marginals.back();
    }
    msg = std::move(term);
  } else {
    throw TransportError("unknown frame kind " + std::to_string(kind));
  }
  if (!r.done()) throw TransportError("trailing bytes in frame");
  return std::pair{std::move(msg), 4 + static_cast<std::size_t>(len)};
}

void Doorbell::ring() {
  {
    std::lock_guard lock(mu_);
    ++rings_;
  }
  cv_.notify_all();
}

std::uint64_t Doorbell::count() const {
  std::lock_guard lock(mu_);
  return rings_;
}

void Doorbell::wait(std::uint64_t seen) const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return rings_ != seen; });
}

void Channel::send(const Message& msg) {
  {
    std::lock_guard lock(mu_);
    if (closed_) throw TransportError("send on closed channel");
    push_locked(msg);
  }
  cv_.notify_one();
  if (bell_) bell_->ring();
}

RecvStatus Channel::try_receive(Message& out) {
  std::lock_guard lock(mu_);
  if (auto msg = pop_locked()) {
    out = std::move(*msg);
    return RecvStatus::Message;
  }
  return closed_ ? RecvStatus::Closed : RecvStatus::Empty;
}

std::optional<Message> Channel::receive() {
  std::unique_lock lock(mu_);
  for (;;) {
    if (auto msg = pop_locked()) return msg;
    if (closed_) return std::nullopt;
    cv_.wait(lock);
  }
}

void Channel::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
  if (bell_) bell_->ring();
}

bool Channel::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::optional<Message> BufferedChannel::pop_locked() {
  if (queue_.empty()) return std::nullopt;
  Message msg = std::move(queue_.front());
  queue_.pop_front();
  return msg;
}

void WireChannel::push_locked(const Message& msg) {
  const auto frame = encode_frame(msg);
  buffer_.insert(buffer_.end(), frame.begin(), frame.end());
  bytes_sent_ += frame.size();
}

std::optional<Message> WireChannel::pop_locked() {
  auto decoded = decode_frame(std::span<const std::uint8_t>(buffer_).subspan(read_pos_));
  if (!decoded) return std::nullopt;
  read_pos_ += decoded->second;
  if (read_pos_ == buffer_.size()) {
    buffer_.clear();
    read_pos_ = 0;
  }
  return std::move(decoded->first);
}

std::unique_ptr<Channel> make_channel(Transport transport, std::shared_ptr<Doorbell> bell) {
  if (transport == Transport::Wire) return std::make_unique<WireChannel>(std::move(bell));
  return std::make_unique<BufferedChannel>(std::move(bell));
}

}  // namespace greediris
