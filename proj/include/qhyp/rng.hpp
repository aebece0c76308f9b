#pragma once

#include <array>
#include <cstdint>

namespace qhyp {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
///
/// A block is a pure function of (counter, key); no state is carried between
/// draws, so any draw of any stream can be regenerated independently.
class Philox4x64 {
 public:
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Block generate(Block counter, Key key) noexcept;
};

/// Noise channels of one trajectory.
enum class Channel : std::uint32_t { Counting = 0, Homodyne = 1, Projection = 2 };

/// Identifies one independent random stream: (seed, hypothesis, trajectory, channel).
/// Draw `i` of the stream is the Philox block at counter {i, channel, trajectory, hypothesis}.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t hypothesis = 0;
  std::uint32_t trajectory = 0;

  bool operator==(const StreamId&) const = default;
};

class RandomStream {
 public:
  RandomStream(StreamId id, Channel channel) noexcept : id_(id), channel_(channel) {}

  /// Uniform in the open interval (0, 1), 53 bits of resolution.
  double uniform(std::uint64_t index) const noexcept;
  /// Standard normal by inverse CDF of `uniform(index)`.
  double normal(std::uint64_t index) const noexcept;

 private:
  StreamId id_;
  Channel channel_;
};

/// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double p) noexcept;

}  // namespace qhyp
