#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace miwols {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit key is the user seed. The 128-bit counter is split into a
/// 64-bit stream identifier (high words) and a 64-bit block index (low
/// words), so distinct (seed, stream) pairs never share a block. Each block
/// yields four 32-bit outputs. Output depends only on (key, stream, draw
/// index), never on threads or scheduling.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  /// The raw bijection: ten rounds of the Philox S-box on `counter` under `key`.
  static Counter block(Counter counter, Key key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the Box-Muller transform.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream identifier for replication `rep` of scenario `scenario_id`.
inline std::uint64_t replication_stream(std::uint32_t scenario_id, std::uint32_t rep) {
  return (static_cast<std::uint64_t>(scenario_id) << 32) | rep;
}

}  // namespace miwols
