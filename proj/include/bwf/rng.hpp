#ifndef BWF_RNG_HPP
#define BWF_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace bwf {

/// Counter-based random stream (Philox4x32-10).
///
/// The 64-bit seed is the cipher key and the stream id occupies the upper
/// half of the 128-bit counter, so streams derived from one seed never
/// overlap. A stream is single-owner state: move or copy it into a worker
/// thread, never share one instance between threads.
///
/// Satisfies UniformRandomBitGenerator so it can drive <random> adaptors,
/// although the library itself only uses the member samplers below, whose
/// output is identical on every platform.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Fresh stream sharing this seed with a different id.
  RngStream derive(std::uint64_t stream_id) const noexcept {
    return RngStream(seed_, stream_id);
  }

  std::uint64_t next_u64() noexcept;
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller, second deviate cached).
  double normal() noexcept;
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace bwf

#endif  // BWF_RNG_HPP
