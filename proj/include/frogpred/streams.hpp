#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "frogpred/rational.hpp"
#include "frogpred/stream_spec.hpp"

namespace frogpred {

/// Random-access bit source. Indices are 1-based. Implementations must be pure
/// (same index, same bit) and safe for concurrent reads.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual Bit bit_at(std::uint64_t index) const = 0;
  /// Fills out[k] = bit_at(first + k).
  virtual void read(std::uint64_t first, std::span<Bit> out) const;
};

/// Immutable, cheaply copyable handle to an infinite binary sequence b_1, b_2, ...
class BitStream {
 public:
  explicit BitStream(std::shared_ptr<const StreamSource> source,
                     std::optional<StreamSpec> spec = std::nullopt);

  /// index >= 1; index 0 throws InvalidArgument.
  Bit bit_at(std::uint64_t index) const;
  void read(std::uint64_t first, std::span<Bit> out) const;
  /// Bits first..first+count-1.
  BitVector window(std::uint64_t first, std::uint64_t count) const;
  /// Bits 1..length.
  BitVector prefix(std::uint64_t length) const { return window(1, length); }

  const std::optional<StreamSpec>& spec() const noexcept { return spec_; }
  const StreamSource& source() const noexcept { return *source_; }
  const std::shared_ptr<const StreamSource>& shared_source() const noexcept { return source_; }

 private:
  std::shared_ptr<const StreamSource> source_;
  std::optional<StreamSpec> spec_;
};

struct DensityReport {
  std::uint64_t t = 0;
  std::uint64_t ones = 0;
  Rational density;
  /// min over u in [tail_start, t] of N_u / u.
  Rational running_inf;
  std::uint64_t tail_start = 0;
};

BitStream from_finite(const BitVector& bits, Bit padding);

BitStream generate(const StreamSpec& spec);
/// Same as generate(spec) with every stochastic node's seed replaced by `seed`.
BitStream generate(const StreamSpec& spec, std::uint64_t seed);

DensityReport prefix_density(const BitStream& stream, std::uint64_t t);
DensityReport prefix_density(const BitStream& stream, std::uint64_t t, std::uint64_t tail_start);

BitStream negate(const BitStream& stream);

/// Dip lengths growth^j (j >= 1) not exceeding `limit`; at each one the prefix
/// density of the burst stream is <= eps.
std::vector<std::uint64_t> certified_dips(const BurstSpec& spec, std::uint64_t limit);

/// Parses the ASCII bit format used by file: streams.
BitVector parse_bit_text(std::string_view text);

}  // namespace frogpred
