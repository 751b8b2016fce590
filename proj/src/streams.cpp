#include "frogpred/streams.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "frogpred/error.hpp"
#include "frogpred/rng.hpp"

namespace frogpred {

void StreamSource::read(std::uint64_t first, std::span<Bit> out) const {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = bit_at(first + k);
}

BitStream::BitStream(std::shared_ptr<const StreamSource> source, std::optional<StreamSpec> spec)
    : source_(std::move(source)), spec_(std::move(spec)) {
  if (!source_) throw InvalidArgument("BitStream needs a source");
}

Bit BitStream::bit_at(std::uint64_t index) const {
  if (index == 0) throw InvalidArgument("stream indices start at 1");
  return source_->bit_at(index);
}

void BitStream::read(std::uint64_t first, std::span<Bit> out) const {
  if (first == 0) throw InvalidArgument("stream indices start at 1");
  if (out.empty()) return;
  source_->read(first, out);
}

BitVector BitStream::window(std::uint64_t first, std::uint64_t count) const {
  BitVector out(count);
  read(first, out);
  return out;
}

namespace {

class FiniteSource final : public StreamSource {
 public:
  FiniteSource(BitVector bits, Bit pad) : bits_(std::move(bits)), pad_(pad) {}

  Bit bit_at(std::uint64_t index) const override { return index <= bits_.size() ? bits_[index - 1] : pad_; }

  void read(std::uint64_t first, std::span<Bit> out) const override {
    std::size_t k = 0;
    for (; k < out.size() && first + k <= bits_.size(); ++k) out[k] = bits_[first + k - 1];
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), pad_);
  }

 private:
  BitVector bits_;
  Bit pad_;
};

class PeriodicSource final : public StreamSource {
 public:
  explicit PeriodicSource(BitVector pattern) : pattern_(std::move(pattern)) {}

  Bit bit_at(std::uint64_t index) const override { return pattern_[(index - 1) % pattern_.size()]; }

  void read(std::uint64_t first, std::span<Bit> out) const override {
    std::size_t phase = (first - 1) % pattern_.size();
    for (auto& b : out) {
      b = pattern_[phase];
      if (++phase == pattern_.size()) phase = 0;
    }
  }

 private:
  BitVector pattern_;
};

/// Exact Bernoulli(num/den) from counter-mode words: compare the uniform number
/// 0.w0 w1 w2 ... (base 2^64) against the base-2^64 expansion of num/den.
Bit bernoulli_bit_u64(std::uint64_t seed, std::uint64_t index, std::uint64_t num, std::uint64_t den) {
  unsigned __int128 rem = num;
  for (std::uint64_t k = 0;; ++k) {
    const unsigned __int128 scaled = rem << 64;
    const auto digit = static_cast<std::uint64_t>(scaled / den);
    rem = scaled % den;
    const std::uint64_t word = hash_word(seed, index, k);
    if (word < digit) return 1;
    if (word > digit) return 0;
    if (rem == 0) return 0;
  }
}

Bit bernoulli_bit_big(std::uint64_t seed, std::uint64_t index, BigInt rem, const BigInt& den) {
  for (std::uint64_t k = 0;; ++k) {
    rem <<= 64;
    const BigInt digit_big = rem / den;
    rem -= digit_big * den;
    const auto digit = digit_big.convert_to<std::uint64_t>();
    const std::uint64_t word = hash_word(seed, index, k);
    if (word < digit) return 1;
    if (word > digit) return 0;
    if (rem == 0) return 0;
  }
}

bool fits_u64(const BigInt& v) { return v <= std::numeric_limits<std::uint64_t>::max(); }

class BernoulliSource final : public StreamSource {
 public:
  explicit BernoulliSource(const BernoulliSpec& spec)
      : schedule_(spec.schedule), num_(numerator(spec.value)), den_(denominator(spec.value)), seed_(spec.seed) {
    small_ = fits_u64(den_);
    if (small_) {
      num64_ = num_.convert_to<std::uint64_t>();
      den64_ = den_.convert_to<std::uint64_t>();
    }
  }

  Bit bit_at(std::uint64_t index) const override {
    if (schedule_ == BernoulliSpec::Schedule::constant) {
      if (num_ == 0) return 0;
      if (num_ == den_) return 1;
      if (small_) return bernoulli_bit_u64(seed_, index, num64_, den64_);
      return bernoulli_bit_big(seed_, index, num_, den_);
    }
    // rate_i = min{1, eps + 2^-i} = (num * 2^i + den) / (den * 2^i)
    if (index < 64 && small_) {
      const unsigned __int128 den_i = static_cast<unsigned __int128>(den64_) << index;
      const unsigned __int128 num_i = (static_cast<unsigned __int128>(num64_) << index) + den64_;
      if (num_i >= den_i) return 1;
      if (den_i <= std::numeric_limits<std::uint64_t>::max()) {
        return bernoulli_bit_u64(seed_, index, static_cast<std::uint64_t>(num_i), static_cast<std::uint64_t>(den_i));
      }
    }
    if (index >= std::numeric_limits<unsigned>::max()) throw CapacityError("eps-plus-halving index too large");
    const BigInt den_i = den_ << static_cast<unsigned>(index);
    const BigInt num_i = (num_ << static_cast<unsigned>(index)) + den_;
    if (num_i >= den_i) return 1;
    return bernoulli_bit_big(seed_, index, num_i, den_i);
  }

 private:
  BernoulliSpec::Schedule schedule_;
  BigInt num_, den_;
  std::uint64_t seed_;
  bool small_ = false;
  std::uint64_t num64_ = 0, den64_ = 1;
};

struct BurstSegment {
  std::uint64_t begin = 0;  // segment covers (begin, end]
  std::uint64_t end = 0;
  std::uint64_t burst_first = 0;  // ones occupy [burst_first, burst_first + burst_length)
  std::uint64_t burst_length = 0;
};

std::vector<std::uint64_t> dip_lengths(std::uint64_t growth, std::uint64_t limit) {
  std::vector<std::uint64_t> dips;
  unsigned __int128 d = growth;
  while (d <= limit) {
    dips.push_back(static_cast<std::uint64_t>(d));
    d *= growth;
  }
  return dips;
}

class BurstSource final : public StreamSource {
 public:
  explicit BurstSource(const BurstSpec& spec) {
    if (!fits_u64(denominator(spec.eps))) throw CapacityError("burst eps denominator exceeds 64 bits");
    const auto num = numerator(spec.eps).convert_to<std::uint64_t>();
    const auto den = denominator(spec.eps).convert_to<std::uint64_t>();
    std::uint64_t previous_dip = 0;
    std::uint64_t previous_ones = 0;
    std::uint64_t j = 1;
    for (std::uint64_t dip : dip_lengths(spec.growth, kLimit)) {
      const auto ones = static_cast<std::uint64_t>(static_cast<unsigned __int128>(dip) * num / den);
      BurstSegment seg;
      seg.begin = previous_dip;
      seg.end = dip;
      seg.burst_length = ones - previous_ones;
      const std::uint64_t slack = (dip - previous_dip) - seg.burst_length;
      seg.burst_first = previous_dip + 1 + hash_word(spec.seed, j, 0) % (slack + 1);
      segments_.push_back(seg);
      previous_dip = dip;
      previous_ones = ones;
      ++j;
    }
  }

  Bit bit_at(std::uint64_t index) const override {
    const BurstSegment* seg = find(index);
    if (seg == nullptr) return 0;
    return index >= seg->burst_first && index - seg->burst_first < seg->burst_length;
  }

  void read(std::uint64_t first, std::span<Bit> out) const override {
    std::fill(out.begin(), out.end(), Bit{0});
    const std::uint64_t last = first + out.size() - 1;
    for (const auto& seg : segments_) {
      if (seg.burst_length == 0) continue;
      const std::uint64_t lo = std::max(first, seg.burst_first);
      const std::uint64_t hi = std::min(last, seg.burst_first + seg.burst_length - 1);
      for (std::uint64_t i = lo; i <= hi && lo <= hi; ++i) out[i - first] = 1;
    }
  }

  // Dips stop below 2^62; past the last one the stream is all zeros.
  static constexpr std::uint64_t kLimit = std::uint64_t{1} << 62;

 private:
  const BurstSegment* find(std::uint64_t index) const {
    auto it = std::lower_bound(segments_.begin(), segments_.end(), index,
                               [](const BurstSegment& s, std::uint64_t i) { return s.end < i; });
    return it == segments_.end() ? nullptr : &*it;
  }

  std::vector<BurstSegment> segments_;
};

class NegatedSource final : public StreamSource {
 public:
  explicit NegatedSource(std::shared_ptr<const StreamSource> inner) : inner_(std::move(inner)) {}

  Bit bit_at(std::uint64_t index) const override { return 1 - inner_->bit_at(index); }

  void read(std::uint64_t first, std::span<Bit> out) const override {
    inner_->read(first, out);
    for (auto& b : out) b = 1 - b;
  }

 private:
  std::shared_ptr<const StreamSource> inner_;
};

std::shared_ptr<const StreamSource> build_source(const StreamSpec& spec, const std::optional<std::uint64_t>& seed);

struct SourceBuilder {
  const std::optional<std::uint64_t>& seed;

  std::shared_ptr<const StreamSource> operator()(const FiniteSpec& s) const {
    return std::make_shared<FiniteSource>(s.bits, s.pad);
  }
  std::shared_ptr<const StreamSource> operator()(const PeriodicSpec& s) const {
    return std::make_shared<PeriodicSource>(s.pattern);
  }
  std::shared_ptr<const StreamSource> operator()(BernoulliSpec s) const {
    if (seed) s.seed = *seed;
    return std::make_shared<BernoulliSource>(s);
  }
  std::shared_ptr<const StreamSource> operator()(BurstSpec s) const {
    if (seed) s.seed = *seed;
    return std::make_shared<BurstSource>(s);
  }
  std::shared_ptr<const StreamSource> operator()(const NegatedSpec& s) const {
    return std::make_shared<NegatedSource>(build_source(*s.inner, seed));
  }
  std::shared_ptr<const StreamSource> operator()(const FileSpec& s) const {
    std::ifstream in(s.path, std::ios::binary);
    if (!in) throw InvalidSpec("cannot open bit file '" + s.path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    BitVector bits;
    try {
      bits = parse_bit_text(text);
    } catch (const ParseError& e) {
      throw InvalidSpec("bit file '" + s.path + "': " + e.what());
    }
    if (bits.empty()) throw InvalidSpec("bit file '" + s.path + "' holds no bits");
    return std::make_shared<FiniteSource>(std::move(bits), 0);
  }
};

std::shared_ptr<const StreamSource> build_source(const StreamSpec& spec, const std::optional<std::uint64_t>& seed) {
  return std::visit(SourceBuilder{seed}, spec.node);
}

StreamSpec with_seed(const StreamSpec& spec, std::uint64_t seed) {
  StreamSpec out = spec;
  if (auto* b = std::get_if<BernoulliSpec>(&out.node)) b->seed = seed;
  if (auto* b = std::get_if<BurstSpec>(&out.node)) b->seed = seed;
  if (auto* n = std::get_if<NegatedSpec>(&out.node)) *n = NegatedSpec{std::make_shared<const StreamSpec>(with_seed(*n->inner, seed))};
  return out;
}

}  // namespace

BitStream from_finite(const BitVector& bits, Bit padding) {
  StreamSpec spec{FiniteSpec{bits, padding}};
  validate(spec);
  return BitStream(std::make_shared<FiniteSource>(bits, padding), std::move(spec));
}

BitStream generate(const StreamSpec& spec) {
  validate(spec);
  return BitStream(build_source(spec, std::nullopt), spec);
}

BitStream generate(const StreamSpec& spec, std::uint64_t seed) {
  validate(spec);
  return BitStream(build_source(spec, seed), with_seed(spec, seed));
}

DensityReport prefix_density(const BitStream& stream, std::uint64_t t) { return prefix_density(stream, t, t); }

DensityReport prefix_density(const BitStream& stream, std::uint64_t t, std::uint64_t tail_start) {
  if (t == 0) throw InvalidArgument("prefix_density needs t >= 1");
  if (tail_start == 0 || tail_start > t) throw InvalidArgument("tail window must satisfy 1 <= tail_start <= t");
  DensityReport report;
  report.t = t;
  report.tail_start = tail_start;

  // Track the running minimum of N_u/u by cross-multiplication.
  std::uint64_t ones = 0;
  std::uint64_t best_ones = 1;
  std::uint64_t best_u = 0;  // 0: unset
  constexpr std::uint64_t kChunk = 1 << 16;
  BitVector buffer;
  for (std::uint64_t first = 1; first <= t; first += kChunk) {
    const std::uint64_t count = std::min(kChunk, t - first + 1);
    buffer.resize(count);
    stream.read(first, buffer);
    for (std::uint64_t k = 0; k < count; ++k) {
      ones += buffer[k];
      const std::uint64_t u = first + k;
      if (u < tail_start) continue;
      if (best_u == 0 || static_cast<unsigned __int128>(ones) * best_u <
                             static_cast<unsigned __int128>(best_ones) * u) {
        best_ones = ones;
        best_u = u;
      }
    }
  }
  report.ones = ones;
  report.density = Rational(BigInt(ones), BigInt(t));
  report.running_inf = Rational(BigInt(best_ones), BigInt(best_u));
  return report;
}

BitStream negate(const BitStream& stream) {
  std::optional<StreamSpec> spec;
  if (stream.spec()) spec = StreamSpec::negated(*stream.spec());
  return BitStream(std::make_shared<NegatedSource>(stream.shared_source()), std::move(spec));
}

std::vector<std::uint64_t> certified_dips(const BurstSpec& spec, std::uint64_t limit) {
  return dip_lengths(spec.growth, std::min(limit, BurstSource::kLimit));
}

BitVector parse_bit_text(std::string_view text) {
  BitVector bits;
  bits.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<Bit>(c - '0'));
    } else if (c != ' ' && c != '\n' && c != '\r' && c != '\t') {
      throw ParseError(std::string("unexpected byte '") + c + "' in bit text", i);
    }
  }
  return bits;
}

}  // namespace frogpred
