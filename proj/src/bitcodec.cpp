#include "destim/bitcodec.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace destim {

void FixedPointCodec::validate() const {
  if (!(lo < hi)) throw std::invalid_argument("codec: lo must be below hi");
  if (bits < 1 || bits > 62) throw std::invalid_argument("codec: bits out of range");
}

std::uint64_t encode(double x, const FixedPointCodec& codec) {
  codec.validate();
  if (!std::isfinite(x)) throw std::invalid_argument("encode: non-finite value");
  const double w = codec.width();
  const double cell = std::floor((x - codec.lo) / w);
  const double max_code = static_cast<double>((1ull << codec.bits) - 1);
  if (cell < 0.0) return 0;
  if (cell > max_code) return (1ull << codec.bits) - 1;
  return static_cast<std::uint64_t>(cell);
}

double decode(std::uint64_t code, const FixedPointCodec& codec) {
  codec.validate();
  if (code >= (1ull << codec.bits))
    throw std::out_of_range("decode: code out of range");
  return codec.lo + (static_cast<double>(code) + 0.5) * codec.width();
}

FixedPointCodec default_mean_codec(const ExperimentConfig& config) {
  config.validate();
  const double sigma = std::sqrt(config.sigma2);
  const double guard = 6.0 * sigma / std::sqrt(static_cast<double>(config.n));
  FixedPointCodec codec;
  codec.lo = -1.0 - guard;
  codec.hi = 1.0 + guard;
  const double mn = static_cast<double>(config.m) * config.n;
  codec.bits =
      static_cast<int>(std::ceil(std::log2((codec.hi - codec.lo) * std::sqrt(mn) / sigma))) + 2;
  return codec;
}

void Message::append_bits(std::uint64_t value, int nbits) {
  if (nbits < 1 || nbits > 64) throw std::invalid_argument("append_bits: bad width");
  if (nbits < 64 && (value >> nbits) != 0)
    throw std::invalid_argument("append_bits: value wider than nbits");
  for (int i = nbits - 1; i >= 0; --i) {
    const std::uint64_t bit = (value >> i) & 1u;
    const long long pos = bit_len++;
    const std::size_t word = static_cast<std::size_t>(pos >> 6);
    if (word >= words.size()) words.push_back(0);
    words[word] |= bit << (63 - (pos & 63));
  }
}

std::uint64_t Message::read_bits(long long bit_offset, int nbits) const {
  if (nbits < 1 || nbits > 64) throw std::invalid_argument("read_bits: bad width");
  if (bit_offset < 0 || bit_offset + nbits > bit_len)
    throw std::out_of_range("read_bits: past end of payload");
  std::uint64_t out = 0;
  for (int i = 0; i < nbits; ++i) {
    const long long pos = bit_offset + i;
    const std::uint64_t bit = (words[static_cast<std::size_t>(pos >> 6)] >> (63 - (pos & 63))) & 1u;
    out = (out << 1) | bit;
  }
  return out;
}

void Message::append_run(long long ones, long long total) {
  if (ones < 0 || total < ones) throw std::invalid_argument("append_run: bad counts");
  if (bit_len != 0) throw std::logic_error("append_run: payload not empty");
  const std::size_t nwords = static_cast<std::size_t>((total + 63) >> 6);
  words.assign(nwords, 0);
  long long full = ones >> 6;
  for (long long w = 0; w < full; ++w) words[static_cast<std::size_t>(w)] = ~0ull;
  const int rem = static_cast<int>(ones & 63);
  if (rem > 0) words[static_cast<std::size_t>(full)] = ~0ull << (64 - rem);
  bit_len = total;
}

long long Message::popcount() const {
  long long count = 0;
  for (std::uint64_t w : words) count += std::popcount(w);
  return count;
}

void Transcript::push(Message msg) {
  if (msg.bit_len <= 0) throw std::invalid_argument("transcript: empty payload");
  total_bits += msg.bit_len;
  messages.push_back(std::move(msg));
}

long long transcript_cost(const Transcript& t) { return t.total_bits; }

std::string transcript_debug(const Transcript& t) {
  std::string out;
  char buf[32];
  for (const auto& msg : t.messages) {
    std::snprintf(buf, sizeof buf, "%d,%d,", msg.round, msg.machine_id);
    out += buf;
    const long long nibbles = (msg.bit_len + 3) / 4;
    for (long long q = 0; q < nibbles; ++q) {
      const long long pos = q * 4;
      const int take = static_cast<int>(std::min<long long>(4, msg.bit_len - pos));
      std::uint64_t val = msg.read_bits(pos, take);
      val <<= (4 - take);  // pad the final partial nibble on the right
      out += "0123456789abcdef"[val];
    }
    std::snprintf(buf, sizeof buf, ",%lld\n", msg.bit_len);
    out += buf;
  }
  return out;
}

}  // namespace destim
