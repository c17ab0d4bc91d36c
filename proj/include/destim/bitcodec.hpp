#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "destim/core.hpp"

namespace destim {

// Uniform quantizer over [lo, hi] with 2^bits cells. Values outside the
// range saturate; decoding returns cell midpoints.
struct FixedPointCodec {
  double lo = -1.0;
  double hi = 1.0;
  int bits = 1;

  double width() const { return (hi - lo) / static_cast<double>(1ull << bits); }
  void validate() const;
};

std::uint64_t encode(double x, const FixedPointCodec& codec);
double decode(std::uint64_t code, const FixedPointCodec& codec);

// Codec for sample-mean messages: range [-1,1] plus a 6*sigma/sqrt(n) guard
// band, bit width chosen so the per-coordinate squared quantization error
// (w/2)^2 is at most sigma2/(4mn).
FixedPointCodec default_mean_codec(const ExperimentConfig& config);

// One blackboard write. Payload is a packed bit string; machine id and round
// are free metadata and not counted toward communication.
struct Message {
  int machine_id = 0;
  int round = 0;
  std::vector<std::uint64_t> words;
  long long bit_len = 0;

  void append_bits(std::uint64_t value, int nbits);
  std::uint64_t read_bits(long long bit_offset, int nbits) const;
  // Appends `ones` set bits followed by `total - ones` clear bits.
  void append_run(long long ones, long long total);
  long long popcount() const;
};

// Ordered blackboard content; total_bits is the communication cost |Y|.
struct Transcript {
  std::vector<Message> messages;
  long long total_bits = 0;

  void push(Message msg);
};

long long transcript_cost(const Transcript& t);

// Debug text format, one line per message: round,machine_id,bits_hex,bit_len
std::string transcript_debug(const Transcript& t);

}  // namespace destim
