#include "tsd/rng.hpp"

#include <cmath>

namespace tsd {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream_key, std::uint64_t trial_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_key), static_cast<std::uint32_t>(stream_key >> 32),
                    static_cast<std::uint32_t>(trial_index), static_cast<std::uint32_t>(trial_index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_key, std::uint64_t trial_index)
    : engine_(seeded_engine(master_seed, stream_key, trial_index)), normal_(0.0, std::sqrt(0.5)) {}

std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t p : parts) {
    for (int b = 0; b < 8; ++b) {
      h ^= (p >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace tsd
