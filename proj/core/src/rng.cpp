#include "snakesim/rng.hpp"

#include <array>

namespace snakesim {

namespace {
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t replicate,
                            std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed),      hi(seed),      lo(replicate), hi(replicate),
                    lo(stream),    hi(stream),    0x5eedu};
  return std::mt19937_64(seq);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream)
    : engine_(make_engine(seed, replicate, stream)) {}

}  // namespace snakesim
