#include "taskshift/rng.hpp"

namespace taskshift {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

SeedRecord substream(const SeedRecord& parent, StreamPurpose purpose) noexcept {
  SeedRecord child = parent;
  child.stream_id = hash_combine(parent.stream_id, static_cast<std::uint64_t>(purpose));
  return child;
}

namespace {

std::seed_seq::result_type low32(std::uint64_t x) {
  return static_cast<std::seed_seq::result_type>(x & 0xffffffffULL);
}

std::mt19937_64 make_engine(const SeedRecord& s) {
  const std::uint64_t a = splitmix64(s.base_seed);
  const std::uint64_t b = hash_combine(a, s.stream_id);
  const std::uint64_t c = hash_combine(b, s.draw_index);
  std::seed_seq seq{low32(a), low32(a >> 32), low32(b), low32(b >> 32),
                    low32(c), low32(c >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(const SeedRecord& seed) : seed_(seed), engine_(make_engine(seed)) {}

}  // namespace taskshift
