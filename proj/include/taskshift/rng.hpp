#pragma once

#include <cstdint>
#include <random>

namespace taskshift {

/// Identifies one reproducible random stream. Two records that compare equal
/// produce bit-identical draws within one build.
struct SeedRecord {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t draw_index = 0;

  friend bool operator==(const SeedRecord&, const SeedRecord&) = default;
};

// Independent sub-streams consumed by the samplers.
enum class StreamPurpose : std::uint64_t {
  Design = 1,
  LabelFlips = 2,
  FewShotDesign = 3,
  FewShotNoise = 4,
  Signal = 5,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Order-sensitive combination of 64-bit words.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

SeedRecord substream(const SeedRecord& parent, StreamPurpose purpose) noexcept;

class Rng {
 public:
  explicit Rng(const SeedRecord& seed);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  // true with probability p
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() noexcept { return engine_; }
  const SeedRecord& seed() const noexcept { return seed_; }

 private:
  SeedRecord seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace taskshift
