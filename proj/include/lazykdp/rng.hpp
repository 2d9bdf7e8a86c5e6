#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace lazykdp
{
/// SplitMix64 finalizer; used to derive independent substream seeds.
inline uint64_t MixBits(uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purpose tags so the same (seed, ordinal) pair yields unrelated streams in
/// different subsystems.
enum class StreamDomain : uint64_t
{
  kEdgeGeneration = 1,
  kPerturbation = 2,
  kPlannerSelection = 3,
  kPlannerCandidates = 4,
  kPlannerLazyCoin = 5,
  kPlannerPropagation = 6,
  kProblems = 7,
  kTestFixture = 99,
};

/// Deterministic random stream.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// derives doubles and bounded integers from raw bits itself so results do not
/// depend on the standard library's distribution implementations.
class Rng
{
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextBits() { return engine_(); }

  /// Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double Uniform(const double lo, const double hi)
  {
    return lo + (hi - lo) * Uniform();
  }

  /// Uniform integer in [lo, hi], unbiased.
  int64_t UniformInt(const int64_t lo, const int64_t hi)
  {
    if (hi < lo)
    {
      throw std::invalid_argument("UniformInt: hi < lo");
    }
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1u;
    if (span == 0u)
    {
      return static_cast<int64_t>(engine_());
    }
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
    uint64_t draw = engine_();
    while (draw >= limit)
    {
      draw = engine_();
    }
    return lo + static_cast<int64_t>(draw % span);
  }

  bool Bernoulli(const double p) { return Uniform() < p; }

private:
  std::mt19937_64 engine_;
};

/// Independent substream for (seed, domain, ordinal). Results never depend
/// on which thread consumes which ordinal.
inline Rng Substream(const uint64_t seed, const StreamDomain domain,
                     const uint64_t ordinal)
{
  uint64_t h = MixBits(seed);
  h = MixBits(h ^ static_cast<uint64_t>(domain));
  h = MixBits(h ^ ordinal);
  return Rng(h);
}
}  // namespace lazykdp
