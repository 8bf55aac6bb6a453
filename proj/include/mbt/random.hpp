#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mbt
{

  /// One independent generator per trajectory slot.
  ///
  /// Stream `k` of episode `e` is seeded from (master_seed, e, k) only, so a
  /// width-N source and N width-1 sources with `first_stream = 0..N-1` emit
  /// identical per-slot sequences. Every sampler in the library draws from
  /// the slot of the trajectory it is advancing and nothing else.
  class RandomSource
  {
  public:
    RandomSource(std::uint64_t master_seed, std::size_t width, std::size_t first_stream = 0);

    /// Re-seed every slot for the given episode.
    void reseed(std::uint64_t episode);

    double uniform(std::size_t slot) { return canonical_(streams_[slot].engine); }
    double normal(std::size_t slot) { return streams_[slot].gauss(streams_[slot].engine); }
    int uniform_int(std::size_t slot, int lo, int hi)
    {
      return std::uniform_int_distribution<int>(lo, hi)(streams_[slot].engine);
    }

    std::size_t width() const noexcept { return streams_.size(); }
    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::size_t first_stream() const noexcept { return first_stream_; }

  private:
    struct Stream
    {
      std::mt19937_64 engine;
      std::normal_distribution<double> gauss;
    };

    std::uint64_t master_seed_;
    std::size_t first_stream_;
    std::vector<Stream> streams_;
    std::uniform_real_distribution<double> canonical_{0.0, 1.0};
  };

  /// Derive an unrelated master seed from `seed` and a purpose tag, e.g. to
  /// keep evaluation episodes disjoint from training episodes.
  std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

} // namespace mbt
