#include "mbt/random.hpp"

namespace mbt
{

  namespace
  {
    std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
    std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }
  } // namespace

  RandomSource::RandomSource(std::uint64_t master_seed, std::size_t width, std::size_t first_stream)
      : master_seed_(master_seed), first_stream_(first_stream), streams_(width)
  {
    reseed(0);
  }

  void RandomSource::reseed(std::uint64_t episode)
  {
    for ( std::size_t i = 0; i < streams_.size(); ++i ) {
      const std::uint64_t stream = first_stream_ + i;
      std::seed_seq seq{lo32(master_seed_), hi32(master_seed_), lo32(episode),
                        hi32(episode),      lo32(stream),       hi32(stream)};
      streams_[i].engine.seed(seq);
      streams_[i].gauss.reset();
    }
  }

  std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag)
  {
    std::seed_seq seq{lo32(seed), hi32(seed), lo32(tag), hi32(tag), 0x6d627473u};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  }

} // namespace mbt
