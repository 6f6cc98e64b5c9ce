#include "mixstat/rng.hpp"

namespace mixstat {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(const StreamKey& key) {
  std::uint64_t k = mix64(key.seed + 0x632BE59BD9B4E019ULL);
  k = mix64(k ^ (key.replication * 0xD6E8FEB86659FD93ULL + 0x8CB92BA72F3D8DD7ULL));
  k = mix64(k ^ (key.stream * 0xA0761D6478BD642FULL + 0xE7037ED1A0B428DBULL));
  key_ = k;
}

CounterRng CounterRng::split(std::uint64_t child) const {
  CounterRng out;
  out.key_ = mix64(key_ ^ mix64(child + 0x2545F4914F6CDD1DULL));
  return out;
}

}  // namespace mixstat
