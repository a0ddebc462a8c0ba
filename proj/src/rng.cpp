#include "plnc/rng.hpp"

namespace plnc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t role) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
  return splitmix64(h ^ (role << 56 | role));
}

}  // namespace plnc
