#pragma once

#include <cstdint>
#include <initializer_list>

namespace dtm {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a path of indices below `parent`, e.g.
/// derive_seed(master, {layer, clustering}). Depends only on its arguments,
/// never on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Fixed stream labels below a run seed.
namespace seed_stream {
inline constexpr std::uint64_t kSubsample = 1;
inline constexpr std::uint64_t kMbn = 2;
inline constexpr std::uint64_t kSpectral = 3;
inline constexpr std::uint64_t kMonteCarloRun = 4;
}  // namespace seed_stream

}  // namespace dtm
