#pragma once

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mpmg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds a list of words into one seed; order matters.
constexpr std::uint64_t MixSeed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = SplitMix64(h ^ SplitMix64(w));
  return h;
}

// FNV-1a, used to give named entities (cells, streams) stable ids.
constexpr std::uint64_t HashName(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t DoubleBits(double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof bits);
  return bits;
}

}  // namespace mpmg
