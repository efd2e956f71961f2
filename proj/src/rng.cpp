#include "qpt/rng.hpp"

namespace qpt {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t root, std::string_view label, std::uint64_t index) {
  // FNV-1a over the label, then mixed with the root seed and index.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return Rng(mix64(mix64(root) ^ mix64(h) ^ mix64(index + 0x5851F42D4C957F2DULL)));
}

}  // namespace qpt
