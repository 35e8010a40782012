#pragma once

#include <cstdint>
#include <vector>

namespace taskdecomp {

// Minimal PNG codec for 8-bit RGB rasters. Encoding always emits one IDAT
// chunk with zlib-compressed, filter-0 scanlines; decoding accepts exactly
// that subset (color type 2, bit depth 8).
std::vector<std::uint8_t> png_encode(int width, int height, const std::vector<std::uint8_t>& rgb);

struct DecodedPng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

DecodedPng png_decode(const std::vector<std::uint8_t>& bytes);

}  // namespace taskdecomp
