#include "taskdecomp/png.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>
#include <string>

namespace taskdecomp {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
  put_u32(out, std::uint32_t(data.size()));
  std::size_t crc_begin = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + crc_begin, uInt(out.size() - crc_begin));
  put_u32(out, crc);
}

}  // namespace

std::vector<std::uint8_t> png_encode(int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != std::size_t(width) * std::size_t(height) * 3)
    throw std::invalid_argument("png_encode: raster size mismatch");

  // Filter byte 0 in front of every scanline.
  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(height) * (std::size_t(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = rgb.data() + std::size_t(y) * width * 3;
    raw.insert(raw.end(), row, row + std::size_t(width) * 3);
  }

  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png_encode: zlib compression failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out(kPngSignature, kPngSignature + 8);
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, std::uint32_t(width));
  put_u32(ihdr, std::uint32_t(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

DecodedPng png_decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
    throw std::runtime_error("png_decode: not a PNG stream");

  DecodedPng png;
  std::vector<std::uint8_t> idat;
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t len = get_u32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error("png_decode: truncated chunk");
    std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
    const std::uint8_t* data = bytes.data() + pos + 8;
    if (type == "IHDR") {
      png.width = int(get_u32(data));
      png.height = int(get_u32(data + 4));
      if (data[8] != 8 || data[9] != 2 || data[12] != 0)
        throw std::runtime_error("png_decode: unsupported PNG variant");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (png.width <= 0 || png.height <= 0) throw std::runtime_error("png_decode: missing IHDR");

  std::size_t stride = std::size_t(png.width) * 3 + 1;
  std::vector<std::uint8_t> raw(stride * png.height);
  uLongf raw_len = uLongf(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw std::runtime_error("png_decode: zlib decompression failed");

  png.rgb.resize(std::size_t(png.width) * png.height * 3);
  for (int y = 0; y < png.height; ++y) {
    if (raw[y * stride] != 0) throw std::runtime_error("png_decode: unsupported scanline filter");
    std::memcpy(png.rgb.data() + std::size_t(y) * png.width * 3, raw.data() + y * stride + 1,
                std::size_t(png.width) * 3);
  }
  return png;
}

}  // namespace taskdecomp
