// Copyright 2026 The pstyle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pstyle/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P',  'N',  'G',
                                                       '\r', '\n', 0x1a, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint8_t paeth(std::uint8_t a, std::uint8_t b, std::uint8_t c) {
  const int p = int{a} + int{b} - int{c};
  const int pa = std::abs(p - int{a});
  const int pb = std::abs(p - int{b});
  const int pc = std::abs(p - int{c});
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageBuffer from_bytes(std::size_t w, std::size_t h, std::size_t channels,
                       const std::uint8_t* raster) {
  ImageBuffer img(w, h, channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = raster[i] / 255.0;
  }
  return img;
}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = kPngSignature.size();
  std::size_t width = 0, height = 0, channels = 0;
  bool seen_header = false, seen_end = false;
  std::vector<std::uint8_t> compressed;

  while (!seen_end) {
    if (pos + 12 > bytes.size()) throw DecodeError("PNG stream truncated");
    const std::uint32_t length = read_be32(&bytes[pos]);
    const std::uint8_t* type = &bytes[pos + 4];
    if (pos + 12 + std::size_t{length} > bytes.size()) {
      throw DecodeError("PNG chunk extends past end of stream");
    }
    const std::uint8_t* body = &bytes[pos + 8];
    const std::uint32_t stored_crc = read_be32(body + length);
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(::crc32(0L, type, 4), body, length));
    if (crc != stored_crc) throw DecodeError("PNG chunk CRC mismatch");

    const std::string tag(reinterpret_cast<const char*>(type), 4);
    if (tag == "IHDR") {
      if (length != 13) throw DecodeError("PNG IHDR has wrong length");
      width = read_be32(body);
      height = read_be32(body + 4);
      const std::uint8_t depth = body[8], color = body[9];
      const std::uint8_t interlace = body[12];
      if (depth != 8) throw FormatError("only 8-bit PNG is supported");
      if (interlace != 0) throw FormatError("interlaced PNG is not supported");
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        throw FormatError("PNG color type " + std::to_string(color) +
                          " is not supported (gray or RGB only)");
      }
      if (width == 0 || height == 0) throw DecodeError("PNG has zero size");
      seen_header = true;
    } else if (tag == "IDAT") {
      compressed.insert(compressed.end(), body, body + length);
    } else if (tag == "IEND") {
      seen_end = true;
    }
    pos += 12 + std::size_t{length};
  }
  if (!seen_header) throw DecodeError("PNG is missing IHDR");

  const std::size_t stride = width * channels;
  std::vector<std::uint8_t> filtered(height * (stride + 1));
  uLongf out_len = static_cast<uLongf>(filtered.size());
  const int rc = ::uncompress(filtered.data(), &out_len, compressed.data(),
                              static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || out_len != filtered.size()) {
    throw DecodeError("PNG image data failed to inflate");
  }

  std::vector<std::uint8_t> raster(height * stride);
  const std::size_t bpp = channels;
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t filter = filtered[y * (stride + 1)];
    const std::uint8_t* src = &filtered[y * (stride + 1) + 1];
    std::uint8_t* row = &raster[y * stride];
    const std::uint8_t* prev = y ? &raster[(y - 1) * stride] : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const std::uint8_t a = i >= bpp ? row[i - bpp] : 0;
      const std::uint8_t b = prev ? prev[i] : 0;
      const std::uint8_t c = (prev && i >= bpp) ? prev[i - bpp] : 0;
      std::uint8_t pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = static_cast<std::uint8_t>((int{a} + int{b}) / 2); break;
        case 4: pred = paeth(a, b, c); break;
        default: throw DecodeError("PNG row uses unknown filter type");
      }
      row[i] = static_cast<std::uint8_t>(src[i] + pred);
    }
  }
  return from_bytes(width, height, channels, raster.data());
}

// Binary PNM (P5/P6) header: magic, width, height, maxval, one whitespace.
ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes) {
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw DecodeError("PNM header truncated or malformed");
    }
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      ++pos;
    }
    return value;
  };
  const std::size_t width = next_number();
  const std::size_t height = next_number();
  const std::size_t maxval = next_number();
  if (maxval != 255) throw FormatError("only 8-bit PNM (maxval 255) is supported");
  if (width == 0 || height == 0) throw DecodeError("PNM has zero size");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw DecodeError("PNM header truncated");
  }
  ++pos;
  const std::size_t need = width * height * channels;
  if (bytes.size() - pos < need) throw DecodeError("PNM raster truncated");
  return from_bytes(width, height, channels, &bytes[pos]);
}

std::vector<std::uint8_t> raster_bytes(const ImageBuffer& img) {
  std::vector<std::uint8_t> raster(img.data.size());
  std::transform(img.data.begin(), img.data.end(), raster.begin(), to_byte);
  return raster;
}

void append_chunk(std::vector<std::uint8_t>& out, const char* tag,
                  const std::vector<std::uint8_t>& body) {
  append_be32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), tag, tag + 4);
  out.insert(out.end(), body.begin(), body.end());
  const auto crc = ::crc32(0L, &out[type_pos],
                           static_cast<uInt>(4 + body.size()));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  const auto raster = raster_bytes(img);
  const std::size_t stride = img.width * img.channels;
  std::vector<std::uint8_t> filtered;
  filtered.reserve(img.height * (stride + 1));
  for (std::size_t y = 0; y < img.height; ++y) {
    filtered.push_back(0);
    filtered.insert(filtered.end(), raster.begin() + y * stride,
                    raster.begin() + (y + 1) * stride);
  }
  uLongf comp_len = ::compressBound(static_cast<uLong>(filtered.size()));
  std::vector<std::uint8_t> compressed(comp_len);
  if (::compress2(compressed.data(), &comp_len, filtered.data(),
                  static_cast<uLong>(filtered.size()), 9) != Z_OK) {
    throw IoError("PNG deflate failed");
  }
  compressed.resize(comp_len);

  std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
  std::vector<std::uint8_t> header;
  append_be32(header, static_cast<std::uint32_t>(img.width));
  append_be32(header, static_cast<std::uint32_t>(img.height));
  header.push_back(8);
  header.push_back(img.channels == 3 ? 2 : 0);
  header.push_back(0);
  header.push_back(0);
  header.push_back(0);
  append_chunk(out, "IHDR", header);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") +
                             "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto raster = raster_bytes(img);
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

}  // namespace

void ImageBuffer::validate() const {
  if (channels != 1 && channels != 3) {
    throw ShapeError("image must have 1 or 3 channels, got " +
                     std::to_string(channels));
  }
  if (data.size() != width * height * channels) {
    throw ShapeError("image data length " + std::to_string(data.size()) +
                     " does not match " + std::to_string(width) + "x" +
                     std::to_string(height) + "x" + std::to_string(channels));
  }
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ShapeError("image value outside [0,1]: " + std::to_string(v));
    }
  }
}

std::uint8_t to_byte(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

ImageBuffer decode_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= kPngSignature.size() &&
      std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  throw FormatError("unrecognized image format (expected PNG, PPM P6 or PGM P5)");
}

ImageBuffer read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_image(const ImageBuffer& img,
                                       ImageFormat format) {
  if (img.channels != 1 && img.channels != 3) {
    throw ShapeError("cannot encode an image with " +
                     std::to_string(img.channels) + " channels");
  }
  if (img.data.size() != img.width * img.height * img.channels) {
    throw ShapeError("image data length does not match its dimensions");
  }
  switch (format) {
    case ImageFormat::kPng:
      return encode_png(img);
    case ImageFormat::kPpm:
      if (img.channels != 3) throw FormatError("PPM output needs an RGB image");
      return encode_pnm(img);
    case ImageFormat::kPgm:
      if (img.channels != 1) throw FormatError("PGM output needs a gray image");
      return encode_pnm(img);
  }
  throw FormatError("unknown image format");
}

void write_image(const ImageBuffer& img, const std::filesystem::path& path,
                 ImageFormat format) {
  const auto bytes = encode_image(img, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing image " + path.string());
}

ImageFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return ImageFormat::kPng;
  if (ext == ".ppm") return ImageFormat::kPpm;
  if (ext == ".pgm") return ImageFormat::kPgm;
  throw FormatError("cannot infer image format from extension '" + ext + "'");
}

Tensor to_tensor(const ImageBuffer& img) {
  const std::size_t c = img.channels, h = img.height, w = img.width;
  Tensor t({1, c, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) t.at(0, ch, y, x) = img.at(x, y, ch);
  return t;
}

ImageBuffer from_tensor(const Tensor& t) {
  if (t.rank() != 4 || t.dim(0) != 1 || (t.dim(1) != 1 && t.dim(1) != 3)) {
    throw ShapeError("from_tensor expects [1,1|3,H,W], got " +
                     shape_str(t.shape()));
  }
  const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
  ImageBuffer img(w, h, c);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = t.at(0, ch, y, x);
        img.at(x, y, ch) = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
      }
  return img;
}

}  // namespace pstyle
