// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <charconv>

#include "geodecoder/error.hpp"
#include "geodecoder/render.hpp"

namespace geodecoder::render {

std::string write_ppm(const Raster& raster) {
  std::string out = "P6\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(raster.pixels().data()), raster.pixels().size());
  return out;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("ppm: expected whitespace", pos_);
  }

  int number() {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError("ppm: expected a decimal number", start);
    int v = 0;
    auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, v);
    if (ec != std::errc() || ptr != bytes_.data() + pos_) throw ParseError("ppm: number out of range", start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Raster read_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P6") throw ParseError("ppm: missing 'P6' magic", 0);
  HeaderReader h(bytes);
  h.advance(2);
  h.skip_space();
  const std::size_t width_at = h.pos();
  const int width = h.number();
  h.skip_space();
  const int height = h.number();
  h.skip_space();
  const std::size_t maxval_at = h.pos();
  const int maxval = h.number();
  if (maxval != 255) throw ParseError("ppm: maxval must be 255", maxval_at);
  if (width <= 0 || height <= 0) throw ParseError("ppm: dimensions must be positive", width_at);
  if (h.pos() >= bytes.size() || !is_space(bytes[h.pos()])) throw ParseError("ppm: expected one whitespace byte after maxval", h.pos());
  h.advance(1);
  const std::size_t payload = static_cast<std::size_t>(width) * height * 3;
  const std::size_t available = bytes.size() - h.pos();
  if (available < payload) {
    throw ParseError("ppm: truncated payload, expected " + std::to_string(payload) + " bytes", bytes.size());
  }
  if (available > payload) throw ParseError("ppm: trailing bytes after payload", h.pos() + payload);
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(h.pos()), bytes.end());
  return Raster::from_pixels(width, height, std::move(pixels));
}

}  // namespace geodecoder::render
