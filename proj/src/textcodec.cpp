// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/textcodec.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "geodecoder/error.hpp"

namespace geodecoder::text {

Vocabulary::Vocabulary() {
  by_byte_.fill(-1);
  for (auto s : kSpecialTokens) tokens_.emplace_back(s);
}

void Vocabulary::add(char c) {
  auto& slot = by_byte_[static_cast<unsigned char>(c)];
  if (slot >= 0) return;
  slot = size();
  tokens_.emplace_back(1, c);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, std::size_t max_vocab) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: corpus is empty");
  Vocabulary v;
  for (const auto& s : corpus) {
    for (char c : s) {
      v.add(c);
      if (static_cast<std::size_t>(v.size()) > max_vocab) {
        throw std::invalid_argument("build_vocab: corpus needs more than max_vocab = " + std::to_string(max_vocab) +
                                    " tokens");
      }
    }
  }
  return v;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::id_of(char c) const {
  const int id = by_byte_[static_cast<unsigned char>(c)];
  if (id < 0) return std::nullopt;
  return id;
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  TokenSeq out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int id = by_byte_[static_cast<unsigned char>(text[i])];
    if (id < 0) {
      char hex[8];
      std::snprintf(hex, sizeof hex, "0x%02x", static_cast<unsigned char>(text[i]));
      throw ParseError(std::string("unknown character '") + text[i] + "' (" + hex + ")", i);
    }
    out.push_back(id);
  }
  return out;
}

std::string Vocabulary::decode(const TokenSeq& ids) const {
  std::string out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    const std::string& t = token(id);
    if (!is_special(id)) out += t;
  }
  return out;
}

std::string Vocabulary::to_file() const {
  std::string out;
  for (const auto& t : tokens_) {
    for (char c : t) {
      if (c == '\n') {
        out += "\\n";
      } else if (c == '\\') {
        out += "\\\\";
      } else {
        out += c;
      }
    }
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_file(std::string_view contents) {
  Vocabulary v;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < contents.size()) {
    const std::size_t eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) throw ParseError("vocabulary: last line lacks a newline", contents.size());
    const std::string_view raw = contents.substr(pos, eol - pos);
    std::string tok;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '\\') {
        tok += raw[i];
        continue;
      }
      if (i + 1 >= raw.size()) throw ParseError("vocabulary: dangling escape", pos + i);
      const char e = raw[++i];
      if (e == 'n') {
        tok += '\n';
      } else if (e == '\\') {
        tok += '\\';
      } else {
        throw ParseError("vocabulary: unknown escape", pos + i);
      }
    }
    if (line_no < kNumSpecials) {
      if (tok != kSpecialTokens[static_cast<std::size_t>(line_no)])
        throw ParseError("vocabulary: line " + std::to_string(line_no) + " must be " + std::string(kSpecialTokens[line_no]), pos);
    } else {
      if (tok.size() != 1) throw ParseError("vocabulary: token must be a single character", pos);
      if (v.id_of(tok[0])) throw ParseError("vocabulary: duplicate token", pos);
      v.add(tok[0]);
    }
    ++line_no;
    pos = eol + 1;
  }
  if (line_no < kNumSpecials) throw ParseError("vocabulary: missing special tokens", contents.size());
  return v;
}

// ---- coordinates -------------------------------------------------------------

std::string format_coord(const geo::GeoPoint& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f", p.lng, p.lat);
  return buf;
}

namespace {

// -?digits.dddddd
double parse_fixed6(std::string_view text, std::size_t& pos) {
  const std::size_t start = pos;
  if (pos < text.size() && text[pos] == '-') ++pos;
  const std::size_t int_start = pos;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  if (pos == int_start) throw ParseError("coordinate: expected digits", pos);
  if (pos >= text.size() || text[pos] != '.') throw ParseError("coordinate: expected '.'", pos);
  ++pos;
  for (int i = 0; i < 6; ++i, ++pos)
    if (pos >= text.size() || text[pos] < '0' || text[pos] > '9') throw ParseError("coordinate: expected six decimals", pos);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, v);
  if (ec != std::errc() || ptr != text.data() + pos) throw ParseError("coordinate: bad number", start);
  return v;
}

int parse_uint(std::string_view text, std::size_t& pos) {
  const std::size_t start = pos;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && pos - start < 4) ++pos;
  if (pos == start) throw ParseError("pixel: expected digits", pos);
  int v = 0;
  std::from_chars(text.data() + start, text.data() + pos, v);
  return v;
}

void expect(std::string_view text, std::size_t& pos, std::string_view lit, const char* what) {
  if (text.substr(pos, lit.size()) != lit) throw ParseError(std::string(what) + ": expected '" + std::string(lit) + "'", pos);
  pos += lit.size();
}

}  // namespace

geo::GeoPoint parse_coord(std::string_view text) {
  std::size_t pos = 0;
  geo::GeoPoint p;
  p.lng = parse_fixed6(text, pos);
  expect(text, pos, ",", "coordinate");
  p.lat = parse_fixed6(text, pos);
  if (pos != text.size()) throw ParseError("coordinate: trailing characters", pos);
  if (!geo::is_valid(p)) throw ParseError("coordinate: out of range", 0);
  return p;
}

std::string format_pixel(const geo::PixelCoord& px) {
  const double x = std::floor(px.x + 0.5);
  const double y = std::floor(px.y + 0.5);
  if (!(x >= 0 && x <= 9999 && y >= 0 && y <= 9999))
    throw std::invalid_argument("format_pixel: rounded coordinates must lie in 0..9999");
  return "x=" + std::to_string(static_cast<int>(x)) + ",y=" + std::to_string(static_cast<int>(y));
}

geo::PixelCoord parse_pixel(std::string_view text) {
  std::size_t pos = 0;
  expect(text, pos, "x=", "pixel");
  const int x = parse_uint(text, pos);
  expect(text, pos, ",y=", "pixel");
  const int y = parse_uint(text, pos);
  if (pos != text.size()) throw ParseError("pixel: trailing characters", pos);
  return {static_cast<double>(x), static_cast<double>(y)};
}

}  // namespace geodecoder::text
