// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geodecoder/geo.hpp"

namespace geodecoder::text {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kSep = 3;
inline constexpr int kNumSpecials = 4;
inline constexpr std::size_t kDefaultMaxVocab = 512;
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens = {"<pad>", "<bos>", "<eos>", "<sep>"};

// Character-level vocabulary. Ids 0..3 are the fixed specials; every other
// token is a single byte, numbered by first appearance in the corpus.
class Vocabulary {
 public:
  Vocabulary();

  /// Throws std::invalid_argument on an empty corpus or when the result would exceed `max_vocab`.
  static Vocabulary build(const std::vector<std::string>& corpus, std::size_t max_vocab = kDefaultMaxVocab);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool is_special(TokenId id) const { return id >= 0 && id < kNumSpecials; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> id_of(char c) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Throws ParseError naming the unknown character and its byte offset.
  TokenSeq encode(std::string_view text) const;
  /// Specials decode to the empty string. Throws std::out_of_range on an invalid id.
  std::string decode(const TokenSeq& ids) const;

  /// One token per line, line number = id. Newline and backslash are escaped.
  std::string to_file() const;
  /// Throws ParseError on malformed or duplicate lines.
  static Vocabulary from_file(std::string_view contents);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(char c);

  std::vector<std::string> tokens_;
  std::array<int, 256> by_byte_;
};

/// "%.6f,%.6f", longitude first.
std::string format_coord(const geo::GeoPoint& p);
/// Throws ParseError unless the text is exactly two fixed-point numbers with six decimals.
geo::GeoPoint parse_coord(std::string_view text);

/// "x=<int>,y=<int>" with half-up rounding. Throws std::invalid_argument outside 0..9999.
std::string format_pixel(const geo::PixelCoord& px);
/// Throws ParseError on malformed text.
geo::PixelCoord parse_pixel(std::string_view text);

}  // namespace geodecoder::text
