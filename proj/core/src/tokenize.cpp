// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/tokenize.hpp"

#include "ctxk/text.hpp"

namespace ctxk {

std::string_view to_string(TokenizerMode mode) {
  return mode == TokenizerMode::kCharacters ? "characters" : "unicode_words";
}

std::optional<TokenizerMode> parse_tokenizer_mode(std::string_view s) {
  if (s == "unicode_words") return TokenizerMode::kUnicodeWords;
  if (s == "characters") return TokenizerMode::kCharacters;
  return std::nullopt;
}

namespace {

bool is_punct_block(char32_t cp) {
  return (cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F && cp != 0x2019) ||
         (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9') || cp == '\'';
  }
  if (cp == 0x2019) return true;
  return !is_punct_block(cp) && !text::is_cjk(cp);
}

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view s, TokenizerMode mode) {
  std::vector<TokenSpan> out;
  std::size_t pos = 0;
  std::size_t word_begin = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (word_begin == std::string_view::npos) return;
    out.push_back({text::to_lower(s.substr(word_begin, end - word_begin)),
                   word_begin, end});
    word_begin = std::string_view::npos;
  };
  while (pos < s.size()) {
    const std::size_t start = pos;
    const char32_t cp = text::next_code_point(s, pos);
    if (text::is_space(cp)) {
      flush(start);
      continue;
    }
    if (mode == TokenizerMode::kCharacters) {
      out.push_back({std::string(s.substr(start, pos - start)), start, pos});
      continue;
    }
    if (is_word_char(cp)) {
      if (word_begin == std::string_view::npos) word_begin = start;
      continue;
    }
    flush(start);
    out.push_back({text::to_lower(s.substr(start, pos - start)), start, pos});
  }
  flush(s.size());
  return out;
}

std::vector<std::string> tokenize(std::string_view s, TokenizerMode mode) {
  std::vector<std::string> out;
  for (auto& span : tokenize_spans(s, mode)) out.push_back(std::move(span.token));
  return out;
}

}  // namespace ctxk
