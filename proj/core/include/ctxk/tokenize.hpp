// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef CTXK_TOKENIZE_HPP_
#define CTXK_TOKENIZE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxk {

enum class TokenizerMode { kUnicodeWords, kCharacters };

std::string_view to_string(TokenizerMode mode);
std::optional<TokenizerMode> parse_tokenizer_mode(std::string_view s);

struct TokenSpan {
  std::string token;
  // Byte range of the token in the input.
  std::size_t begin = 0;
  std::size_t end = 0;
};

// unicode_words: maximal runs of letters/digits/apostrophes, lowercased;
// every CJK character and every other punctuation character is its own
// token; whitespace is dropped.
// characters: every non-whitespace code point, case preserved.
std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode);
std::vector<TokenSpan> tokenize_spans(std::string_view text,
                                      TokenizerMode mode);

}  // namespace ctxk

#endif  // CTXK_TOKENIZE_HPP_
