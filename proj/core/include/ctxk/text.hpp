// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// UTF-8 helpers shared by the parser, the extractor and the tokenizer.
// Everything here operates on std::string holding UTF-8 bytes.

#ifndef CTXK_TEXT_HPP_
#define CTXK_TEXT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctxk::text {

// Throws DecodeError with the byte offset of the first invalid sequence.
void validate_utf8(std::string_view s);

// CRLF and lone CR become LF.
std::string normalize_newlines(std::string_view s);

// Decodes the code point starting at `pos` and advances `pos`. Input must be
// valid UTF-8.
char32_t next_code_point(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);
std::size_t code_point_count(std::string_view s);

bool is_space(char32_t cp);
bool is_blank(std::string_view line);

std::string_view trim(std::string_view s);
std::string_view trim_left(std::string_view s);
std::string_view trim_right(std::string_view s);

// Lowercases ASCII, Latin-1, Greek and Cyrillic letters; other code points
// pass through unchanged.
std::string to_lower(std::string_view s);
char32_t to_lower(char32_t cp);

// Replaces every run of whitespace by a single ASCII space and trims.
std::string collapse_whitespace(std::string_view s);

// Splits on '\n'; keeps empty pieces.
std::vector<std::string_view> split_lines(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Ideographs and kana are tokenized one character at a time.
bool is_cjk(char32_t cp);

// Drops trailing ASCII and CJK punctuation.
std::string_view strip_trailing_punct(std::string_view s);

}  // namespace ctxk::text

#endif  // CTXK_TEXT_HPP_
