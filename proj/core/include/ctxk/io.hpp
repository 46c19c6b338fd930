// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// JSON-lines artifact helpers. Every file written by the tool starts with a
// header line {"_meta": {...}} carrying the schema name, schema version,
// config hash and seed. Readers skip header lines, so files without one are
// accepted too.

#ifndef CTXK_IO_HPP_
#define CTXK_IO_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctxk::io {

inline constexpr int kSchemaVersion = 1;

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string meta_header(std::string_view schema, std::string_view config_hash,
                        std::uint64_t seed);
bool is_meta_line(std::string_view line);

// Non-empty, non-header lines of a JSON-lines file.
std::vector<std::string> read_records(const std::string& path);

void write_jsonl(const std::string& path, std::string_view header,
                 const std::vector<std::string>& records);

// Text files (*.txt or any extension) below `path` in sorted order, or
// `path` itself when it is a file.
std::vector<std::string> list_inputs(const std::string& path);

}  // namespace ctxk::io

#endif  // CTXK_IO_HPP_
