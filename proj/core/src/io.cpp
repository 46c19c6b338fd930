// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/text.hpp"

namespace ctxk::io {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(path, "write failed");
}

std::string meta_header(std::string_view schema, std::string_view config_hash,
                        std::uint64_t seed) {
  nlohmann::json meta;
  meta["schema"] = std::string(schema);
  meta["version"] = kSchemaVersion;
  meta["config_hash"] = std::string(config_hash);
  meta["seed"] = seed;
  nlohmann::json j;
  j["_meta"] = std::move(meta);
  return j.dump();
}

bool is_meta_line(std::string_view line) {
  line = text::trim_left(line);
  return line.rfind("{\"_meta\"", 0) == 0;
}

std::vector<std::string> read_records(const std::string& path) {
  const std::string body = read_file(path);
  std::vector<std::string> out;
  for (std::string_view line : text::split_lines(body)) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty() || is_meta_line(line)) continue;
    out.emplace_back(line);
  }
  return out;
}

void write_jsonl(const std::string& path, std::string_view header,
                 const std::vector<std::string>& records) {
  std::string body;
  if (!header.empty()) {
    body.append(header);
    body.push_back('\n');
  }
  for (const auto& r : records) {
    body.append(r);
    body.push_back('\n');
  }
  write_file(path, body);
}

std::vector<std::string> list_inputs(const std::string& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {path};
  if (!fs::is_directory(path, ec)) throw IoError(path, "no such file or directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".txt" || ext == ".script" || ext == ".fountain") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace ctxk::io
