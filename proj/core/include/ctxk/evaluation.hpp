// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef CTXK_EVALUATION_HPP_
#define CTXK_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ctxk/instances.hpp"
#include "ctxk/reader.hpp"

namespace ctxk {

inline constexpr const char* kUncategorized = "uncategorized";

struct CategoryScore {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct SeedSummary {
  std::vector<double> per_seed;
  double mean = 0.0;
  // Sample standard deviation; 0 for a single value.
  double std = 0.0;
};

struct EvalReport {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::map<std::string, CategoryScore> per_category;
};

// argmax with ties broken toward the lowest index.
std::size_t predict(std::span<const double> probs);

// Throws std::invalid_argument on an empty dataset.
EvalReport accuracy(const ReaderParams& params,
                    std::span<const McInstance> dataset);
// Same as accuracy(); instances without a category count as
// "uncategorized".
EvalReport per_category(const ReaderParams& params,
                        std::span<const McInstance> dataset);

SeedSummary summarize(std::vector<double> values);
SeedSummary multi_seed(const std::function<double(std::uint64_t)>& run,
                       std::span<const std::uint64_t> seeds);

std::string eval_report_to_json(const EvalReport& report);
// Aligned plain-text table, one row per category plus the overall row.
std::string eval_report_table(const EvalReport& report);

}  // namespace ctxk

#endif  // CTXK_EVALUATION_HPP_
