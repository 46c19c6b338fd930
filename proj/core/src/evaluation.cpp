// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ctxk {

std::size_t predict(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

namespace {

void finish(EvalReport& r) {
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.n);
  for (auto& [_, c] : r.per_category) {
    c.accuracy = c.n == 0 ? 0.0 : static_cast<double>(c.correct) / static_cast<double>(c.n);
  }
}

}  // namespace

EvalReport accuracy(const ReaderParams& params, std::span<const McInstance> dataset) {
  if (dataset.empty()) throw std::invalid_argument("accuracy: empty dataset");
  EvalReport r;
  for (const auto& inst : dataset) {
    const auto enc = encode_instance(inst, params);
    const bool hit = predict(softmax(option_scores(enc, params))) == inst.gold;
    auto& cat = r.per_category[inst.category.value_or(kUncategorized)];
    ++r.n;
    ++cat.n;
    if (hit) {
      ++r.correct;
      ++cat.correct;
    }
  }
  finish(r);
  return r;
}

EvalReport per_category(const ReaderParams& params,
                        std::span<const McInstance> dataset) {
  return accuracy(params, dataset);
}

SeedSummary summarize(std::vector<double> values) {
  SeedSummary s;
  s.per_seed = std::move(values);
  if (s.per_seed.empty()) return s;
  double sum = 0.0;
  for (double v : s.per_seed) sum += v;
  s.mean = sum / static_cast<double>(s.per_seed.size());
  if (s.per_seed.size() > 1) {
    double ss = 0.0;
    for (double v : s.per_seed) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.per_seed.size() - 1));
  }
  return s;
}

SeedSummary multi_seed(const std::function<double(std::uint64_t)>& run,
                       std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("multi_seed: no seeds");
  std::vector<double> values;
  for (auto seed : seeds) values.push_back(run(seed));
  return summarize(std::move(values));
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["correct"] = report.correct;
  j["accuracy"] = report.accuracy;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, c] : report.per_category) {
    cats[name] = {{"n", c.n}, {"correct", c.correct}, {"accuracy", c.accuracy}};
  }
  j["per_category"] = std::move(cats);
  return j.dump();
}

std::string eval_report_table(const EvalReport& report) {
  std::size_t width = 8;
  for (const auto& [name, _] : report.per_category) width = std::max(width, name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "category" << "  "
     << std::right << std::setw(6) << "n" << "  " << std::setw(8) << "acc(%)" << '\n';
  auto row = [&](const std::string& name, std::size_t n, double acc) {
    os << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right
       << std::setw(6) << n << "  " << std::setw(8) << std::fixed << std::setprecision(1)
       << acc * 100.0 << '\n';
  };
  for (const auto& [name, c] : report.per_category) row(name, c.n, c.accuracy);
  row("overall", report.n, report.accuracy);
  return os.str();
}

}  // namespace ctxk
