// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Training regimes: hard-label training, two-stage fine-tuning, and the
// multi-teacher soft-label student.

#ifndef CTXK_TRAINER_HPP_
#define CTXK_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxk/evaluation.hpp"
#include "ctxk/instances.hpp"
#include "ctxk/reader.hpp"

namespace ctxk {

enum class LabelKind { kSoft, kHard };
enum class Schedule { kJoint, kSeparate };

struct TrainConfig {
  double lambda = 0.5;
  int epochs_stage1 = 1;
  int epochs_stage2 = 8;
  // Epochs for each teacher; negative means epochs_stage1.
  int teacher_epochs = -1;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  LabelKind stage2_labels = LabelKind::kSoft;
  bool include_v_in_stage1 = true;
  Schedule schedule = Schedule::kJoint;
  // Extra V-only pass over each teacher before it labels anything.
  bool teacher_v_finetune = false;
  int dim = 64;
  double init_scale = 0.05;
  TokenizerMode tokenizer = TokenizerMode::kUnicodeWords;
  std::size_t threads = 1;

  // Throws std::invalid_argument.
  void validate() const;
  int effective_teacher_epochs() const {
    return teacher_epochs < 0 ? epochs_stage1 : teacher_epochs;
  }
};

// Canonical JSON of the config and its FNV-1a hash (hex).
std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(std::string_view text);
std::string config_hash(std::string_view canonical_json);

struct DatasetBundle {
  std::vector<McInstance> V;
  std::vector<std::vector<McInstance>> W;
  std::vector<std::string> weak_names;
  std::vector<McInstance> dev;
  std::vector<McInstance> test;

  // Throws FormatError on duplicate ids across V and W.
  void validate() const;
  std::vector<McInstance> weak_union() const;
};

// Reads bundle.json (lists V, W_i, dev, test files relative to it).
DatasetBundle load_bundle(const std::string& manifest_path);
void save_bundle(const std::string& dir, const DatasetBundle& bundle,
                 const std::string& header_json);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// Mini-batch gradient descent on the mean cross-entropy against `labels`.
// The instance order of every epoch is a seeded shuffle derived from
// (cfg.seed, stream).
ReaderParams train_on(std::span<const McInstance> data,
                      std::span<const LabelVector> labels, ReaderParams params,
                      const TrainConfig& cfg, int epochs,
                      std::string_view stream, TrainLog* log = nullptr);

// L1 (one-hot) training. Throws std::invalid_argument on empty data and
// NumericFault on a non-finite loss.
ReaderParams train_hard(std::span<const McInstance> data, ReaderParams params,
                        const TrainConfig& cfg, int epochs,
                        std::string_view stream = "hard",
                        TrainLog* log = nullptr);

// Teacher i trains on V u W_i (W_i alone when V is excluded from stage 1).
std::vector<ReaderParams> train_teachers(const DatasetBundle& bundle,
                                         const ReaderParams& init,
                                         const TrainConfig& cfg);

using SoftLabelMap = std::map<std::string, LabelVector>;

// V:   s = lambda h + (1 - lambda) mean_j p_Tj
// W_i: s = lambda h + (1 - lambda) p_Ti
SoftLabelMap soft_labels(const DatasetBundle& bundle,
                         std::span<const ReaderParams> teachers, double lambda);

LabelVector mix_soft_label(std::size_t options, std::size_t gold, double lambda,
                           std::span<const std::vector<double>> teacher_probs);

struct StudentResult {
  ReaderParams stage1;
  ReaderParams final;
};

StudentResult train_student(const DatasetBundle& bundle, const SoftLabelMap& soft,
                            const ReaderParams& init, const TrainConfig& cfg);

enum class Preset {
  kBaselineVOnly,
  kSingleWeakTwoStage,
  kCombinedTwoStage,
  kTeacherStudentHard,
  kTeacherStudentSoft,
  kSeparateTraining,
  kNoContextAblation,
  kNoVStage1Ablation,
};

std::string_view to_string(Preset p);
std::optional<Preset> parse_preset(std::string_view s);
std::vector<std::string> preset_names();

// Empties the documents of every weak instance.
DatasetBundle strip_weak_contexts(DatasetBundle bundle);

struct RowScore {
  std::string row;
  double dev = 0.0;
  double test = 0.0;
};

struct ReportRow {
  std::string row;
  SeedSummary dev;
  SeedSummary test;
};

struct PipelineReport {
  std::string preset;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  // In run order; the last row is the preset's final model.
  std::vector<ReportRow> rows;

  const ReportRow& final_row() const { return rows.back(); }
  const ReportRow* find(std::string_view row) const;
};

// One seed of a preset. When `final_model` is given it receives the last
// trained model.
std::vector<RowScore> run_preset_once(Preset preset, const DatasetBundle& bundle,
                                      const TrainConfig& cfg,
                                      std::uint64_t seed,
                                      ReaderParams* final_model = nullptr);

// Every seed of cfg.seeds, aggregated.
PipelineReport run_pipeline(Preset preset, const DatasetBundle& bundle,
                            const TrainConfig& cfg);

std::string pipeline_report_to_json(const PipelineReport& report);
std::string pipeline_report_table(const PipelineReport& report);

std::string soft_labels_to_jsonl(const SoftLabelMap& soft);

}  // namespace ctxk

#endif  // CTXK_TRAINER_HPP_
