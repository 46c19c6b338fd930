// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/io.hpp"
#include "ctxk/rng.hpp"

namespace ctxk {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must be in [0, 1]");
  }
  if (epochs_stage1 < 0 || epochs_stage2 < 0) {
    throw std::invalid_argument("epochs must be >= 0");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (dim <= 0) throw std::invalid_argument("dim must be > 0");
  if (!(init_scale >= 0.0)) throw std::invalid_argument("init_scale must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["lambda"] = cfg.lambda;
  j["epochs_stage1"] = cfg.epochs_stage1;
  j["epochs_stage2"] = cfg.epochs_stage2;
  j["teacher_epochs"] = cfg.teacher_epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["seeds"] = cfg.seeds;
  j["stage2_labels"] = cfg.stage2_labels == LabelKind::kSoft ? "soft" : "hard";
  j["include_v_in_stage1"] = cfg.include_v_in_stage1;
  j["schedule"] = cfg.schedule == Schedule::kJoint ? "joint" : "separate";
  j["teacher_v_finetune"] = cfg.teacher_v_finetune;
  j["dim"] = cfg.dim;
  j["init_scale"] = cfg.init_scale;
  j["tokenizer"] = std::string(to_string(cfg.tokenizer));
  return j.dump();
}

TrainConfig train_config_from_json(std::string_view text) {
  TrainConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.epochs_stage1 = j.value("epochs_stage1", cfg.epochs_stage1);
    cfg.epochs_stage2 = j.value("epochs_stage2", cfg.epochs_stage2);
    cfg.teacher_epochs = j.value("teacher_epochs", cfg.teacher_epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.seeds = j.value("seeds", cfg.seeds);
    const std::string labels = j.value("stage2_labels", std::string("soft"));
    if (labels != "soft" && labels != "hard") throw FormatError("stage2_labels: " + labels);
    cfg.stage2_labels = labels == "soft" ? LabelKind::kSoft : LabelKind::kHard;
    cfg.include_v_in_stage1 = j.value("include_v_in_stage1", cfg.include_v_in_stage1);
    const std::string schedule = j.value("schedule", std::string("joint"));
    if (schedule != "joint" && schedule != "separate") throw FormatError("schedule: " + schedule);
    cfg.schedule = schedule == "joint" ? Schedule::kJoint : Schedule::kSeparate;
    cfg.teacher_v_finetune = j.value("teacher_v_finetune", cfg.teacher_v_finetune);
    cfg.dim = j.value("dim", cfg.dim);
    cfg.init_scale = j.value("init_scale", cfg.init_scale);
    const auto mode = parse_tokenizer_mode(j.value("tokenizer", std::string("unicode_words")));
    if (!mode) throw FormatError("unknown tokenizer");
    cfg.tokenizer = *mode;
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_hash(std::string_view canonical_json) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical_json);
  return os.str();
}

void DatasetBundle::validate() const {
  std::set<std::string> ids;
  auto check = [&ids](const std::vector<McInstance>& set) {
    for (const auto& inst : set) {
      inst.validate();
      if (!ids.insert(inst.id).second) {
        throw FormatError("duplicate instance id " + inst.id);
      }
    }
  };
  check(V);
  for (const auto& w : W) check(w);
  if (!weak_names.empty() && weak_names.size() != W.size()) {
    throw FormatError("weak_names does not match the number of weak sets");
  }
}

std::vector<McInstance> DatasetBundle::weak_union() const {
  std::vector<McInstance> out;
  for (const auto& w : W) out.insert(out.end(), w.begin(), w.end());
  return out;
}

namespace {

std::vector<McInstance> load_instances(const std::string& path) {
  std::vector<McInstance> out;
  for (const auto& rec : io::read_records(path)) out.push_back(instance_from_json(rec));
  return out;
}

std::vector<std::string> to_records(const std::vector<McInstance>& set) {
  std::vector<std::string> out;
  out.reserve(set.size());
  for (const auto& inst : set) out.push_back(instance_to_json(inst));
  return out;
}

}  // namespace

DatasetBundle load_bundle(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&base](const std::string& p) { return (base / p).string(); };
  DatasetBundle b;
  try {
    const json j = json::parse(io::read_file(manifest_path));
    b.V = load_instances(resolve(j.at("V").get<std::string>()));
    for (const auto& w : j.at("W")) {
      b.weak_names.push_back(w.at("name").get<std::string>());
      b.W.push_back(load_instances(resolve(w.at("path").get<std::string>())));
    }
    if (j.contains("dev")) b.dev = load_instances(resolve(j["dev"].get<std::string>()));
    if (j.contains("test")) b.test = load_instances(resolve(j["test"].get<std::string>()));
  } catch (const json::exception& e) {
    throw FormatError("bad bundle manifest " + manifest_path + ": " + e.what());
  }
  b.validate();
  return b;
}

void save_bundle(const std::string& dir, const DatasetBundle& bundle,
                 const std::string& header_json) {
  namespace fs = std::filesystem;
  json manifest;
  manifest["V"] = "V.jsonl";
  io::write_jsonl((fs::path(dir) / "V.jsonl").string(), header_json, to_records(bundle.V));
  manifest["W"] = json::array();
  for (std::size_t i = 0; i < bundle.W.size(); ++i) {
    const std::string name =
        i < bundle.weak_names.size() ? bundle.weak_names[i] : "W" + std::to_string(i + 1);
    const std::string file = "W_" + name + ".jsonl";
    io::write_jsonl((fs::path(dir) / file).string(), header_json, to_records(bundle.W[i]));
    manifest["W"].push_back({{"name", name}, {"path", file}});
  }
  manifest["dev"] = "dev.jsonl";
  manifest["test"] = "test.jsonl";
  io::write_jsonl((fs::path(dir) / "dev.jsonl").string(), header_json, to_records(bundle.dev));
  io::write_jsonl((fs::path(dir) / "test.jsonl").string(), header_json, to_records(bundle.test));
  io::write_file((fs::path(dir) / "bundle.json").string(), manifest.dump(2) + "\n");
}

ReaderParams train_on(std::span<const McInstance> data,
                      std::span<const LabelVector> labels, ReaderParams params,
                      const TrainConfig& cfg, int epochs, std::string_view stream,
                      TrainLog* log) {
  if (data.size() != labels.size()) {
    throw std::invalid_argument("train_on: data and labels differ in size");
  }
  if (epochs <= 0) return params;
  if (data.empty()) throw std::invalid_argument("train_on: empty training set");
  const auto encoded = encode_all(data, params);
  std::vector<std::size_t> order(encoded.size());
  std::vector<EncodedInstance> batch;
  std::vector<LabelVector> batch_labels;
  const GenRng base(cfg.seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    GenRng rng = base.derive(std::string(stream) + "/epoch" + std::to_string(epoch));
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(encoded[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      Gradient g;
      try {
        g = gradient(batch, batch_labels, params);
      } catch (const NumericFault& e) {
        throw NumericFault(std::string(stream) + " epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(start / cfg.batch_size) + ": " +
                           e.what());
      }
      apply_gradient(params, g, cfg.learning_rate);
      total += g.loss * static_cast<double>(stop - start);
    }
    if (log != nullptr) log->epoch_loss.push_back(total / static_cast<double>(order.size()));
  }
  return params;
}

namespace {

std::vector<LabelVector> hard_labels(std::span<const McInstance> data) {
  std::vector<LabelVector> out;
  out.reserve(data.size());
  for (const auto& inst : data) out.push_back(LabelVector::hard(inst.options.size(), inst.gold));
  return out;
}

std::vector<LabelVector> lookup_soft(std::span<const McInstance> data,
                                     const SoftLabelMap& soft) {
  std::vector<LabelVector> out;
  out.reserve(data.size());
  for (const auto& inst : data) {
    const auto it = soft.find(inst.id);
    if (it == soft.end()) throw std::invalid_argument("no soft label for " + inst.id);
    out.push_back(it->second);
  }
  return out;
}

std::vector<McInstance> concat(const std::vector<McInstance>& a,
                               const std::vector<McInstance>& b) {
  std::vector<McInstance> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool stage1_uses_v(const TrainConfig& cfg) {
  return cfg.include_v_in_stage1 && cfg.schedule == Schedule::kJoint;
}

}  // namespace

ReaderParams train_hard(std::span<const McInstance> data, ReaderParams params,
                        const TrainConfig& cfg, int epochs, std::string_view stream,
                        TrainLog* log) {
  if (data.empty()) throw std::invalid_argument("train_hard: empty training set");
  const auto labels = hard_labels(data);
  return train_on(data, labels, std::move(params), cfg, epochs, stream, log);
}

std::vector<ReaderParams> train_teachers(const DatasetBundle& bundle,
                                         const ReaderParams& init,
                                         const TrainConfig& cfg) {
  if (bundle.W.empty()) throw std::invalid_argument("train_teachers: no weak sets");
  const std::size_t n = bundle.W.size();
  std::vector<ReaderParams> teachers(n);
  std::vector<std::exception_ptr> errors(n);
  auto train_one = [&](std::size_t i) {
    try {
      const auto data = stage1_uses_v(cfg) ? concat(bundle.V, bundle.W[i]) : bundle.W[i];
      ReaderParams t = train_hard(data, init, cfg, cfg.effective_teacher_epochs(), "teacher");
      if (cfg.teacher_v_finetune) {
        t = train_hard(bundle.V, std::move(t), cfg, cfg.epochs_stage2, "teacher-v");
      }
      teachers[i] = std::move(t);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) train_one(i);
  } else {
    for (std::size_t start = 0; start < n; start += threads) {
      std::vector<std::thread> pool;
      for (std::size_t i = start; i < std::min(n, start + threads); ++i) {
        pool.emplace_back(train_one, i);
      }
      for (auto& t : pool) t.join();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return teachers;
}

LabelVector mix_soft_label(std::size_t options, std::size_t gold, double lambda,
                           std::span<const std::vector<double>> teacher_probs) {
  if (teacher_probs.empty()) throw std::invalid_argument("mix_soft_label: no teachers");
  const double share = 1.0 / static_cast<double>(teacher_probs.size());
  LabelVector s;
  s.values.assign(options, 0.0);
  for (std::size_t k = 0; k < options; ++k) {
    double avg = 0.0;
    for (const auto& p : teacher_probs) {
      if (p.size() != options) {
        throw std::invalid_argument("teacher probability vector has wrong length");
      }
      avg += share * p[k];
    }
    const double h = k == gold ? 1.0 : 0.0;
    s.values[k] = lambda * h + (1.0 - lambda) * avg;
  }
  return s;
}

SoftLabelMap soft_labels(const DatasetBundle& bundle,
                         std::span<const ReaderParams> teachers, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must be in [0, 1]");
  }
  if (teachers.size() != bundle.W.size()) {
    throw std::invalid_argument("soft_labels: need one teacher per weak set");
  }
  SoftLabelMap out;
  for (const auto& inst : bundle.V) {
    std::vector<std::vector<double>> probs;
    for (const auto& t : teachers) probs.push_back(option_probs(inst, t));
    out[inst.id] = mix_soft_label(inst.options.size(), inst.gold, lambda, probs);
  }
  for (std::size_t i = 0; i < bundle.W.size(); ++i) {
    for (const auto& inst : bundle.W[i]) {
      const std::vector<std::vector<double>> probs{option_probs(inst, teachers[i])};
      out[inst.id] = mix_soft_label(inst.options.size(), inst.gold, lambda, probs);
    }
  }
  return out;
}

StudentResult train_student(const DatasetBundle& bundle, const SoftLabelMap& soft,
                            const ReaderParams& init, const TrainConfig& cfg) {
  const auto weak = bundle.weak_union();
  const auto stage1_data = stage1_uses_v(cfg) ? concat(bundle.V, weak) : weak;
  StudentResult r;
  r.stage1 = train_on(stage1_data, lookup_soft(stage1_data, soft), init, cfg,
                      cfg.epochs_stage1, "stage1");
  const auto stage2_labels = cfg.stage2_labels == LabelKind::kSoft
                                 ? lookup_soft(bundle.V, soft)
                                 : hard_labels(bundle.V);
  r.final = train_on(bundle.V, stage2_labels, r.stage1, cfg, cfg.epochs_stage2, "stage2");
  return r;
}

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::kBaselineVOnly: return "baseline_V_only";
    case Preset::kSingleWeakTwoStage: return "single_weak_two_stage";
    case Preset::kCombinedTwoStage: return "combined_two_stage";
    case Preset::kTeacherStudentHard: return "teacher_student_hard";
    case Preset::kTeacherStudentSoft: return "teacher_student_soft";
    case Preset::kSeparateTraining: return "separate_training";
    case Preset::kNoContextAblation: return "no_context_ablation";
    case Preset::kNoVStage1Ablation: return "no_V_stage1_ablation";
  }
  return "?";
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (int i = 0; i <= static_cast<int>(Preset::kNoVStage1Ablation); ++i) {
    out.emplace_back(to_string(static_cast<Preset>(i)));
  }
  return out;
}

std::optional<Preset> parse_preset(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Preset::kNoVStage1Ablation); ++i) {
    if (to_string(static_cast<Preset>(i)) == s) return static_cast<Preset>(i);
  }
  return std::nullopt;
}

DatasetBundle strip_weak_contexts(DatasetBundle bundle) {
  for (auto& set : bundle.W) {
    for (auto& inst : set) {
      inst.document.clear();
      inst.verbal_line.reset();
    }
  }
  return bundle;
}

const ReportRow* PipelineReport::find(std::string_view row) const {
  for (const auto& r : rows) {
    if (r.row == row) return &r;
  }
  return nullptr;
}

namespace {

RowScore score(std::string row, const ReaderParams& params, const DatasetBundle& b) {
  return {std::move(row), accuracy(params, b.dev).accuracy, accuracy(params, b.test).accuracy};
}

std::string weak_name(const DatasetBundle& b, std::size_t i) {
  return i < b.weak_names.size() ? b.weak_names[i] : "W" + std::to_string(i + 1);
}

std::vector<RowScore> teacher_student(const DatasetBundle& bundle, const ReaderParams& init,
                                      const TrainConfig& cfg, ReaderParams* final_model) {
  std::vector<RowScore> rows;
  const auto teachers = train_teachers(bundle, init, cfg);
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    rows.push_back(score("teacher " + weak_name(bundle, i), teachers[i], bundle));
  }
  const auto soft = soft_labels(bundle, teachers, cfg.lambda);
  auto student = train_student(bundle, soft, init, cfg);
  rows.push_back(score("student stage1", student.stage1, bundle));
  rows.push_back(score("student", student.final, bundle));
  if (final_model != nullptr) *final_model = std::move(student.final);
  return rows;
}

}  // namespace

std::vector<RowScore> run_preset_once(Preset preset, const DatasetBundle& bundle,
                                      const TrainConfig& cfg_in, std::uint64_t seed,
                                      ReaderParams* final_model) {
  cfg_in.validate();
  if (bundle.V.empty()) throw std::invalid_argument("bundle has no labeled set V");
  if (bundle.dev.empty() || bundle.test.empty()) {
    throw std::invalid_argument("bundle needs non-empty dev and test sets");
  }
  TrainConfig cfg = cfg_in;
  cfg.seed = seed;
  std::vector<std::vector<McInstance>> sets{bundle.V};
  sets.insert(sets.end(), bundle.W.begin(), bundle.W.end());
  const ReaderParams init =
      init_params(Vocab::build(sets, cfg.tokenizer), cfg.dim, cfg.init_scale,
                  GenRng(seed).derive("init").next_u64(), cfg.tokenizer);

  std::vector<RowScore> rows;
  auto keep = [final_model](const ReaderParams& p) {
    if (final_model != nullptr) *final_model = p;
  };
  switch (preset) {
    case Preset::kBaselineVOnly: {
      const auto m = train_hard(bundle.V, init, cfg, cfg.epochs_stage2, "stage2");
      rows.push_back(score("V only", m, bundle));
      keep(m);
      break;
    }
    case Preset::kSingleWeakTwoStage: {
      if (bundle.W.empty()) throw std::invalid_argument("bundle has no weak sets");
      for (std::size_t i = 0; i < bundle.W.size(); ++i) {
        const std::string name = "V+" + weak_name(bundle, i);
        const auto s1 = train_hard(concat(bundle.V, bundle.W[i]), init, cfg,
                                   cfg.epochs_stage1, "stage1");
        rows.push_back(score(name + " stage1", s1, bundle));
        const auto s2 = train_hard(bundle.V, s1, cfg, cfg.epochs_stage2, "stage2");
        rows.push_back(score(name + " two-stage", s2, bundle));
        keep(s2);
      }
      break;
    }
    case Preset::kCombinedTwoStage:
    case Preset::kSeparateTraining: {
      if (bundle.W.empty()) throw std::invalid_argument("bundle has no weak sets");
      if (preset == Preset::kSeparateTraining) cfg.schedule = Schedule::kSeparate;
      const auto weak = bundle.weak_union();
      const bool with_v = stage1_uses_v(cfg);
      const std::string name = with_v ? "V+W" : "W";
      const auto s1 = train_hard(with_v ? concat(bundle.V, weak) : weak, init, cfg,
                                 cfg.epochs_stage1, "stage1");
      rows.push_back(score(name + " stage1", s1, bundle));
      const auto s2 = train_hard(bundle.V, s1, cfg, cfg.epochs_stage2, "stage2");
      rows.push_back(score(name + " two-stage", s2, bundle));
      keep(s2);
      break;
    }
    case Preset::kTeacherStudentHard:
      cfg.stage2_labels = LabelKind::kHard;
      rows = teacher_student(bundle, init, cfg, final_model);
      break;
    case Preset::kTeacherStudentSoft:
      cfg.stage2_labels = LabelKind::kSoft;
      rows = teacher_student(bundle, init, cfg, final_model);
      break;
    case Preset::kNoContextAblation:
      cfg.stage2_labels = LabelKind::kSoft;
      rows = teacher_student(strip_weak_contexts(bundle), init, cfg, final_model);
      break;
    case Preset::kNoVStage1Ablation:
      cfg.stage2_labels = LabelKind::kSoft;
      cfg.include_v_in_stage1 = false;
      rows = teacher_student(bundle, init, cfg, final_model);
      break;
  }
  return rows;
}

PipelineReport run_pipeline(Preset preset, const DatasetBundle& bundle,
                            const TrainConfig& cfg) {
  cfg.validate();
  PipelineReport report;
  report.preset = std::string(to_string(preset));
  report.config_hash = config_hash(train_config_to_json(cfg) + "|" + report.preset);
  report.seeds = cfg.seeds;
  std::vector<std::string> names;
  std::vector<std::vector<double>> dev;
  std::vector<std::vector<double>> test;
  for (auto seed : cfg.seeds) {
    const auto rows = run_preset_once(preset, bundle, cfg, seed);
    if (names.empty()) {
      for (const auto& r : rows) names.push_back(r.row);
      dev.resize(rows.size());
      test.resize(rows.size());
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      dev[i].push_back(rows[i].dev);
      test[i].push_back(rows[i].test);
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    report.rows.push_back({names[i], summarize(dev[i]), summarize(test[i])});
  }
  return report;
}

namespace {

json summary_json(const SeedSummary& s) {
  return {{"per_seed", s.per_seed}, {"mean", s.mean}, {"std", s.std}};
}

}  // namespace

std::string pipeline_report_to_json(const PipelineReport& report) {
  json j;
  j["preset"] = report.preset;
  j["config_hash"] = report.config_hash;
  j["schema"] = "ctxk.report";
  j["version"] = io::kSchemaVersion;
  j["seeds"] = report.seeds;
  if (!report.rows.empty()) {
    const auto& f = report.final_row();
    j["final_row"] = f.row;
    j["per_seed"] = {{"dev", f.dev.per_seed}, {"test", f.test.per_seed}};
    j["mean"] = {{"dev", f.dev.mean}, {"test", f.test.mean}};
    j["std"] = {{"dev", f.dev.std}, {"test", f.test.std}};
  }
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"row", r.row}, {"dev", summary_json(r.dev)}, {"test", summary_json(r.test)}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

std::string pipeline_report_table(const PipelineReport& report) {
  std::size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.row.size());
  std::ostringstream os;
  os << report.preset << " (" << report.seeds.size() << " seeds, config "
     << report.config_hash << ")\n";
  os << std::left << std::setw(static_cast<int>(width)) << "model" << "  " << std::right
     << std::setw(7) << "dev" << "  " << std::setw(7) << "test" << '\n';
  for (const auto& r : report.rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.row << "  " << std::right
       << std::fixed << std::setprecision(1) << std::setw(7) << r.dev.mean * 100.0 << "  "
       << std::setw(7) << r.test.mean * 100.0 << '\n';
  }
  return os.str();
}

std::string soft_labels_to_jsonl(const SoftLabelMap& soft) {
  std::string out;
  for (const auto& [id, s] : soft) {
    json j;
    j["instance_id"] = id;
    j["s"] = s.values;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace ctxk
