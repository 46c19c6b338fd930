// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/evaluation.hpp"
#include "ctxk/fixtures.hpp"
#include "ctxk/trainer.hpp"
#include "random_cases.hpp"
#include "test_support.hpp"

namespace ctxk {
namespace {

using nlohmann::json;

McInstance mc(std::string id, std::string doc, std::vector<std::string> opts, std::size_t gold,
              std::string kind = "labeled") {
  McInstance m;
  m.id = std::move(id);
  m.document = std::move(doc);
  m.question = "what";
  m.options = std::move(opts);
  m.gold = gold;
  m.source.kind = std::move(kind);
  return m;
}

// The gold colour is fixed by the document word.
std::vector<McInstance> separable(std::size_t n, const std::string& prefix) {
  std::vector<McInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool alpha = i % 2 == 0;
    const bool swap = (i / 2) % 2 == 0;
    std::vector<std::string> opts = swap ? std::vector<std::string>{"blue", "red"}
                                         : std::vector<std::string>{"red", "blue"};
    const std::string want = alpha ? "red" : "blue";
    const std::size_t gold = opts[0] == want ? 0 : 1;
    out.push_back(mc(prefix + std::to_string(i), alpha ? "alpha" : "beta", opts, gold));
  }
  return out;
}

ReaderParams init_for(const std::vector<std::vector<McInstance>>& sets, const TrainConfig& cfg,
                      std::uint64_t seed = 1) {
  return init_params(Vocab::build(sets, cfg.tokenizer), cfg.dim, cfg.init_scale, seed);
}

TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.init_scale = 0.3;
  cfg.learning_rate = 1.0;
  cfg.batch_size = 4;
  cfg.epochs_stage1 = 2;
  cfg.epochs_stage2 = 3;
  cfg.seeds = {1, 2};
  return cfg;
}

// Tiny bundle from the synthetic generator.
DatasetBundle tiny_bundle() {
  FixtureSpec spec;
  spec.n_scripts = 4;
  spec.scenes_per_script = 12;
  spec.turns_per_scene = 4;
  spec.labeled_train = 16;
  spec.labeled_dev = 20;
  spec.labeled_test = 20;
  spec.seed = 4;
  return build_fixture_bundle(spec);
}

TEST(TrainConfig, DefaultsAndValidation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.lambda, 0.5);
  EXPECT_EQ(cfg.epochs_stage1, 1);
  EXPECT_EQ(cfg.epochs_stage2, 8);
  EXPECT_EQ(cfg.learning_rate, 0.1);
  EXPECT_EQ(cfg.batch_size, 32u);
  EXPECT_EQ(cfg.dim, 64);
  EXPECT_EQ(cfg.init_scale, 0.05);
  EXPECT_EQ(cfg.seeds.size(), 5u);
  EXPECT_FALSE(cfg.teacher_v_finetune);
  EXPECT_NO_THROW(cfg.validate());
  cfg.lambda = 1.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.epochs_stage2 = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(TrainConfig, JsonRoundTripAndHash) {
  TrainConfig cfg = small_cfg();
  cfg.stage2_labels = LabelKind::kHard;
  cfg.schedule = Schedule::kSeparate;
  const auto text = train_config_to_json(cfg);
  const auto back = train_config_from_json(text);
  EXPECT_EQ(train_config_to_json(back), text);
  EXPECT_EQ(config_hash(text), config_hash(text));
  EXPECT_NE(config_hash(text), config_hash(train_config_to_json(TrainConfig{})));
  EXPECT_EQ(config_hash(text).size(), 16u);
  EXPECT_EQ(train_config_from_json(R"({"lambda":0.7,"unknown":1})").lambda, 0.7);
  EXPECT_THROW(train_config_from_json(R"({"stage2_labels":"medium"})"), FormatError);
  EXPECT_THROW(train_config_from_json("{"), FormatError);
}

TEST(MixSoftLabel, WeakInstanceOwnTeacher) {
  const std::vector<std::vector<double>> p{{0.6, 0.4}};
  const auto s = mix_soft_label(2, 0, 0.5, p);
  EXPECT_NEAR(s.values[0], 0.8, 1e-15);
  EXPECT_NEAR(s.values[1], 0.2, 1e-15);
}

TEST(MixSoftLabel, LabeledInstanceTeacherAverage) {
  const std::vector<std::vector<double>> p{{0.5, 0.5}, {0.1, 0.9}};
  const auto s = mix_soft_label(2, 1, 0.5, p);
  EXPECT_NEAR(s.values[0], 0.15, 1e-15);
  EXPECT_NEAR(s.values[1], 0.85, 1e-15);
}

TEST(MixSoftLabel, LambdaOneIsHard) {
  const std::vector<std::vector<double>> p{{0.2, 0.3, 0.5}};
  EXPECT_EQ(mix_soft_label(3, 1, 1.0, p).values, LabelVector::hard(3, 1).values);
  EXPECT_THROW(mix_soft_label(3, 1, 0.5, std::vector<std::vector<double>>{}), std::invalid_argument);
  EXPECT_THROW(mix_soft_label(3, 1, 0.5, std::vector<std::vector<double>>{{0.5, 0.5}}),
               std::invalid_argument);
}

TEST(SoftLabels, CoverEveryInstanceAndNormalize) {
  const auto b = tiny_bundle();
  const auto cfg = small_cfg();
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto teachers = train_teachers(b, init, cfg);
  const auto soft = soft_labels(b, teachers, 0.5);
  EXPECT_EQ(soft.size(), b.V.size() + b.weak_union().size());
  for (const auto& [id, s] : soft) {
    EXPECT_TRUE(s.valid()) << id;
  }
  // Gold dominance at lambda 0.5.
  for (const auto& inst : b.V) {
    const auto& s = soft.at(inst.id).values;
    for (double x : s) EXPECT_GE(s[inst.gold], x);
  }
  EXPECT_THROW(soft_labels(b, std::span<const ReaderParams>(teachers).first(1), 0.5),
               std::invalid_argument);
  const auto hard = soft_labels(b, teachers, 1.0);
  for (const auto& inst : b.W[0]) {
    EXPECT_EQ(hard.at(inst.id).values, LabelVector::hard(inst.options.size(), inst.gold).values);
  }
}

TEST(TrainHard, SeparableToyReachesPerfectAccuracy) {
  const auto data = separable(16, "s");
  TrainConfig cfg = small_cfg();
  const auto init = init_for({data}, cfg);
  TrainLog log;
  const auto trained = train_hard(data, init, cfg, 50, "toy", &log);
  EXPECT_EQ(accuracy(trained, data).accuracy, 1.0);
  ASSERT_EQ(log.epoch_loss.size(), 50u);
  EXPECT_LT(log.epoch_loss.back(), log.epoch_loss.front());
}

TEST(TrainHard, ZeroEpochsUnchanged) {
  const auto data = separable(8, "s");
  const auto cfg = small_cfg();
  const auto init = init_for({data}, cfg);
  const auto out = train_hard(data, init, cfg, 0);
  EXPECT_EQ(out.E, init.E);
  EXPECT_EQ(out.B, init.B);
  EXPECT_EQ(out.bias, init.bias);
}

TEST(TrainHard, Deterministic) {
  const auto data = separable(12, "s");
  const auto cfg = small_cfg();
  const auto init = init_for({data}, cfg);
  const auto a = train_hard(data, init, cfg, 5);
  const auto b = train_hard(data, init, cfg, 5);
  EXPECT_EQ(a.E, b.E);
  EXPECT_EQ(a.B, b.B);
  TrainConfig other = cfg;
  other.seed = 99;
  EXPECT_NE(train_hard(data, init, other, 5).B, a.B);
}

TEST(TrainHard, EmptyRejectedAndDivergenceReported) {
  const auto cfg = small_cfg();
  const auto data = separable(8, "s");
  auto init = init_for({data}, cfg);
  EXPECT_THROW(train_hard(std::vector<McInstance>{}, init, cfg, 1), std::invalid_argument);
  init.E(1, 0) = std::numeric_limits<double>::infinity();
  try {
    train_hard(data, init, cfg, 1, "probe");
    FAIL();
  } catch (const NumericFault& e) {
    EXPECT_NE(std::string(e.what()).find("probe epoch 0"), std::string::npos) << e.what();
  }
}

TEST(TrainTeachers, SingleWeakSetReduces) {
  auto b = tiny_bundle();
  b.W.resize(1);
  b.weak_names.resize(1);
  const auto cfg = small_cfg();
  const auto init = init_for({b.V, b.W[0]}, cfg);
  const auto teachers = train_teachers(b, init, cfg);
  ASSERT_EQ(teachers.size(), 1u);
  std::vector<McInstance> vw = b.V;
  vw.insert(vw.end(), b.W[0].begin(), b.W[0].end());
  const auto direct = train_hard(vw, init, cfg, cfg.effective_teacher_epochs(), "teacher");
  EXPECT_EQ(teachers[0].E, direct.E);
  EXPECT_EQ(teachers[0].B, direct.B);
}

TEST(TrainTeachers, SwapSymmetry) {
  auto b = tiny_bundle();
  b.W.resize(2);
  b.weak_names.resize(2);
  const auto cfg = small_cfg();
  const auto init = init_for({b.V, b.W[0], b.W[1]}, cfg);
  const auto t = train_teachers(b, init, cfg);
  std::swap(b.W[0], b.W[1]);
  std::swap(b.weak_names[0], b.weak_names[1]);
  const auto u = train_teachers(b, init, cfg);
  EXPECT_EQ(t[0].B, u[1].B);
  EXPECT_EQ(t[1].B, u[0].B);
  EXPECT_EQ(t[0].E, u[1].E);
}

TEST(TrainTeachers, ThreadCountDoesNotChangeResult) {
  const auto b = tiny_bundle();
  auto cfg = small_cfg();
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto serial = train_teachers(b, init, cfg);
  cfg.threads = 4;
  const auto parallel = train_teachers(b, init, cfg);
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].B, parallel[i].B);
}

TEST(TrainStudent, LambdaOneMatchesHardTwoStage) {
  const auto b = tiny_bundle();
  auto cfg = small_cfg();
  cfg.lambda = 1.0;
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto soft = soft_labels(b, train_teachers(b, init, cfg), 1.0);
  const auto student = train_student(b, soft, init, cfg);
  std::vector<McInstance> vw = b.V;
  const auto w = b.weak_union();
  vw.insert(vw.end(), w.begin(), w.end());
  const auto s1 = train_hard(vw, init, cfg, cfg.epochs_stage1, "stage1");
  const auto s2 = train_hard(b.V, s1, cfg, cfg.epochs_stage2, "stage2");
  EXPECT_EQ(student.stage1.B, s1.B);
  EXPECT_EQ(student.final.B, s2.B);
  EXPECT_EQ(student.final.E, s2.E);
}

TEST(TrainStudent, ZeroStageTwoEpochsReturnsStageOne) {
  const auto b = tiny_bundle();
  auto cfg = small_cfg();
  cfg.epochs_stage2 = 0;
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto soft = soft_labels(b, train_teachers(b, init, cfg), 0.5);
  const auto r = train_student(b, soft, init, cfg);
  EXPECT_EQ(r.final.B, r.stage1.B);
}

TEST(TrainStudent, StageTwoTouchesOnlyV) {
  // Tokens that occur only in weak data keep their embeddings in stage 2.
  auto b = tiny_bundle();
  McInstance extra = b.W[0].front();
  extra.id = "extra";
  extra.document += " qqweakonly";
  extra.options.back() += " qqweakoption";
  b.W[0].push_back(extra);
  const auto cfg = small_cfg();
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto soft = soft_labels(b, train_teachers(b, init, cfg), 0.5);
  const auto r = train_student(b, soft, init, cfg);
  const auto v_vocab = Vocab::build(b.V, cfg.tokenizer);
  std::size_t checked = 0;
  for (const auto& tok : init.vocab.tokens()) {
    if (v_vocab.row(tok) != 0) continue;
    const int row = init.vocab.row(tok);
    EXPECT_EQ(r.final.E.row(row), r.stage1.E.row(row)) << tok;
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(Pipeline, PresetNames) {
  EXPECT_EQ(preset_names().size(), 8u);
  for (const auto& n : preset_names()) EXPECT_EQ(to_string(*parse_preset(n)), n);
  EXPECT_FALSE(parse_preset("no_such_preset").has_value());
}

TEST(Pipeline, BaselineIsEvaluationOfTrainHard) {
  const auto b = tiny_bundle();
  const auto cfg = small_cfg();
  ReaderParams final_model;
  const auto rows = run_preset_once(Preset::kBaselineVOnly, b, cfg, 3, &final_model);
  ASSERT_EQ(rows.size(), 1u);
  auto c = cfg;
  c.seed = 3;
  const auto init = init_params(Vocab::build(std::vector<std::vector<McInstance>>{b.V, b.W[0], b.W[1], b.W[2], b.W[3]}, c.tokenizer),
                                c.dim, c.init_scale, GenRng(3).derive("init").next_u64());
  const auto m = train_hard(b.V, init, c, c.epochs_stage2, "stage2");
  EXPECT_EQ(rows[0].dev, accuracy(m, b.dev).accuracy);
  EXPECT_EQ(rows[0].test, accuracy(m, b.test).accuracy);
  EXPECT_EQ(final_model.B, m.B);
}

TEST(Pipeline, RowNamesPerPreset) {
  const auto b = tiny_bundle();
  auto cfg = small_cfg();
  cfg.seeds = {1};
  const auto names = [&](Preset p) {
    std::vector<std::string> out;
    for (const auto& r : run_pipeline(p, b, cfg).rows) out.push_back(r.row);
    return out;
  };
  EXPECT_EQ(names(Preset::kCombinedTwoStage),
            (std::vector<std::string>{"V+W stage1", "V+W two-stage"}));
  EXPECT_EQ(names(Preset::kSeparateTraining), (std::vector<std::string>{"W stage1", "W two-stage"}));
  EXPECT_EQ(names(Preset::kSingleWeakTwoStage).size(), 8u);
  EXPECT_EQ(names(Preset::kTeacherStudentSoft),
            (std::vector<std::string>{"teacher Bc", "teacher Bn", "teacher I", "teacher O",
                                      "student stage1", "student"}));
}

TEST(Pipeline, NoVStage1ExcludesV) {
  // With V excluded and a separate schedule, the student stage 1 sees only W;
  // its result equals a direct soft-label run over the weak union.
  const auto b = tiny_bundle();
  auto cfg = small_cfg();
  cfg.include_v_in_stage1 = false;
  const auto init = init_for({b.V, b.weak_union()}, cfg);
  const auto teachers = train_teachers(b, init, cfg);
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    const auto direct = train_hard(b.W[i], init, cfg, cfg.effective_teacher_epochs(), "teacher");
    EXPECT_EQ(teachers[i].B, direct.B);
  }
  const auto soft = soft_labels(b, teachers, cfg.lambda);
  const auto r = train_student(b, soft, init, cfg);
  const auto w = b.weak_union();
  std::vector<LabelVector> labels;
  for (const auto& inst : w) labels.push_back(soft.at(inst.id));
  EXPECT_EQ(r.stage1.B, train_on(w, labels, init, cfg, cfg.epochs_stage1, "stage1").B);
}

TEST(Pipeline, StripWeakContexts) {
  const auto b = strip_weak_contexts(tiny_bundle());
  for (const auto& set : b.W)
    for (const auto& inst : set) EXPECT_TRUE(inst.document.empty());
  EXPECT_FALSE(b.V.front().document.empty());
}

TEST(Pipeline, ReportJsonAndDeterminism) {
  const auto b = tiny_bundle();
  const auto cfg = small_cfg();
  const auto r1 = run_pipeline(Preset::kTeacherStudentSoft, b, cfg);
  const auto r2 = run_pipeline(Preset::kTeacherStudentSoft, b, cfg);
  const auto j1 = pipeline_report_to_json(r1);
  EXPECT_EQ(j1, pipeline_report_to_json(r2));
  const auto j = json::parse(j1);
  EXPECT_EQ(j["preset"], "teacher_student_soft");
  EXPECT_EQ(j["seeds"].size(), 2u);
  EXPECT_EQ(j["per_seed"]["dev"].size(), 2u);
  EXPECT_TRUE(j.contains("mean"));
  EXPECT_TRUE(j.contains("std"));
  EXPECT_EQ(j["final_row"], "student");
  const auto& f = r1.final_row();
  EXPECT_NEAR(f.dev.mean, (f.dev.per_seed[0] + f.dev.per_seed[1]) / 2, 1e-15);
  EXPECT_FALSE(pipeline_report_table(r1).empty());
}

TEST(Pipeline, RequiresDevAndTest) {
  auto b = tiny_bundle();
  b.dev.clear();
  EXPECT_THROW(run_preset_once(Preset::kBaselineVOnly, b, small_cfg(), 1), std::invalid_argument);
}

TEST(Bundle, ValidateAndSaveLoad) {
  auto b = tiny_bundle();
  EXPECT_NO_THROW(b.validate());
  const auto dir = testing::scratch_dir("bundle");
  save_bundle(dir.string(), b, io::meta_header("ctxk.instances", "h", 1));
  const auto back = load_bundle((dir / "bundle.json").string());
  ASSERT_EQ(back.W.size(), b.W.size());
  EXPECT_EQ(back.weak_names, b.weak_names);
  EXPECT_EQ(back.V.size(), b.V.size());
  for (std::size_t i = 0; i < b.W.size(); ++i) {
    ASSERT_EQ(back.W[i].size(), b.W[i].size());
    EXPECT_EQ(instance_to_json(back.W[i][0]), instance_to_json(b.W[i][0]));
  }
  b.W[0].push_back(b.V[0]);
  EXPECT_THROW(b.validate(), FormatError);
}

TEST(SoftLabelFile, OneRecordPerInstance) {
  SoftLabelMap m;
  m["a"] = LabelVector{{0.25, 0.75}};
  m["b"] = LabelVector{{1.0, 0.0}};
  const auto text = soft_labels_to_jsonl(m);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto first = json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first["instance_id"], "a");
  EXPECT_EQ(first["s"][1], 0.75);
}

}  // namespace
}  // namespace ctxk
