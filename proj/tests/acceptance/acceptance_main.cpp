// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks, one PASS/FAIL line per criterion.
//   ctxk_acceptance --cli <path to ctxk> --work <scratch dir> [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctxk/evaluation.hpp"
#include "ctxk/fixtures.hpp"
#include "ctxk/instances.hpp"
#include "ctxk/io.hpp"
#include "ctxk/knowledge.hpp"
#include "ctxk/reader.hpp"
#include "ctxk/trainer.hpp"
#include "random_cases.hpp"

namespace fs = std::filesystem;
using namespace ctxk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

std::string pct(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * x;
  return os.str();
}

std::string g_cli;
fs::path g_work;

// 1 ------------------------------------------------------------------------
Outcome golden_extraction() {
  const auto triples = extract_all(golden_scene(), ExtractConfig{}, Stoplist::default_list());
  using Key = std::tuple<std::string, std::string, std::string>;
  std::multiset<Key> got;
  for (const auto& t : triples) got.insert({std::string(to_string(t.ktype)), t.nonverbal, t.verbal});
  const std::multiset<Key> want{
      {"Bc", "oh god",
       "Emily: You are catching on quickly. We always send assistants to a designer’s home on "
       "their very first day. You’re going to his showroom. I’ll give you the address."},
      {"I", "sighs",
       "Emily: You never ask Miranda. Anything. All right, I’ll take care of the other stuff. "
       "You go to Calvin Klein."},
      {"I", "thinking", "Andy: Of course not. I’m going......to his house."},
      {"O", "Emily rolls her eyes so hard they almost eject from her head.",
       "Andy: So I just, what, go down to the Calvin Klein store and ask them..."}};
  return {got == want, std::to_string(triples.size()) + " pairs, types Bc/I/I/O"};
}

// 2 ------------------------------------------------------------------------
Outcome oracle_equivalence() {
  FixtureSpec spec;
  spec.n_scripts = 120;
  spec.seed = 2026;
  const auto corpus = synthesize_corpus(spec);
  std::vector<Scene> scenes;
  for (const auto& s : corpus.scripts) {
    auto part = parse_script(s, ParserConfig{});
    scenes.insert(scenes.end(), part.begin(), part.end());
  }
  std::multiset<std::tuple<std::string, std::string, int, std::string, std::string>> got, want;
  for (const auto& t : extract_all(scenes, ExtractConfig{}, Stoplist::default_list())) {
    got.insert({t.script_id, t.scene_id, static_cast<int>(t.ktype), t.verbal, t.nonverbal});
  }
  for (const auto& o : corpus.oracle) {
    want.insert({o.script_id, o.scene_id, static_cast<int>(o.ktype), o.verbal, o.nonverbal});
  }
  std::size_t tp = 0;
  {
    auto rest = want;
    for (const auto& g : got) {
      auto it = rest.find(g);
      if (it != rest.end()) {
        ++tp;
        rest.erase(it);
      }
    }
  }
  const double precision = got.empty() ? 0.0 : double(tp) / double(got.size());
  const double recall = want.empty() ? 0.0 : double(tp) / double(want.size());
  return {precision == 1.0 && recall == 1.0 && corpus.scripts.size() >= 100,
          std::to_string(corpus.scripts.size()) + " scripts, " + std::to_string(want.size()) +
              " oracle triples, precision " + fmt(precision) + ", recall " + fmt(recall)};
}

// 3 ------------------------------------------------------------------------
Outcome soft_label_algebra() {
  GenRng rng(303);
  double worst_sum = 0.0;
  std::size_t dominance_fail = 0, strict_fail = 0, collapse_fail = 0;
  const std::vector<double> lambdas{0.5, 0.7, 1.0};
  for (int c = 0; c < 10000; ++c) {
    const std::size_t m = 2 + rng.uniform_below(6);
    const std::size_t gold = rng.uniform_below(m);
    const std::size_t teachers = 1 + rng.uniform_below(4);
    std::vector<std::vector<double>> probs;
    for (std::size_t t = 0; t < teachers; ++t) probs.push_back(testing::random_distribution(rng, m).values);
    // Random lambda for the normalization check, then the three fixed ones.
    std::vector<double> ls{rng.uniform01()};
    ls.insert(ls.end(), lambdas.begin(), lambdas.end());
    for (double lambda : ls) {
      const auto s = mix_soft_label(m, gold, lambda, probs);
      double sum = 0;
      for (double x : s.values) sum += x;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      if (lambda < 0.5) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == gold) continue;
        if (!(s.values[gold] >= s.values[j])) ++dominance_fail;
        if (lambda > 0.5 && !(s.values[gold] > s.values[j])) ++strict_fail;
      }
      if (lambda == 1.0 && s.values != LabelVector::hard(m, gold).values) ++collapse_fail;
    }
  }
  return {worst_sum <= 1e-9 && dominance_fail == 0 && strict_fail == 0 && collapse_fail == 0,
          "10000 cases, max |sum-1| " + fmt(worst_sum) + ", dominance violations " +
              std::to_string(dominance_fail + strict_fail) + ", lambda=1 mismatches " +
              std::to_string(collapse_fail)};
}

// 4 ------------------------------------------------------------------------
Outcome loss_identity() {
  GenRng rng(404);
  const auto words = testing::toy_words(40);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 2 + rng.uniform_below(5);
    const auto inst = testing::random_instance(rng, words, m, "l" + std::to_string(i));
    const std::vector<McInstance> one{inst};
    const auto params = init_params(Vocab::build(one, TokenizerMode::kUnicodeWords), 6,
                                    rng.uniform(0.05, 2.0), rng.next_u64());
    const auto enc = encode_instance(inst, params);
    worst = std::max(worst, std::abs(loss_soft(enc, LabelVector::hard(m, inst.gold), params) -
                                     loss_hard(enc, params)));
  }
  const auto inst = testing::random_instance(rng, words, 4, "u");
  const std::vector<McInstance> one{inst};
  const auto zero = zero_params(Vocab::build(one, TokenizerMode::kUnicodeWords), 6);
  const double uniform = loss_hard(encode_instance(inst, zero), zero);
  const double dev = std::abs(uniform - std::log(4.0));
  return {worst <= 1e-12 && dev <= 1e-12,
          "max |L2(one-hot)-L1| " + fmt(worst) + " over 1000, |L1(uniform)-ln4| " + fmt(dev)};
}

// 5 ------------------------------------------------------------------------
Outcome gradient_correctness() {
  GenRng rng(505);
  const auto words = testing::toy_words(25);
  double worst_rel = 0.0, worst_identity = 0.0;
  std::size_t failures = 0, coords = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t batch_n = 1 + rng.uniform_below(4);
    const std::size_t m = 2 + rng.uniform_below(4);
    std::vector<McInstance> data;
    for (std::size_t i = 0; i < batch_n; ++i) {
      data.push_back(testing::random_instance(rng, words, m, std::to_string(i)));
    }
    const int dim = 3 + static_cast<int>(rng.uniform_below(4));
    auto params = init_params(Vocab::build(data, TokenizerMode::kUnicodeWords), dim,
                              rng.uniform(0.1, 1.0), rng.next_u64());
    params.bias = rng.uniform(-1, 1);
    const auto enc = encode_all(data, params);
    std::vector<LabelVector> labels;
    for (const auto& e : enc) {
      labels.push_back(rng.bernoulli(0.5) ? LabelVector::hard(m, e.gold)
                                          : testing::random_distribution(rng, m));
    }
    GradCheckOptions opt;
    opt.eps = 1e-5;
    opt.tol = 1e-4;
    const auto report = check_gradients(params, enc, labels, opt);
    worst_rel = std::max(worst_rel, report.max_rel_error);
    coords += report.checked;
    failures += !report.passed;

    // Score-gradient identity: dL/dscore_k from the full softmax Jacobian,
    // then the bilinear gradient it implies, both against the library.
    Eigen::MatrixXd dB = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < enc.size(); ++i) {
      const auto p = option_probs(enc[i], params);
      const auto g = score_gradient(p, labels[i]);
      std::vector<double> jac(m, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
          const double dlogp_j = (j == k ? 1.0 : 0.0) - p[k];
          jac[k] -= labels[i].values[j] * dlogp_j;
        }
        worst_identity = std::max(worst_identity, std::abs(g[k] - jac[k]));
      }
      const auto u = encode(std::span<const int>(enc[i].doc), params);
      for (std::size_t k = 0; k < m; ++k) {
        const auto w = encode(std::span<const int>(enc[i].question_option[k]), params);
        dB += jac[k] * u * w.transpose() / static_cast<double>(enc.size());
      }
    }
    const auto lib = gradient(enc, labels, params);
    worst_identity = std::max(worst_identity, (lib.dB - dB).cwiseAbs().maxCoeff());
  }
  return {failures == 0 && worst_rel < 1e-4 && worst_identity <= 1e-12,
          "100 draws, " + std::to_string(coords) + " coordinates, max rel error " + fmt(worst_rel) +
              ", p-s identity max deviation " + fmt(worst_identity)};
}

// 6 and 7 -----------------------------------------------------------------
struct TrainingRuns {
  PipelineReport baseline, single, combined, student, no_context;
  double seconds_6 = 0.0, seconds_7 = 0.0;
  std::string error;
};

TrainingRuns& training_runs() {
  static TrainingRuns runs = [] {
    TrainingRuns r;
    try {
      const fs::path cfg_dir = CTXK_CONFIG_DIR;
      const auto spec =
          fixture_spec_from_json(io::read_file((cfg_dir / "planted_fixture.spec.json").string()));
      const auto cfg =
          train_config_from_json(io::read_file((cfg_dir / "planted_fixture.train.json").string()));
      const auto t0 = std::chrono::steady_clock::now();
      const auto bundle = build_fixture_bundle(spec);
      r.baseline = run_pipeline(Preset::kBaselineVOnly, bundle, cfg);
      r.single = run_pipeline(Preset::kSingleWeakTwoStage, bundle, cfg);
      r.combined = run_pipeline(Preset::kCombinedTwoStage, bundle, cfg);
      r.student = run_pipeline(Preset::kTeacherStudentSoft, bundle, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      r.no_context = run_pipeline(Preset::kNoContextAblation, bundle, cfg);
      const auto t2 = std::chrono::steady_clock::now();
      r.seconds_6 = std::chrono::duration<double>(t1 - t0).count();
      r.seconds_7 = std::chrono::duration<double>(t2 - t1).count();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return runs;
}

double dev_mean(const PipelineReport& r, const std::string& row) {
  const auto* x = r.find(row);
  return x == nullptr ? std::nan("") : x->dev.mean;
}

double test_mean(const PipelineReport& r, const std::string& row) {
  const auto* x = r.find(row);
  return x == nullptr ? std::nan("") : x->test.mean;
}

Outcome directional_replication() {
  auto& r = training_runs();
  if (!r.error.empty()) return {false, "training failed: " + r.error};
  const double base = dev_mean(r.baseline, "V only");
  std::ostringstream os;
  bool a = true, b = true;
  double min_gain = 1.0;
  // (a) and (b) for each weak type and for the combination.
  std::vector<std::pair<const PipelineReport*, std::string>> pairs;
  for (const auto* name : {"V+Bc", "V+Bn", "V+I", "V+O"}) pairs.push_back({&r.single, name});
  pairs.push_back({&r.combined, "V+W"});
  for (const auto& [rep, name] : pairs) {
    const double s1 = dev_mean(*rep, name + std::string(" stage1"));
    const double s2 = dev_mean(*rep, name + std::string(" two-stage"));
    min_gain = std::min(min_gain, s2 - base);
    a = a && s2 - base >= 0.01;
    b = b && s1 < s2;
  }
  const double st1 = dev_mean(r.student, "student stage1");
  const double st = dev_mean(r.student, "student");
  b = b && st1 < st;
  const double comb = dev_mean(r.combined, "V+W two-stage");
  const bool c = st >= comb;
  const bool fast = r.seconds_6 < 300.0;
  os << "(a) " << (a ? "ok" : "FAIL") << " V-only " << pct(base) << ", smallest two-stage gain "
     << pct(min_gain) << " pts; (b) " << (b ? "ok" : "FAIL") << " every stage-1 row below its "
     << "stage-2 row; (c) " << (c ? "ok" : "FAIL") << " student " << pct(st) << " vs combined "
     << pct(comb) << " dev (test " << pct(test_mean(r.student, "student")) << " vs "
     << pct(test_mean(r.combined, "V+W two-stage")) << "); " << fmt(r.seconds_6) << " s"
     << (fast ? "" : " (over 300 s)");
  return {a && b && c && fast, os.str()};
}

Outcome ablation_direction() {
  auto& r = training_runs();
  if (!r.error.empty()) return {false, "training failed: " + r.error};
  const double with = dev_mean(r.student, "student");
  const double without = dev_mean(r.no_context, "student");
  return {with - without > 0.0, "student dev " + pct(with) + " with context, " + pct(without) +
                                    " without; drop " + pct(with - without) + " pts"};
}

// 8 ------------------------------------------------------------------------
int sh(const std::string& cmd) {
  return std::system((cmd + " >/dev/null 2>&1").c_str());
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path().string());
  }
  return files;
}

Outcome cli_determinism() {
  if (g_cli.empty()) return {false, "no --cli given"};
  const fs::path base = g_work / "determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  io::write_file((base / "spec.json").string(),
                 R"({"n_scripts":12,"scenes_per_script":4,"turns_per_scene":6,"labeled_train":40,)"
                 R"("labeled_dev":40,"labeled_test":40,"seed":5})");
  io::write_file((base / "config.json").string(),
                 R"({"epochs_stage1":1,"epochs_stage2":2,"dim":16,"seeds":[1,2],"learning_rate":0.5,)"
                 R"("init_scale":0.3,"batch_size":8,"bundle":"fx/bundle/bundle.json"})");
  const std::string cli = "'" + g_cli + "'";
  for (const std::string run : {"run1", "run2"}) {
    const fs::path out = base / run;
    fs::create_directories(out);
    fs::copy_file(base / "config.json", out / "config.json");
    const std::string cfg = " --config " + q(out / "config.json") + " --seed 9 ";
    const std::vector<std::string> steps{
        cli + cfg + "synth --spec " + q(base / "spec.json") + " --out " + q(out / "fx"),
        cli + cfg + "parse --in " + q(out / "fx/scripts") + " --out " + q(out / "scenes.jsonl"),
        cli + cfg + "extract --in " + q(out / "fx/scripts") + " --out " + q(out / "triples.jsonl"),
        cli + cfg + "generate --triples " + q(out / "triples.jsonl") + " --n-distractors 5 --out " +
            q(out / "instances.jsonl"),
        cli + cfg + "train --data " + q(out / "fx/bundle/V.jsonl") + " --out " + q(out / "model.json"),
        cli + cfg + "eval --model " + q(out / "model.json") + " --data " + q(out / "fx/bundle/dev.jsonl") +
            " --out " + q(out / "eval.json"),
        " --config " + q(out / "config.json") + " distill --preset teacher_student_soft --out " +
            q(out / "report.json") + " --model-out " + q(out / "student.json"),
    };
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::string cmd = i + 1 == steps.size() ? cli + steps[i] : steps[i];
      if (sh(cmd) != 0) return {false, run + " step failed: " + cmd};
    }
  }
  const auto a = snapshot(base / "run1");
  const auto b = snapshot(base / "run2");
  std::size_t same = 0;
  std::string diff;
  for (const auto& [name, body] : a) {
    const auto it = b.find(name);
    if (it != b.end() && it->second == body) {
      ++same;
    } else if (diff.empty()) {
      diff = name;
    }
  }
  const bool ok = a.size() == b.size() && same == a.size() && a.count("report.json") &&
                  a.count("student.json") && a.count("model.json");
  return {ok, std::to_string(same) + "/" + std::to_string(a.size()) +
                  " artifacts byte-identical (scenes, triples, instances, bundle, checkpoints, reports)" +
                  (diff.empty() ? "" : "; first difference: " + diff)};
}

// 9 ------------------------------------------------------------------------
struct ContractTally {
  std::size_t triples = 0, instances = 0, skipped = 0, violations = 0;
};

void check_contract(const std::vector<KnowledgeTriple>& triples, std::size_t n, std::uint64_t seed,
                    ContractTally& tally) {
  const auto gen = generate_instances(triples, n, seed);
  tally.triples += triples.size();
  tally.instances += gen.instances.size();
  tally.skipped += gen.skipped.size();
  if (gen.instances.size() + gen.skipped.size() != triples.size()) ++tally.violations;
  std::map<std::string, const KnowledgeTriple*> by_key;
  for (const auto& t : triples) by_key[triple_key(t)] = &t;
  const auto strip_ws = [](std::string x) {
    std::erase_if(x, [](char c) { return c == ' ' || c == '\t' || c == '\n'; });
    return x;
  };
  for (const auto& inst : gen.instances) {
    const auto it = by_key.find(inst.id);
    if (it == by_key.end()) {
      ++tally.violations;
      continue;
    }
    const KnowledgeTriple& t = *it->second;
    bool ok = inst.options.size() == n + 1 && inst.gold < inst.options.size() &&
              inst.options[inst.gold] == t.nonverbal &&
              std::count(inst.options.begin(), inst.options.end(), t.nonverbal) == 1;
    const std::set<std::string> distinct(inst.options.begin(), inst.options.end());
    ok = ok && distinct.size() == inst.options.size();
    // The anchored span is removed: the document is the context without it,
    // up to whitespace, and is strictly shorter.
    ok = ok && inst.document.size() < t.context.size() &&
         strip_ws(inst.document) ==
             strip_ws(t.context.substr(0, t.anchor.begin) + t.context.substr(t.anchor.end));
    if (!ok) ++tally.violations;
  }
}

std::vector<KnowledgeTriple> triples_of(const std::vector<RawScript>& scripts) {
  std::vector<Scene> scenes;
  for (const auto& s : scripts) {
    auto part = parse_script(s, ParserConfig{});
    scenes.insert(scenes.end(), part.begin(), part.end());
  }
  return extract_all(scenes, ExtractConfig{}, Stoplist::default_list());
}

Outcome instance_contract() {
  ContractTally tally;
  FixtureSpec spec;
  spec.n_scripts = 60;
  spec.seed = 909;
  const auto synthetic = triples_of(synthesize_corpus(spec).scripts);
  for (std::size_t n : {1u, 5u, 11u, 20u}) check_contract(synthetic, n, 9, tally);
  for (const char* file : {"twelve_scenes.txt", "fifty_scenes.txt"}) {
    const auto path = (fs::path(CTXK_TEST_DATA) / file).string();
    const auto ts = triples_of({RawScript{fs::path(file).stem().string(), io::read_file(path), path}});
    for (std::size_t n : {1u, 2u, 5u}) check_contract(ts, n, 9, tally);
  }
  const auto golden = extract_all(golden_scene(), ExtractConfig{}, Stoplist::default_list());
  check_contract(golden, 1, 9, tally);
  return {tally.violations == 0 && tally.instances > 0 && tally.skipped > 0,
          std::to_string(tally.triples) + " triples -> " + std::to_string(tally.instances) +
              " instances + " + std::to_string(tally.skipped) + " skipped, " +
              std::to_string(tally.violations) + " violations"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_work = fs::temp_directory_path() / "ctxk_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) g_cli = argv[++i];
    else if (a == "--work" && i + 1 < argc) g_work = argv[++i];
    else if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: ctxk_acceptance --cli PATH --work DIR [--only N]...\n";
      return 2;
    }
  }
  fs::create_directories(g_work);

  struct Criterion {
    int id;
    std::string name;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "golden-scene extraction", 1.0, golden_extraction},
      {2, "extraction oracle equivalence", 10.0, oracle_equivalence},
      {3, "soft-label algebra", 0, soft_label_algebra},
      {4, "loss identity", 0, loss_identity},
      {5, "gradient correctness", 0, gradient_correctness},
      {6, "directional replication", 0, directional_replication},
      {7, "context ablation direction", 0, ablation_direction},
      {8, "CLI determinism", 0, cli_determinism},
      {9, "instance-generation contract", 0, instance_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && s >= c.limit_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.limit_s) + " s limit";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.name << ": "
              << o.detail << "  [" << std::fixed << std::setprecision(3) << s << " s]"
              << std::defaultfloat << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
