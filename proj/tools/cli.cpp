// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/evaluation.hpp"
#include "ctxk/fixtures.hpp"
#include "ctxk/instances.hpp"
#include "ctxk/io.hpp"
#include "ctxk/knowledge.hpp"
#include "ctxk/reader.hpp"
#include "ctxk/screenplay.hpp"
#include "ctxk/trainer.hpp"

namespace ctxk::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Everything a subcommand may read from --config, after flag overrides.
struct PipelineConfig {
  TrainConfig train;
  ParserConfig parser;
  std::string stoplist = "default";
  bool stoplist_substring = false;
  bool bn_raw_prefix = false;
  std::size_t n_distractors = 5;
  std::size_t max_units = 0;
  LengthUnit unit = LengthUnit::kTokens;
  std::string bundle;
  std::string out_dir;
};

PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig pc;
  if (path.empty()) return pc;
  const std::string body = io::read_file(path);
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw FormatError("bad config " + path + ": " + e.what());
  }
  pc.train = train_config_from_json(body);
  try {
    pc.stoplist = j.value("stoplist", pc.stoplist);
    pc.stoplist_substring = j.value("stoplist_substring", pc.stoplist_substring);
    pc.bn_raw_prefix = j.value("bn_raw_prefix", pc.bn_raw_prefix);
    pc.n_distractors = j.value("n_distractors", pc.n_distractors);
    pc.max_units = j.value("max_units", pc.max_units);
    const std::string unit = j.value("unit", std::string("tokens"));
    if (unit != "tokens" && unit != "characters") throw FormatError("unit: " + unit);
    pc.unit = unit == "tokens" ? LengthUnit::kTokens : LengthUnit::kCharacters;
    pc.out_dir = j.value("out_dir", pc.out_dir);
    if (j.contains("bundle")) {
      pc.bundle = (fs::path(path).parent_path() / j["bundle"].get<std::string>()).string();
    }
    if (j.contains("parser")) {
      const auto& p = j["parser"];
      pc.parser.heading_lexicon = p.value("heading_lexicon", pc.parser.heading_lexicon);
      pc.parser.max_speaker_span_chars =
          p.value("max_speaker_span_chars", pc.parser.max_speaker_span_chars);
      pc.parser.colon_chars = p.value("colon_chars", pc.parser.colon_chars);
    }
  } catch (const json::exception& e) {
    throw FormatError("bad config " + path + ": " + e.what());
  }
  pc.parser.validate();
  return pc;
}

json parser_json(const ParserConfig& p) {
  return {{"heading_lexicon", p.heading_lexicon},
          {"max_speaker_span_chars", p.max_speaker_span_chars},
          {"colon_chars", p.colon_chars}};
}

std::string hash_of(const json& j) { return config_hash(j.dump()); }

std::string error_line(std::string_view kind, std::string_view message,
                       std::string_view path = {}) {
  json j;
  j["error"] = std::string(kind);
  j["message"] = std::string(message);
  if (!path.empty()) j["path"] = std::string(path);
  return j.dump();
}

std::vector<McInstance> read_instances(const std::string& path) {
  std::vector<McInstance> out;
  for (const auto& rec : io::read_records(path)) out.push_back(instance_from_json(rec));
  return out;
}

std::vector<KnowledgeTriple> read_triples(const std::string& path) {
  std::vector<KnowledgeTriple> out;
  for (const auto& rec : io::read_records(path)) out.push_back(triple_from_json(rec));
  return out;
}

std::vector<RawScript> read_scripts(const std::string& in) {
  std::vector<RawScript> scripts;
  for (const auto& file : io::list_inputs(in)) {
    RawScript s;
    s.script_id = fs::path(file).stem().string();
    s.source_path = file;
    s.text = io::read_file(file);
    scripts.push_back(std::move(s));
  }
  return scripts;
}

// Flag combinations CLI11 cannot express; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json counts_json(const CorpusCounts& c) {
  return {{"per_kind", c.per_kind}, {"total", c.total}};
}

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& argv);

 private:
  std::string out_path(const std::string& p) const {
    if (out_dir_.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(out_dir_) / p).string();
  }
  void finish_config();

  void cmd_parse();
  void cmd_extract();
  void cmd_generate();
  void cmd_stats();
  void cmd_train();
  void cmd_distill();
  void cmd_eval();
  void cmd_synth();

  std::ostream& out_;
  std::ostream& err_;

  std::string config_path_;
  std::uint64_t seed_ = 1;
  bool seed_given_ = false;
  std::size_t threads_ = 0;
  std::string out_dir_;
  PipelineConfig pc_;

  // Subcommand options.
  std::string in_;
  std::string out_file_;
  std::string stoplist_;
  bool bn_raw_prefix_ = false;
  bool counts_ = false;
  std::optional<std::size_t> n_distractors_;
  std::optional<std::size_t> max_units_;
  std::string unit_;
  std::string tokenizer_;
  bool generic_ = false;
  std::string doc_mode_ = "empty_doc";
  std::string skipped_out_;
  std::string data_;
  std::string init_;
  std::string soft_;
  std::optional<int> epochs_;
  std::optional<double> lr_;
  std::optional<std::size_t> dim_;
  std::string preset_;
  std::string bundle_;
  std::string model_out_;
  std::string model_;
  std::string spec_;
};

void App::finish_config() {
  pc_ = load_pipeline_config(config_path_);
  if (out_dir_.empty()) {
    if (const char* env = std::getenv("CTXK_OUT_DIR"); env != nullptr) out_dir_ = env;
  }
  if (out_dir_.empty()) out_dir_ = pc_.out_dir;
  if (threads_ == 0) {
    if (const char* env = std::getenv("CTXK_THREADS"); env != nullptr) {
      threads_ = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
    }
  }
  pc_.train.threads = threads_ == 0 ? pc_.train.threads : threads_;
  if (seed_given_) {
    pc_.train.seed = seed_;
  } else {
    seed_ = pc_.train.seed;
  }
  if (!stoplist_.empty()) pc_.stoplist = stoplist_;
  if (bn_raw_prefix_) pc_.bn_raw_prefix = true;
  if (n_distractors_) pc_.n_distractors = *n_distractors_;
  if (max_units_) pc_.max_units = *max_units_;
  if (!unit_.empty()) pc_.unit = unit_ == "tokens" ? LengthUnit::kTokens : LengthUnit::kCharacters;
  if (!tokenizer_.empty()) pc_.train.tokenizer = *parse_tokenizer_mode(tokenizer_);
  if (lr_) pc_.train.learning_rate = *lr_;
  if (dim_) pc_.train.dim = static_cast<int>(*dim_);
  if (!bundle_.empty()) pc_.bundle = bundle_;
  pc_.train.validate();
}

void App::cmd_parse() {
  const json cfg = {{"command", "parse"}, {"parser", parser_json(pc_.parser)}, {"seed", seed_}};
  const std::string hash = hash_of(cfg);
  std::vector<std::string> records;
  std::map<std::string, std::size_t> kinds{{"heading", 0}, {"turn", 0}, {"action", 0}};
  const auto scripts = read_scripts(in_);
  for (const auto& script : scripts) {
    for (const auto& scene : parse_script(script, pc_.parser)) {
      for (const auto& line : scene.lines) ++kinds[std::string(to_string(line.kind()))];
      records.push_back(scene_to_json(scene));
    }
  }
  io::write_jsonl(out_path(out_file_), io::meta_header("ctxk.scenes", hash, seed_), records);
  out_ << json{{"scripts", scripts.size()}, {"scenes", records.size()}, {"lines", kinds},
               {"config_hash", hash}}
              .dump()
       << '\n';
}

void App::cmd_extract() {
  if (out_file_.empty() && !counts_) throw UsageError("extract needs --out or --counts");
  const json cfg = {{"command", "extract"},
                    {"parser", parser_json(pc_.parser)},
                    {"stoplist", pc_.stoplist},
                    {"stoplist_substring", pc_.stoplist_substring},
                    {"bn_raw_prefix", pc_.bn_raw_prefix},
                    {"seed", seed_}};
  const std::string hash = hash_of(cfg);
  Stoplist stop = Stoplist::load(pc_.stoplist);
  stop.set_substring_match(pc_.stoplist_substring);
  ExtractConfig ecfg;
  ecfg.bn_raw_prefix = pc_.bn_raw_prefix;
  ExtractStats stats;
  std::vector<KnowledgeTriple> triples;
  for (const auto& script : read_scripts(in_)) {
    for (auto& t : extract_all(parse_script(script, pc_.parser), ecfg, stop, &stats)) {
      triples.push_back(std::move(t));
    }
  }
  if (!out_file_.empty()) {
    std::vector<std::string> records;
    records.reserve(triples.size());
    for (const auto& t : triples) records.push_back(triple_to_json(t));
    io::write_jsonl(out_path(out_file_), io::meta_header("ctxk.triples", hash, seed_), records);
  }
  if (counts_) {
    // Per-type totals plus the union, one object.
    json c = counts_json(corpus_stats(triples));
    c["config_hash"] = hash;
    out_ << c.dump() << '\n';
    return;
  }
  json stoplisted;
  for (auto t : kAllKnowledgeTypes) {
    stoplisted[std::string(to_string(t))] = stats.stoplisted[static_cast<std::size_t>(t)];
  }
  out_ << json{{"triples", triples.size()},
               {"per_kind", corpus_stats(triples).per_kind},
               {"stoplisted", stoplisted},
               {"config_hash", hash}}
              .dump()
       << '\n';
}

void App::cmd_generate() {
  json cfg = {{"command", "generate"},
              {"n_distractors", pc_.n_distractors},
              {"max_units", pc_.max_units},
              {"unit", pc_.unit == LengthUnit::kTokens ? "tokens" : "characters"},
              {"tokenizer", std::string(to_string(pc_.train.tokenizer))},
              {"seed", seed_}};
  if (generic_) {
    cfg["generic"] = true;
    cfg["doc_mode"] = doc_mode_;
  }
  const std::string hash = hash_of(cfg);
  GenerationSummary gen;
  std::size_t n_triples = 0;
  if (generic_) {
    const auto mode = parse_generic_doc_mode(doc_mode_);
    if (!mode) throw std::invalid_argument("unknown --doc-mode " + doc_mode_);
    std::vector<GenericTriple> triples;
    for (const auto& rec : io::read_records(in_)) triples.push_back(generic_triple_from_json(rec));
    n_triples = triples.size();
    gen = generate_generic_instances(triples, *mode, pc_.n_distractors, seed_);
  } else {
    const auto triples = read_triples(in_);
    n_triples = triples.size();
    gen = generate_instances(triples, pc_.n_distractors, seed_);
  }
  std::size_t truncated = 0;
  std::vector<std::string> records;
  for (auto& inst : gen.instances) {
    if (pc_.max_units > 0) {
      inst = truncate_context(std::move(inst), {pc_.max_units, pc_.unit, pc_.train.tokenizer});
      if (inst.truncated) ++truncated;
    }
    records.push_back(instance_to_json(inst));
  }
  io::write_jsonl(out_path(out_file_), io::meta_header("ctxk.instances", hash, seed_), records);
  if (!skipped_out_.empty()) {
    std::vector<std::string> skipped;
    for (const auto& s : gen.skipped) {
      skipped.push_back(json{{"triple_key", s.triple_key}, {"reason", "insufficient_distractors"}}.dump());
    }
    io::write_jsonl(out_path(skipped_out_), io::meta_header("ctxk.skipped", hash, seed_), skipped);
  }
  out_ << json{{"triples", n_triples},
               {"instances", gen.instances.size()},
               {"skipped", gen.skipped.size()},
               {"truncated", truncated},
               {"config_hash", hash}}
              .dump()
       << '\n';
}

void App::cmd_stats() {
  const auto records = io::read_records(in_);
  CorpusCounts counts;
  std::string what = "empty";
  if (!records.empty()) {
    const json first = json::parse(records.front());
    if (first.contains("options")) {
      std::vector<McInstance> instances;
      for (const auto& r : records) instances.push_back(instance_from_json(r));
      counts = corpus_stats(instances);
      what = "instances";
    } else {
      std::vector<KnowledgeTriple> triples;
      for (const auto& r : records) triples.push_back(triple_from_json(r));
      counts = corpus_stats(triples);
      what = "triples";
    }
  } else {
    counts = corpus_stats(std::vector<KnowledgeTriple>{});
  }
  json j = counts_json(counts);
  j["records"] = what;
  if (!out_file_.empty()) io::write_file(out_path(out_file_), j.dump(2) + "\n");
  out_ << j.dump() << '\n';
}

void App::cmd_train() {
  TrainConfig cfg = pc_.train;
  const int epochs = epochs_ ? *epochs_ : cfg.epochs_stage2;
  json jc = json::parse(train_config_to_json(cfg));
  jc["command"] = "train";
  jc["epochs"] = epochs;
  jc["init"] = init_.empty() ? "random" : fs::path(init_).filename().string();
  jc["soft_labels"] = !soft_.empty();
  const std::string hash = hash_of(jc);

  const auto data = read_instances(data_);
  if (data.empty()) throw std::invalid_argument("training data is empty");
  ReaderParams params;
  if (!init_.empty()) {
    params = load_checkpoint(init_);
  } else {
    params = init_params(Vocab::build(data, cfg.tokenizer), cfg.dim, cfg.init_scale,
                         GenRng(cfg.seed).derive("init").next_u64(), cfg.tokenizer);
  }
  std::vector<LabelVector> labels;
  if (soft_.empty()) {
    for (const auto& inst : data) labels.push_back(LabelVector::hard(inst.options.size(), inst.gold));
  } else {
    SoftLabelMap soft;
    for (const auto& rec : io::read_records(soft_)) {
      const json j = json::parse(rec);
      soft[j.at("instance_id").get<std::string>()] = {j.at("s").get<std::vector<double>>()};
    }
    for (const auto& inst : data) {
      const auto it = soft.find(inst.id);
      if (it == soft.end()) throw FormatError("no soft label for " + inst.id);
      labels.push_back(it->second);
    }
  }
  TrainLog log;
  params = train_on(data, labels, std::move(params), cfg, epochs, "train", &log);
  save_checkpoint(out_path(out_file_), params, hash);
  out_ << json{{"instances", data.size()},
               {"epochs", epochs},
               {"epoch_loss", log.epoch_loss},
               {"train_accuracy", accuracy(params, data).accuracy},
               {"config_hash", hash}}
              .dump()
       << '\n';
}

void App::cmd_distill() {
  const auto preset = parse_preset(preset_);
  if (!preset) throw std::invalid_argument("unknown preset " + preset_);
  if (pc_.bundle.empty()) throw std::invalid_argument("no bundle given (--bundle or config)");
  TrainConfig cfg = pc_.train;
  if (seed_given_) cfg.seeds = {seed_};
  const DatasetBundle bundle = load_bundle(pc_.bundle);
  const PipelineReport report = run_pipeline(*preset, bundle, cfg);
  io::write_file(out_path(out_file_), pipeline_report_to_json(report) + "\n");
  if (!model_out_.empty()) {
    ReaderParams model;
    run_preset_once(*preset, bundle, cfg, cfg.seeds.front(), &model);
    save_checkpoint(out_path(model_out_), model, report.config_hash);
  }
  out_ << pipeline_report_table(report);
}

void App::cmd_eval() {
  std::string hash;
  const ReaderParams params = load_checkpoint(model_, &hash);
  const auto data = read_instances(data_);
  const EvalReport report = per_category(params, data);
  const std::string body = eval_report_to_json(report);
  if (!out_file_.empty()) io::write_file(out_path(out_file_), body + "\n");
  out_ << eval_report_table(report);
}

void App::cmd_synth() {
  FixtureSpec spec;
  if (!spec_.empty()) spec = fixture_spec_from_json(io::read_file(spec_));
  if (seed_given_) spec.seed = seed_;
  spec.validate();
  json jc = json::parse(fixture_spec_to_json(spec));
  jc["command"] = "synth";
  const std::string hash = hash_of(jc);
  const std::string header = io::meta_header("ctxk.fixture", hash, spec.seed);
  const fs::path dir = out_path(out_file_);
  const SyntheticCorpus corpus = synthesize_corpus(spec);
  for (const auto& script : corpus.scripts) {
    io::write_file((dir / "scripts" / (script.script_id + ".txt")).string(), script.text);
  }
  std::vector<std::string> oracle;
  for (const auto& o : corpus.oracle) {
    oracle.push_back(json{{"ktype", std::string(to_string(o.ktype))},
                          {"verbal", o.verbal},
                          {"nonverbal", o.nonverbal},
                          {"script_id", o.script_id},
                          {"scene_id", o.scene_id},
                          {"cued", o.cued}}
                         .dump());
  }
  io::write_jsonl((dir / "oracle.jsonl").string(), header, oracle);
  const DatasetBundle bundle =
      build_bundle(corpus, synthesize_labeled(spec), spec.n_distractors, spec.seed);
  save_bundle((dir / "bundle").string(), bundle, header);
  io::write_file((dir / "spec.json").string(), json::parse(fixture_spec_to_json(spec)).dump(2) + "\n");
  json summary{{"scripts", corpus.scripts.size()}, {"oracle_triples", oracle.size()},
               {"V", bundle.V.size()}, {"dev", bundle.dev.size()}, {"test", bundle.test.size()},
               {"config_hash", hash}};
  for (std::size_t i = 0; i < bundle.W.size(); ++i) summary["W_" + bundle.weak_names[i]] = bundle.W[i].size();
  out_ << summary.dump() << '\n';
}

int App::run(const std::vector<std::string>& argv) {
  CLI::App app{"ctxk: contextualized knowledge from screenplays"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--config", config_path_, "JSON pipeline config");
  app.add_option_function<std::uint64_t>(
      "--seed", [this](std::uint64_t s) { seed_ = s; seed_given_ = true; }, "Random seed");
  app.add_option("--threads", threads_, "Worker threads (env CTXK_THREADS)");
  app.add_option("--out-dir", out_dir_, "Base directory for relative outputs (env CTXK_OUT_DIR)");

  auto* parse = app.add_subcommand("parse", "Split scripts into scenes and classify lines");
  parse->add_option("--in", in_, "Script file or directory")->required();
  parse->add_option("--out", out_file_, "Scenes JSONL")->required();

  auto* extract = app.add_subcommand("extract", "Extract knowledge triples");
  extract->add_option("--in", in_, "Script file or directory")->required();
  extract->add_option("--out", out_file_, "Triples JSONL");
  extract->add_flag("--counts", counts_, "Print per-type totals only");
  extract->add_option("--stoplist", stoplist_, "\"default\" or a file");
  extract->add_flag("--bn-raw-prefix", bn_raw_prefix_, "Accept Bn names without a space boundary");

  auto* generate = app.add_subcommand("generate", "Turn triples into multiple-choice instances");
  generate->add_option("--in,--triples", in_, "Triples JSONL")->required();
  generate->add_option("--out", out_file_, "Instances JSONL")->required();
  generate->add_option("--n-distractors", n_distractors_, "Distractors per instance");
  generate->add_option("--max-units", max_units_, "Truncate documents to this length (0 = off)");
  generate->add_option("--unit", unit_, "tokens or characters")
      ->check(CLI::IsMember({"tokens", "characters"}));
  generate->add_option("--tokenizer", tokenizer_, "unicode_words or characters")
      ->check(CLI::IsMember({"unicode_words", "characters"}));
  generate->add_flag("--generic", generic_, "Input is (subject, relation, object) triples");
  generate->add_option("--doc-mode", doc_mode_, "empty_doc or relation_doc")
      ->check(CLI::IsMember({"empty_doc", "relation_doc"}));
  generate->add_option("--skipped-out", skipped_out_, "Write skipped triple keys here");

  auto* stats = app.add_subcommand("stats", "Per-type counts of triples or instances");
  stats->add_option("--in", in_, "Triples or instances JSONL")->required();
  stats->add_option("--out", out_file_, "Write the counts as JSON");

  auto* train = app.add_subcommand("train", "Train a reader on one instance file");
  train->add_option("--data", data_, "Instances JSONL")->required();
  train->add_option("--out", out_file_, "Checkpoint path")->required();
  train->add_option("--init", init_, "Start from this checkpoint");
  train->add_option("--soft-labels", soft_, "Soft labels JSONL (instance_id, s)");
  train->add_option("--epochs", epochs_, "Epochs (default epochs_stage2)");
  train->add_option("--lr", lr_, "Learning rate");
  train->add_option("--dim", dim_, "Embedding dimension");
  train->add_option("--tokenizer", tokenizer_, "unicode_words or characters")
      ->check(CLI::IsMember({"unicode_words", "characters"}));

  auto* distill = app.add_subcommand("distill", "Run a training preset over all seeds");
  distill->add_option("--preset", preset_, "Preset name")->required()
      ->check(CLI::IsMember(preset_names()));
  distill->add_option("--bundle", bundle_, "bundle.json manifest");
  distill->add_option("--out", out_file_, "Report JSON")->required();
  distill->add_option("--model-out", model_out_, "Checkpoint of the first seed's final model");

  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on instances");
  eval->add_option("--model", model_, "Checkpoint")->required();
  eval->add_option("--data", data_, "Instances JSONL")->required();
  eval->add_option("--out", out_file_, "Report JSON");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and dataset bundle");
  synth->add_option("--spec", spec_, "Fixture spec JSON");
  synth->add_option("--out", out_file_, "Output directory")->required();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out_ << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out_ << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err_ << app.help();
    err_ << error_line("usage", e.what()) << '\n';
    return kExitUsage;
  }

  try {
    finish_config();
    if (parse->parsed()) cmd_parse();
    if (extract->parsed()) cmd_extract();
    if (generate->parsed()) cmd_generate();
    if (stats->parsed()) cmd_stats();
    if (train->parsed()) cmd_train();
    if (distill->parsed()) cmd_distill();
    if (eval->parsed()) cmd_eval();
    if (synth->parsed()) cmd_synth();
  } catch (const UsageError& e) {
    err_ << error_line("usage", e.what()) << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err_ << error_line("io", e.what(), e.path()) << '\n';
    return kExitFailure;
  } catch (const DecodeError& e) {
    json j = json::parse(error_line("decode", e.what()));
    j["offset"] = e.offset();
    err_ << j.dump() << '\n';
    return kExitFailure;
  } catch (const NumericFault& e) {
    err_ << error_line("numeric", e.what()) << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err_ << error_line("failure", e.what()) << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err) {
  App app(out, err);
  return app.run(argv);
}

}  // namespace ctxk::cli
