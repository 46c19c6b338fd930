// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/fixtures.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/instances.hpp"
#include "ctxk/rng.hpp"
#include "ctxk/text.hpp"

namespace ctxk {

using nlohmann::json;

void FixtureSpec::validate() const {
  if (n_scripts == 0 || scenes_per_script == 0 || turns_per_scene == 0) {
    throw std::invalid_argument("fixture counts must be > 0");
  }
  for (double p : signal_strength) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("signal_strength must be in [0, 1]");
    }
  }
  if (vocab_size == 0 || filler_words == 0) {
    throw std::invalid_argument("vocab_size and filler_words must be > 0");
  }
  if (n_distractors == 0) throw std::invalid_argument("n_distractors must be > 0");
  if (cues_per_type < n_distractors + 1) {
    throw std::invalid_argument("cues_per_type must exceed n_distractors");
  }
  if (labeled_train == 0 || labeled_dev == 0 || labeled_test == 0) {
    throw std::invalid_argument("labeled split sizes must be > 0");
  }
}

std::string fixture_spec_to_json(const FixtureSpec& spec) {
  json j;
  j["n_scripts"] = spec.n_scripts;
  j["scenes_per_script"] = spec.scenes_per_script;
  j["turns_per_scene"] = spec.turns_per_scene;
  j["signal_strength"] = spec.signal_strength;
  j["vocab_size"] = spec.vocab_size;
  j["seed"] = spec.seed;
  j["cues_per_type"] = spec.cues_per_type;
  j["filler_words"] = spec.filler_words;
  j["labeled_train"] = spec.labeled_train;
  j["labeled_dev"] = spec.labeled_dev;
  j["labeled_test"] = spec.labeled_test;
  j["n_distractors"] = spec.n_distractors;
  return j.dump();
}

FixtureSpec fixture_spec_from_json(std::string_view body) {
  FixtureSpec s;
  try {
    const json j = json::parse(body);
    s.n_scripts = j.value("n_scripts", s.n_scripts);
    s.scenes_per_script = j.value("scenes_per_script", s.scenes_per_script);
    s.turns_per_scene = j.value("turns_per_scene", s.turns_per_scene);
    if (j.contains("signal_strength")) {
      const auto& ss = j["signal_strength"];
      if (ss.is_number()) {
        s.signal_strength.fill(ss.get<double>());
      } else {
        s.signal_strength = ss.get<std::array<double, 4>>();
      }
    }
    s.vocab_size = j.value("vocab_size", s.vocab_size);
    s.seed = j.value("seed", s.seed);
    s.cues_per_type = j.value("cues_per_type", s.cues_per_type);
    s.filler_words = j.value("filler_words", s.filler_words);
    s.labeled_train = j.value("labeled_train", s.labeled_train);
    s.labeled_dev = j.value("labeled_dev", s.labeled_dev);
    s.labeled_test = j.value("labeled_test", s.labeled_test);
    s.n_distractors = j.value("n_distractors", s.n_distractors);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad fixture spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

constexpr std::array<const char*, 16> kNames{
    "Ava", "Bram", "Cora", "Dax", "Elin", "Finn", "Gus", "Hana",
    "Ivo", "Juno", "Kit", "Lena", "Milo", "Nell", "Oren", "Pia"};

// The closed world shared by scripts and labeled sets.
struct Lexicon {
  std::vector<std::string> fillers;
  std::vector<std::string> places;
  // [type][m]: cue word and its partner answer. For O the answer is
  // "verb the object" and is prefixed by the actor's name when rendered.
  std::array<std::vector<std::string>, 4> cues;
  std::array<std::vector<std::string>, 4> answers;
};

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

Lexicon make_lexicon(const FixtureSpec& spec) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                  "p", "r", "s", "t", "v", "z", "sh", "br"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  GenRng rng = GenRng(spec.seed).derive("lexicon");
  const Stoplist stop = Stoplist::default_list();
  std::set<std::string> used;
  auto word = [&]() {
    for (;;) {
      const std::size_t syllables = 2 + rng.uniform_below(2);
      std::string w;
      for (std::size_t i = 0; i < syllables; ++i) {
        w += kOnsets[rng.uniform_below(std::size(kOnsets))];
        w += kVowels[rng.uniform_below(std::size(kVowels))];
      }
      if (stop.matches(w) || w == "the") continue;
      if (used.insert(w).second) return w;
    }
  };
  Lexicon lex;
  for (std::size_t i = 0; i < spec.vocab_size; ++i) lex.fillers.push_back(word());
  for (std::size_t i = 0; i < 8; ++i) lex.places.push_back(capitalize(word()));
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t m = 0; m < spec.cues_per_type; ++m) {
      lex.cues[t].push_back(word());
      switch (static_cast<KnowledgeType>(t)) {
        case KnowledgeType::kBc: lex.answers[t].push_back(word() + " " + word()); break;
        case KnowledgeType::kBn:
        case KnowledgeType::kI: lex.answers[t].push_back(word()); break;
        case KnowledgeType::kO: lex.answers[t].push_back(word() + " the " + word()); break;
      }
    }
  }
  return lex;
}

std::string render_o(const std::string& actor, const std::string& answer) {
  return actor + " " + answer + ".";
}

// Filler words with the cue at a random position; returns the words.
std::vector<std::string> utterance_words(const Lexicon& lex, const FixtureSpec& spec,
                                         const std::string& cue, GenRng& rng) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < spec.filler_words; ++i) {
    words.push_back(lex.fillers[rng.uniform_below(lex.fillers.size())]);
  }
  const auto at = static_cast<std::ptrdiff_t>(rng.uniform_below(words.size() + 1));
  words.insert(words.begin() + at, cue);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

struct PlannedTurn {
  std::string speaker;
  std::vector<std::string> lines;
  std::optional<OracleTriple> triple;
  bool plain_name = true;
};

std::string filler_turn(const Lexicon& lex, const FixtureSpec& spec,
                        const std::string& speaker, GenRng& rng) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < spec.filler_words + 1; ++i) {
    words.push_back(lex.fillers[rng.uniform_below(lex.fillers.size())]);
  }
  return speaker + ": " + join_words(words) + ".";
}

std::string make_scene(const Lexicon& lex, const FixtureSpec& spec,
                       const std::string& script_id, const std::string& scene_id,
                       GenRng& rng, std::vector<OracleTriple>& oracle) {
  const auto pick = rng.sample_indices(kNames.size(), 3);
  std::vector<std::string> cast;
  for (auto i : pick) cast.emplace_back(kNames[i]);

  std::vector<PlannedTurn> turns;
  std::set<std::string> bn_spans;
  const std::size_t offset = rng.uniform_below(4);
  for (std::size_t k = 0; k < spec.turns_per_scene; ++k) {
    const auto type = kAllKnowledgeTypes[(k + offset) % 4];
    const auto t = static_cast<std::size_t>(type);
    std::string speaker = cast[rng.uniform_below(cast.size())];
    const std::size_t m = rng.uniform_below(spec.cues_per_type);
    const bool cued = rng.bernoulli(spec.signal_strength[t]);
    const std::size_t a = cued ? m : rng.uniform_below(spec.cues_per_type);
    const std::string& answer = lex.answers[t][a];
    const auto words = utterance_words(lex, spec, lex.cues[t][m], rng);
    const std::string utt = join_words(words) + ".";

    PlannedTurn pt;
    OracleTriple o;
    o.ktype = type;
    o.script_id = script_id;
    o.scene_id = scene_id;
    o.cued = a == m;
    switch (type) {
      case KnowledgeType::kBc:
        pt.lines.push_back(speaker + " (" + answer + "): " + utt);
        o.verbal = speaker + ": " + utt;
        o.nonverbal = answer;
        break;
      case KnowledgeType::kBn: {
        if (bn_spans.count(speaker + " " + answer) != 0) {
          for (const auto& c : cast) {
            if (bn_spans.count(c + " " + answer) == 0) {
              speaker = c;
              break;
            }
          }
        }
        const std::string span = speaker + " " + answer;
        if (!bn_spans.insert(span).second) {
          pt.speaker = speaker;
          pt.lines.push_back(filler_turn(lex, spec, speaker, rng));
          turns.push_back(std::move(pt));
          continue;
        }
        pt.plain_name = false;
        pt.lines.push_back(span + ": " + utt);
        o.verbal = speaker + ": " + utt;
        o.nonverbal = answer;
        break;
      }
      case KnowledgeType::kI: {
        const auto cue_at = static_cast<std::size_t>(
            std::find(words.begin(), words.end(), lex.cues[t][m]) - words.begin());
        std::string before;
        for (std::size_t i = 0; i <= cue_at; ++i) before += words[i] + " ";
        std::string after;
        for (std::size_t i = cue_at + 1; i < words.size(); ++i) after += " " + words[i];
        after += ".";
        pt.lines.push_back(speaker + ": " + before + "(" + answer + ")" + after);
        o.verbal = speaker + ": " + text::collapse_whitespace(" " + before + after);
        o.nonverbal = answer;
        break;
      }
      case KnowledgeType::kO:
        pt.lines.push_back(speaker + ": " + utt);
        pt.lines.push_back(render_o(speaker, answer));
        o.verbal = speaker + ": " + utt;
        o.nonverbal = render_o(speaker, answer);
        break;
    }
    pt.speaker = speaker;
    pt.triple = std::move(o);
    turns.push_back(std::move(pt));
  }

  // A Bn span is only recognizable when the bare name speaks elsewhere.
  std::set<std::string> plain;
  for (const auto& pt : turns) {
    if (pt.plain_name) plain.insert(pt.speaker);
  }
  std::vector<std::string> intro;
  for (const auto& pt : turns) {
    if (!pt.plain_name && plain.insert(pt.speaker).second) {
      intro.push_back(filler_turn(lex, spec, pt.speaker, rng));
    }
  }

  std::string out = "INT. " + lex.places[rng.uniform_below(lex.places.size())] + " - DAY\n";
  for (const auto& l : intro) out += l + "\n";
  for (auto& pt : turns) {
    for (const auto& l : pt.lines) out += l + "\n";
    if (pt.triple) oracle.push_back(std::move(*pt.triple));
  }
  return out;
}

std::string script_name(std::size_t i) {
  std::string n = std::to_string(i);
  while (n.size() < 4) n.insert(n.begin(), '0');
  return "synth_" + n;
}

const char* question_for(KnowledgeType t) {
  switch (t) {
    case KnowledgeType::kBc: return "How does {} sound?";
    case KnowledgeType::kBn: return "What is {} doing while talking?";
    case KnowledgeType::kI: return "How does {} react?";
    case KnowledgeType::kO: return "What happens after {} speaks?";
  }
  return "";
}

std::vector<McInstance> labeled_split(const Lexicon& lex, const FixtureSpec& spec,
                                      const std::string& split, std::size_t count) {
  GenRng rng = GenRng(spec.seed).derive("labeled/" + split);
  std::vector<McInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto type = kAllKnowledgeTypes[i % 4];
    const auto t = static_cast<std::size_t>(type);
    const auto pick = rng.sample_indices(kNames.size(), 2);
    const std::string speaker = kNames[pick[0]];
    const std::string other = kNames[pick[1]];
    const std::size_t m = rng.uniform_below(spec.cues_per_type);

    std::string doc = speaker + ": " + join_words(utterance_words(lex, spec, lex.cues[t][m], rng)) + ".";
    // A cue of another type adds noise the reader has to ignore.
    const std::size_t t2 = (t + 1 + rng.uniform_below(3)) % 4;
    const std::size_t m2 = rng.uniform_below(spec.cues_per_type);
    doc += "\n" + other + ": " + join_words(utterance_words(lex, spec, lex.cues[t2][m2], rng)) + ".";

    std::string question = question_for(type);
    question.replace(question.find("{}"), 2, speaker);

    std::vector<std::size_t> others;
    for (std::size_t a = 0; a < spec.cues_per_type; ++a) {
      if (a != m) others.push_back(a);
    }
    const auto draws = rng.sample_indices(others.size(), spec.n_distractors);
    std::vector<std::size_t> answers{m};
    for (auto d : draws) answers.push_back(others[d]);
    rng.shuffle(answers);

    McInstance inst;
    inst.id = split + "/" + std::to_string(i);
    inst.document = std::move(doc);
    inst.question = std::move(question);
    for (std::size_t k = 0; k < answers.size(); ++k) {
      const std::string& a = lex.answers[t][answers[k]];
      inst.options.push_back(type == KnowledgeType::kO ? render_o(speaker, a) : a);
      if (answers[k] == m) inst.gold = k;
    }
    inst.category = std::string(to_string(type));
    inst.source.kind = "labeled";
    inst.verbal_line = 0;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

SyntheticCorpus synthesize_corpus(const FixtureSpec& spec) {
  spec.validate();
  const Lexicon lex = make_lexicon(spec);
  SyntheticCorpus corpus;
  for (std::size_t s = 0; s < spec.n_scripts; ++s) {
    RawScript script;
    script.script_id = script_name(s);
    GenRng rng = GenRng(spec.seed).derive("script/" + script.script_id);
    for (std::size_t c = 0; c < spec.scenes_per_script; ++c) {
      if (c > 0) script.text += "\n";
      script.text += make_scene(lex, spec, script.script_id,
                                script.script_id + "#" + std::to_string(c), rng,
                                corpus.oracle);
    }
    corpus.scripts.push_back(std::move(script));
  }
  return corpus;
}

LabeledSets synthesize_labeled(const FixtureSpec& spec) {
  spec.validate();
  const Lexicon lex = make_lexicon(spec);
  return {labeled_split(lex, spec, "V", spec.labeled_train),
          labeled_split(lex, spec, "dev", spec.labeled_dev),
          labeled_split(lex, spec, "test", spec.labeled_test)};
}

DatasetBundle build_bundle(const SyntheticCorpus& corpus, LabeledSets labeled,
                           std::size_t n_distractors, std::uint64_t seed) {
  const ParserConfig pcfg;
  const Stoplist stop = Stoplist::default_list();
  std::vector<KnowledgeTriple> triples;
  for (const auto& script : corpus.scripts) {
    for (auto& t : extract_all(parse_script(script, pcfg), ExtractConfig{}, stop)) {
      triples.push_back(std::move(t));
    }
  }
  auto gen = generate_instances(triples, n_distractors, seed);
  DatasetBundle b;
  b.V = std::move(labeled.train);
  b.dev = std::move(labeled.dev);
  b.test = std::move(labeled.test);
  for (auto type : kAllKnowledgeTypes) {
    b.weak_names.emplace_back(to_string(type));
    b.W.emplace_back();
  }
  for (auto& inst : gen.instances) {
    const auto type = parse_knowledge_type(inst.source.kind);
    if (!type) throw FormatError("weak instance with unknown kind " + inst.source.kind);
    b.W[static_cast<std::size_t>(*type)].push_back(std::move(inst));
  }
  return b;
}

DatasetBundle build_fixture_bundle(const FixtureSpec& spec) {
  return build_bundle(synthesize_corpus(spec), synthesize_labeled(spec), spec.n_distractors,
                      spec.seed);
}

std::string golden_scene_text() {
  return "Interior. Runaway office. Day.\n"
         "Andy: I tried to ask her, but...\n"
         "Emily: You never ask Miranda. Anything. (sighs) All right, I’ll take care of "
         "the other stuff. You go to Calvin Klein.\n"
         "Andy: Me?\n"
         "Emily: I’m sorry. Do you have a prior commitment? Is there some hideous pants "
         "convention?\n"
         "Andy: So I just, what, go down to the Calvin Klein store and ask them...\n"
         "Emily rolls her eyes so hard they almost eject from her head.\n"
         "Emily: You’re not going to the store.\n"
         "Andy: Of course not. I’m going...(thinking)...to his house.\n"
         "Emily (oh god): You are catching on quickly. We always send assistants to a "
         "designer’s home on their very first day. You’re going to his showroom. "
         "I’ll give you the address.\n"
         "Andy: Sorry. Got it. What’s the nearest subway stop?\n"
         "Emily: Good God. You do not. Under any circumstances. Take public transportation.\n"
         "Andy: I don’t?\n";
}

Scene golden_scene() {
  return parse_scene(golden_scene_text(), ParserConfig{}, "golden#0", "golden");
}

}  // namespace ctxk
