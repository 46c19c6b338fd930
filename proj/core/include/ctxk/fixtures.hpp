// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Seeded synthetic corpora with planted verbal/nonverbal regularities.
//
// The generator draws a closed artificial vocabulary and, for every
// knowledge type, a table of cue words paired with nonverbal phrases. A
// planted turn carries a cue in its utterance; with probability
// signal_strength[type] its nonverbal message is the cue's partner,
// otherwise a random phrase of the same type. Labeled target instances use
// the same cue tables with clean labels.

#ifndef CTXK_FIXTURES_HPP_
#define CTXK_FIXTURES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ctxk/knowledge.hpp"
#include "ctxk/screenplay.hpp"
#include "ctxk/trainer.hpp"

namespace ctxk {

struct FixtureSpec {
  std::size_t n_scripts = 40;
  std::size_t scenes_per_script = 6;
  std::size_t turns_per_scene = 8;
  // Indexed by KnowledgeType.
  std::array<double, 4> signal_strength{0.9, 0.9, 0.9, 0.9};
  std::size_t vocab_size = 60;
  std::uint64_t seed = 1;

  std::size_t cues_per_type = 12;
  std::size_t filler_words = 3;
  std::size_t labeled_train = 120;
  std::size_t labeled_dev = 400;
  std::size_t labeled_test = 400;
  std::size_t n_distractors = 5;

  void validate() const;
};

std::string fixture_spec_to_json(const FixtureSpec& spec);
FixtureSpec fixture_spec_from_json(std::string_view text);

// What the generator planted; compared against extraction output.
struct OracleTriple {
  KnowledgeType ktype = KnowledgeType::kBc;
  std::string verbal;
  std::string nonverbal;
  std::string script_id;
  std::string scene_id;
  bool cued = false;

  auto key() const {
    return std::tie(script_id, scene_id, ktype, verbal, nonverbal);
  }
  bool operator<(const OracleTriple& o) const { return key() < o.key(); }
  bool operator==(const OracleTriple& o) const { return key() == o.key(); }
};

struct SyntheticCorpus {
  std::vector<RawScript> scripts;
  std::vector<OracleTriple> oracle;
};

SyntheticCorpus synthesize_corpus(const FixtureSpec& spec);

// Clean labeled target sets (train, dev, test), categorized by the type of
// cue they test.
struct LabeledSets {
  std::vector<McInstance> train;
  std::vector<McInstance> dev;
  std::vector<McInstance> test;
};

LabeledSets synthesize_labeled(const FixtureSpec& spec);

// Scripts -> parse -> extract -> one weak set per knowledge type, plus the
// labeled sets.
DatasetBundle build_fixture_bundle(const FixtureSpec& spec);
DatasetBundle build_bundle(const SyntheticCorpus& corpus, LabeledSets labeled,
                           std::size_t n_distractors, std::uint64_t seed);

// A reference scene (an office exchange between Andy and Emily) with one
// physical line per turn. Used as golden test data.
std::string golden_scene_text();
Scene golden_scene();

}  // namespace ctxk

#endif  // CTXK_FIXTURES_HPP_
