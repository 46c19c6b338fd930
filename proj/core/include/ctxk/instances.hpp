// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Multiple-choice reading instances built from knowledge triples.

#ifndef CTXK_INSTANCES_HPP_
#define CTXK_INSTANCES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ctxk/knowledge.hpp"
#include "ctxk/rng.hpp"
#include "ctxk/tokenize.hpp"

namespace ctxk {

struct InstanceSource {
  std::string script_id;
  // "Bc" | "Bn" | "I" | "O" | "generic" | "labeled"
  std::string kind;
};

struct McInstance {
  std::string id;
  std::string document;
  std::string question;
  std::vector<std::string> options;
  std::size_t gold = 0;
  std::optional<std::string> category;
  InstanceSource source;
  // Document line (split on '\n') holding the verbal message, if known.
  std::optional<int> verbal_line;
  bool truncated = false;

  // Throws FormatError when gold is out of range or options repeat.
  void validate() const;
};

using PoolKey = std::pair<std::string, KnowledgeType>;

struct DistractorPool {
  PoolKey key;
  std::set<std::string> items;
};

using PoolMap = std::map<PoolKey, DistractorPool>;

PoolMap build_pools(const std::vector<KnowledgeTriple>& triples);

enum class SkipReason { kInsufficientDistractors };

struct Skipped {
  SkipReason reason = SkipReason::kInsufficientDistractors;
  std::string triple_key;
};

using GenerationResult = std::variant<McInstance, Skipped>;

// Stable identity of a triple: script/scene/type/line.segment.
std::string triple_key(const KnowledgeTriple& t);

// Context with the anchored span removed; the verbal line index is
// unchanged because an O anchor always follows its turn.
std::string remove_anchored(const KnowledgeTriple& t);

// One instance per triple: the anchored nonverbal is removed from the
// context, the verbal message becomes the question, and `n_distractors`
// distinct items of the same (script, type) pool join the gold answer.
// Options are shuffled. Throws std::invalid_argument if n_distractors < 1.
GenerationResult triple_to_instance(const KnowledgeTriple& t,
                                    const PoolMap& pools,
                                    std::size_t n_distractors, GenRng& rng);

struct GenerationSummary {
  std::vector<McInstance> instances;
  std::vector<Skipped> skipped;
};

// Per-triple streams derived from (seed, triple_key), so the output does
// not depend on processing order.
GenerationSummary generate_instances(const std::vector<KnowledgeTriple>& triples,
                                     std::size_t n_distractors,
                                     std::uint64_t seed);

enum class LengthUnit { kTokens, kCharacters };

struct TruncateOptions {
  std::size_t max_units = 0;
  LengthUnit unit = LengthUnit::kTokens;
  TokenizerMode tokenizer = TokenizerMode::kUnicodeWords;
};

std::size_t document_length(std::string_view doc, const TruncateOptions& opt);

// Drops the last document line while over the limit, or the first line when
// the last one holds the verbal message. A single remaining line that is
// still too long is cut at the limit and the instance is flagged truncated.
McInstance truncate_context(McInstance inst, const TruncateOptions& opt);

struct GenericTriple {
  std::string subject;
  std::string relation;
  std::string object;
};

enum class GenericDocMode { kEmpty, kRelation };

std::optional<GenericDocMode> parse_generic_doc_mode(std::string_view s);

// Question = subject, gold = object, document = "" or the relation name.
// Distractors come from `phrase_pool` minus the triple's own phrases.
GenerationResult generic_triple_to_instance(
    const GenericTriple& triple, const std::set<std::string>& phrase_pool,
    GenericDocMode mode, std::size_t n_distractors, GenRng& rng);

GenerationSummary generate_generic_instances(
    const std::vector<GenericTriple>& triples, GenericDocMode mode,
    std::size_t n_distractors, std::uint64_t seed);

struct CorpusCounts {
  std::map<std::string, std::size_t> per_kind;
  std::size_t total = 0;
};

CorpusCounts corpus_stats(const std::vector<KnowledgeTriple>& triples);
CorpusCounts corpus_stats(const std::vector<McInstance>& instances);

std::string instance_to_json(const McInstance& inst);
McInstance instance_from_json(std::string_view line);
GenericTriple generic_triple_from_json(std::string_view line);

}  // namespace ctxk

#endif  // CTXK_INSTANCES_HPP_
