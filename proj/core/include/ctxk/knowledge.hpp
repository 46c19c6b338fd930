// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Extraction of (verbal, context, nonverbal) triples from parsed scenes.
//
// Four knowledge types, by where the nonverbal message sits:
//   Bc  parenthetical between speaker name and colon
//   Bn  free text after a known speaker name inside the first span
//   I   parenthetical inside the utterance
//   O   action line, paired with the nearest preceding turn

#ifndef CTXK_KNOWLEDGE_HPP_
#define CTXK_KNOWLEDGE_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxk/screenplay.hpp"

namespace ctxk {

enum class KnowledgeType { kBc = 0, kBn = 1, kI = 2, kO = 3 };

inline constexpr std::array<KnowledgeType, 4> kAllKnowledgeTypes{
    KnowledgeType::kBc, KnowledgeType::kBn, KnowledgeType::kI,
    KnowledgeType::kO};

std::string_view to_string(KnowledgeType t);
std::optional<KnowledgeType> parse_knowledge_type(std::string_view s);

// Where a nonverbal message sits in its scene context.
//   line     index into the context lines (heading excluded)
//   segment  index into TurnLine::segments for I, -1 otherwise
//   begin/end byte range in the context text covering the span that is
//            removed when building a reading instance
struct Anchor {
  int line = 0;
  int segment = -1;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Anchor&) const = default;
};

struct KnowledgeTriple {
  KnowledgeType ktype = KnowledgeType::kBc;
  std::string verbal;
  std::string nonverbal;
  // Scene text without the heading line.
  std::string context;
  Anchor anchor;
  // Line in the context holding the verbal message.
  int verbal_line = 0;
  std::string script_id;
  std::string scene_id;
};

class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(const std::vector<std::string>& entries,
                    bool substring_match = false);

  // The screenwriting terms shipped with the library.
  static Stoplist default_list();
  // One entry per line; '#' starts a comment.
  static Stoplist from_text(std::string_view text);
  // "default" selects default_list(); anything else is read as a file.
  static Stoplist load(const std::string& spec);

  bool matches(std::string_view candidate) const;
  std::size_t size() const { return entries_.size(); }
  void set_substring_match(bool on) { substring_match_ = on; }

 private:
  std::set<std::string> entries_;
  bool substring_match_ = false;
};

struct ExtractConfig {
  // Bn prefix cut: false requires whitespace right after the matched name,
  // true accepts any raw prefix (for unsegmented scripts).
  bool bn_raw_prefix = false;
};

struct ExtractStats {
  std::array<std::size_t, 4> emitted{};
  std::array<std::size_t, 4> stoplisted{};
  std::size_t empty = 0;
};

// First spans of all turns in the scene.
std::set<std::string> speaker_names(const Scene& scene);

std::vector<KnowledgeTriple> extract_bc(const Scene& scene,
                                        const Stoplist& stop,
                                        ExtractStats* stats = nullptr);
std::vector<KnowledgeTriple> extract_bn(const Scene& scene,
                                        const Stoplist& stop,
                                        const ExtractConfig& cfg = {},
                                        ExtractStats* stats = nullptr);
std::vector<KnowledgeTriple> extract_inside(const Scene& scene,
                                            const Stoplist& stop,
                                            ExtractStats* stats = nullptr);
std::vector<KnowledgeTriple> extract_outside(const Scene& scene,
                                             const Stoplist& stop,
                                             ExtractStats* stats = nullptr);

// All four extractors, ordered by line and then Bc < Bn < I < O.
std::vector<KnowledgeTriple> extract_all(const Scene& scene,
                                         const ExtractConfig& cfg,
                                         const Stoplist& stop,
                                         ExtractStats* stats = nullptr);
std::vector<KnowledgeTriple> extract_all(const std::vector<Scene>& scenes,
                                         const ExtractConfig& cfg,
                                         const Stoplist& stop,
                                         ExtractStats* stats = nullptr);

// Context text of a scene: non-heading raw lines joined by '\n'.
std::string scene_context(const Scene& scene);

std::string triple_to_json(const KnowledgeTriple& t);
KnowledgeTriple triple_from_json(std::string_view line);

}  // namespace ctxk

#endif  // CTXK_KNOWLEDGE_HPP_
