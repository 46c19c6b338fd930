// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// Screenplay structure: scenes are maximal runs of non-blank lines, and every
// line of a scene is a heading, a turn ("Speaker: utterance") or an action
// line. Turns expose their parentheticals with byte offsets so that later
// stages can point back into the source text.

#ifndef CTXK_SCREENPLAY_HPP_
#define CTXK_SCREENPLAY_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ctxk {

struct RawScript {
  std::string script_id;
  std::string text;
  std::string source_path;
};

struct ParenPair {
  std::string open;
  std::string close;
  bool operator==(const ParenPair&) const = default;
};

struct ParserConfig {
  std::vector<std::string> heading_lexicon{"INT.",      "EXT.", "Interior.",
                                           "Exterior.", "内景", "外景"};
  std::size_t max_speaker_span_chars = 30;
  std::vector<std::string> colon_chars{":", "："};
  std::vector<ParenPair> paren_chars{{"(", ")"}, {"（", "）"}};

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class LineKind { kHeading, kTurn, kAction };

std::string_view to_string(LineKind kind);

// A parenthesized span. `offset` and `length` are bytes within the owning
// line's raw text and cover the parenthesis characters.
struct Parenthetical {
  std::string text;
  std::string open;
  std::string close;
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct Segment {
  enum class Kind { kUtterance, kParenthetical };
  Kind kind = Kind::kUtterance;
  std::string text;
  // Parenthesis characters; empty for utterance text.
  std::string open;
  std::string close;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool is_parenthetical() const { return kind == Kind::kParenthetical; }
  // Source text of the segment, parentheses restored.
  std::string source() const { return open + text + close; }
};

struct HeadingLine {
  std::string text;
};

struct TurnLine {
  // Speaker span before the colon, trimmed, without a trailing
  // parenthetical.
  std::string first_span;
  std::size_t first_span_offset = 0;
  std::optional<Parenthetical> name_parenthetical;
  std::string colon;
  // Post-colon text, trimmed, split into utterance and parenthetical parts.
  std::vector<Segment> segments;
  std::size_t body_offset = 0;

  // Segments concatenated with parentheses restored.
  std::string body() const;
  // Utterance text with every parenthetical removed, whitespace collapsed.
  std::string utterance() const;
  // Utterance text with only segment `skip` removed; other parentheticals
  // stay in place.
  std::string utterance_without(std::size_t skip) const;
};

struct ActionLine {
  std::string text;
};

struct Line {
  std::string raw;
  std::variant<HeadingLine, TurnLine, ActionLine> body;

  LineKind kind() const { return static_cast<LineKind>(body.index()); }
  const TurnLine* turn() const { return std::get_if<TurnLine>(&body); }
  const ActionLine* action() const { return std::get_if<ActionLine>(&body); }
  const HeadingLine* heading() const { return std::get_if<HeadingLine>(&body); }
};

struct Scene {
  std::string scene_id;
  std::string script_id;
  std::optional<std::string> heading;
  std::vector<Line> lines;
  std::string raw_text;
};

// Normalizes newlines and splits on blank-line runs. Throws DecodeError on
// invalid UTF-8.
std::vector<std::string> split_scenes(const RawScript& script);

// `line` must not be blank.
LineKind classify_line(std::string_view line, const ParserConfig& cfg,
                       std::size_t position);

// `line` must classify as a turn.
TurnLine parse_turn(std::string_view line, const ParserConfig& cfg);

Scene parse_scene(std::string_view raw, const ParserConfig& cfg,
                  std::string scene_id = {}, std::string script_id = {});

// split_scenes + parse_scene. Scene ids are "<script_id>#<ordinal>".
std::vector<Scene> parse_script(const RawScript& script,
                                const ParserConfig& cfg);

// One JSON object (no trailing newline) describing a parsed scene.
std::string scene_to_json(const Scene& scene);

}  // namespace ctxk

#endif  // CTXK_SCREENPLAY_HPP_
