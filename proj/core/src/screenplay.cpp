// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/screenplay.hpp"

#include <stdexcept>

#include "json.hpp"

#include "ctxk/text.hpp"

namespace ctxk {

using nlohmann::json;

void ParserConfig::validate() const {
  if (max_speaker_span_chars == 0) {
    throw std::invalid_argument("max_speaker_span_chars must be > 0");
  }
  if (heading_lexicon.empty()) {
    throw std::invalid_argument("heading_lexicon must not be empty");
  }
  if (colon_chars.empty()) {
    throw std::invalid_argument("colon_chars must not be empty");
  }
  for (const auto& p : paren_chars) {
    if (p.open.empty() || p.close.empty()) {
      throw std::invalid_argument("paren pair with empty character");
    }
  }
}

std::string_view to_string(LineKind kind) {
  switch (kind) {
    case LineKind::kHeading: return "heading";
    case LineKind::kTurn: return "turn";
    case LineKind::kAction: return "action";
  }
  return "?";
}

std::string TurnLine::body() const {
  std::string out;
  for (const auto& seg : segments) out += seg.source();
  return out;
}

std::string TurnLine::utterance() const {
  std::string out;
  for (const auto& seg : segments) {
    if (!seg.is_parenthetical()) out += seg.text;
  }
  return text::collapse_whitespace(out);
}

std::string TurnLine::utterance_without(std::size_t skip) const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i != skip) out += segments[i].source();
  }
  return text::collapse_whitespace(out);
}

namespace {

// First colon of the line: byte position, code-point index and the colon
// string itself.
struct ColonHit {
  std::size_t byte = std::string_view::npos;
  std::size_t chars = 0;
  std::string_view colon;
};

ColonHit find_colon(std::string_view s, const ParserConfig& cfg) {
  std::size_t pos = 0;
  std::size_t chars = 0;
  while (pos < s.size()) {
    for (const auto& c : cfg.colon_chars) {
      if (s.substr(pos, c.size()) == c) return {pos, chars, c};
    }
    text::next_code_point(s, pos);
    ++chars;
  }
  return {};
}

// Position of the close parenthesis matching the open one at `open_pos`,
// or npos.
std::size_t match_forward(std::string_view s, std::size_t open_pos,
                          const ParenPair& p) {
  int depth = 0;
  std::size_t pos = open_pos;
  while (pos < s.size()) {
    if (s.substr(pos, p.open.size()) == p.open) {
      ++depth;
      pos += p.open.size();
    } else if (s.substr(pos, p.close.size()) == p.close) {
      if (--depth == 0) return pos;
      pos += p.close.size();
    } else {
      text::next_code_point(s, pos);
    }
  }
  return std::string_view::npos;
}

// Position of the open parenthesis matching a close parenthesis that ends
// `s`, or npos.
std::size_t match_backward(std::string_view s, const ParenPair& p) {
  // Forward scan keeping a stack of open positions; the span ends at s.size().
  std::vector<std::size_t> stack;
  std::size_t pos = 0;
  std::size_t result = std::string_view::npos;
  while (pos < s.size()) {
    if (s.substr(pos, p.open.size()) == p.open) {
      stack.push_back(pos);
      pos += p.open.size();
    } else if (s.substr(pos, p.close.size()) == p.close) {
      const std::size_t end = pos + p.close.size();
      if (!stack.empty()) {
        const std::size_t open = stack.back();
        stack.pop_back();
        if (end == s.size()) result = open;
      } else {
        result = std::string_view::npos;
      }
      pos = end;
    } else {
      text::next_code_point(s, pos);
    }
  }
  return result;
}

std::size_t leading_space_bytes(std::string_view s) {
  return s.size() - text::trim_left(s).size();
}

void parse_segments(std::string_view line, std::size_t begin, std::size_t end,
                    const ParserConfig& cfg, std::vector<Segment>& out) {
  const std::string_view body = line.substr(0, end);
  std::size_t ustart = begin;
  std::size_t pos = begin;
  auto flush_utterance = [&](std::size_t upto) {
    if (upto > ustart) {
      Segment seg;
      seg.kind = Segment::Kind::kUtterance;
      seg.text = std::string(body.substr(ustart, upto - ustart));
      seg.offset = ustart;
      seg.length = upto - ustart;
      out.push_back(std::move(seg));
    }
  };
  while (pos < end) {
    const ParenPair* opened = nullptr;
    for (const auto& p : cfg.paren_chars) {
      if (body.substr(pos, p.open.size()) == p.open) {
        opened = &p;
        break;
      }
    }
    if (opened == nullptr) {
      text::next_code_point(body, pos);
      continue;
    }
    const std::size_t close = match_forward(body, pos, *opened);
    if (close == std::string_view::npos) {
      pos += opened->open.size();
      continue;
    }
    flush_utterance(pos);
    Segment seg;
    seg.kind = Segment::Kind::kParenthetical;
    const std::size_t inner = pos + opened->open.size();
    seg.text = std::string(body.substr(inner, close - inner));
    seg.open = opened->open;
    seg.close = opened->close;
    seg.offset = pos;
    seg.length = close + opened->close.size() - pos;
    out.push_back(std::move(seg));
    pos = close + opened->close.size();
    ustart = pos;
  }
  flush_utterance(end);
}

}  // namespace

LineKind classify_line(std::string_view line, const ParserConfig& cfg,
                       std::size_t position) {
  const std::string_view t = text::trim(line);
  if (position == 0) {
    for (const auto& prefix : cfg.heading_lexicon) {
      if (text::starts_with_icase(t, prefix)) return LineKind::kHeading;
    }
  }
  const ColonHit hit = find_colon(t, cfg);
  if (hit.byte != std::string_view::npos &&
      hit.chars < cfg.max_speaker_span_chars &&
      !text::is_blank(t.substr(0, hit.byte))) {
    return LineKind::kTurn;
  }
  return LineKind::kAction;
}

TurnLine parse_turn(std::string_view line, const ParserConfig& cfg) {
  TurnLine turn;
  const std::size_t lead = leading_space_bytes(line);
  const ColonHit hit = find_colon(line.substr(lead), cfg);
  if (hit.byte == std::string_view::npos) {
    throw std::invalid_argument("parse_turn: line has no colon");
  }
  const std::size_t colon_pos = lead + hit.byte;
  turn.colon = std::string(hit.colon);

  const std::string_view span =
      text::trim_right(line.substr(lead, colon_pos - lead));
  std::string_view speaker = span;
  for (const auto& p : cfg.paren_chars) {
    if (span.size() < p.close.size() ||
        span.substr(span.size() - p.close.size()) != p.close) {
      continue;
    }
    const std::size_t open = match_backward(span, p);
    if (open == std::string_view::npos) continue;
    const std::string_view before = text::trim_right(span.substr(0, open));
    if (before.empty()) continue;
    Parenthetical paren;
    const std::size_t inner = open + p.open.size();
    paren.text =
        std::string(span.substr(inner, span.size() - p.close.size() - inner));
    paren.open = p.open;
    paren.close = p.close;
    paren.offset = lead + open;
    paren.length = span.size() - open;
    turn.name_parenthetical = std::move(paren);
    speaker = before;
    break;
  }
  turn.first_span = std::string(speaker);
  turn.first_span_offset = lead;

  const std::size_t after = colon_pos + hit.colon.size();
  const std::string_view rest = line.substr(after);
  const std::size_t body_begin = after + leading_space_bytes(rest);
  const std::size_t body_end = after + text::trim_right(rest).size();
  turn.body_offset = body_begin;
  if (body_end > body_begin) {
    parse_segments(line, body_begin, body_end, cfg, turn.segments);
  }
  return turn;
}

std::vector<std::string> split_scenes(const RawScript& script) {
  text::validate_utf8(script.text);
  const std::string normalized = text::normalize_newlines(script.text);
  std::vector<std::string> scenes;
  std::string current;
  bool open = false;
  for (std::string_view line : text::split_lines(normalized)) {
    if (text::is_blank(line)) {
      if (open) scenes.push_back(std::move(current));
      current.clear();
      open = false;
      continue;
    }
    if (open) current.push_back('\n');
    current.append(line);
    open = true;
  }
  if (open) scenes.push_back(std::move(current));
  return scenes;
}

Scene parse_scene(std::string_view raw, const ParserConfig& cfg,
                  std::string scene_id, std::string script_id) {
  Scene scene;
  scene.scene_id = std::move(scene_id);
  scene.script_id = std::move(script_id);
  scene.raw_text = std::string(raw);
  std::size_t position = 0;
  for (std::string_view line : text::split_lines(scene.raw_text)) {
    if (text::is_blank(line)) continue;
    Line parsed;
    parsed.raw = std::string(line);
    switch (classify_line(line, cfg, position)) {
      case LineKind::kHeading: {
        const std::string t(text::trim(line));
        scene.heading = t;
        parsed.body = HeadingLine{t};
        break;
      }
      case LineKind::kTurn:
        parsed.body = parse_turn(line, cfg);
        break;
      case LineKind::kAction:
        parsed.body = ActionLine{std::string(text::trim(line))};
        break;
    }
    scene.lines.push_back(std::move(parsed));
    ++position;
  }
  return scene;
}

std::vector<Scene> parse_script(const RawScript& script,
                                const ParserConfig& cfg) {
  std::vector<Scene> scenes;
  std::size_t ordinal = 0;
  for (const auto& raw : split_scenes(script)) {
    scenes.push_back(parse_scene(raw, cfg,
                                 script.script_id + "#" + std::to_string(ordinal),
                                 script.script_id));
    ++ordinal;
  }
  return scenes;
}

std::string scene_to_json(const Scene& scene) {
  json lines = json::array();
  for (const auto& line : scene.lines) {
    json j;
    j["kind"] = std::string(to_string(line.kind()));
    if (const auto* turn = line.turn()) {
      j["text"] = std::string(text::trim(line.raw));
      j["speaker"] = turn->first_span;
      if (turn->name_parenthetical) {
        j["name_parenthetical"] = turn->name_parenthetical->text;
      } else {
        j["name_parenthetical"] = nullptr;
      }
      json segs = json::array();
      for (const auto& seg : turn->segments) {
        segs.push_back({{"kind", seg.is_parenthetical() ? "parenthetical"
                                                        : "utterance"},
                        {"text", seg.text}});
      }
      j["segments"] = std::move(segs);
    } else if (const auto* action = line.action()) {
      j["text"] = action->text;
    } else {
      j["text"] = line.heading()->text;
    }
    lines.push_back(std::move(j));
  }
  json out;
  out["scene_id"] = scene.scene_id;
  out["script_id"] = scene.script_id;
  out["heading"] = scene.heading ? json(*scene.heading) : json(nullptr);
  out["lines"] = std::move(lines);
  return out.dump();
}

}  // namespace ctxk
