// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/knowledge.hpp"

#include <algorithm>
#include <tuple>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/io.hpp"
#include "ctxk/text.hpp"
#include "default_stoplist.inc"

namespace ctxk {

using nlohmann::json;

std::string_view to_string(KnowledgeType t) {
  switch (t) {
    case KnowledgeType::kBc: return "Bc";
    case KnowledgeType::kBn: return "Bn";
    case KnowledgeType::kI: return "I";
    case KnowledgeType::kO: return "O";
  }
  return "?";
}

std::optional<KnowledgeType> parse_knowledge_type(std::string_view s) {
  for (auto t : kAllKnowledgeTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

namespace {

// Lowercase, trim, and fold the typographic apostrophe.
std::string normalize_term(std::string_view s) {
  std::string out = text::to_lower(text::trim(s));
  std::string folded;
  folded.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.compare(i, 3, "\xE2\x80\x99") == 0) {
      folded.push_back('\'');
      i += 2;
    } else {
      folded.push_back(out[i]);
    }
  }
  return folded;
}

}  // namespace

Stoplist::Stoplist(const std::vector<std::string>& entries, bool substring_match)
    : substring_match_(substring_match) {
  for (const auto& e : entries) {
    std::string n = normalize_term(e);
    if (n.empty()) continue;
    entries_.insert(std::string(text::strip_trailing_punct(n)));
    entries_.insert(std::move(n));
  }
  entries_.erase("");
}

Stoplist Stoplist::from_text(std::string_view body) {
  std::vector<std::string> entries;
  const std::string normalized = text::normalize_newlines(body);
  for (std::string_view line : text::split_lines(normalized)) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    entries.emplace_back(line);
  }
  return Stoplist(entries);
}

Stoplist Stoplist::default_list() { return from_text(kDefaultStoplistText); }

Stoplist Stoplist::load(const std::string& spec) {
  if (spec == "default") return default_list();
  return from_text(io::read_file(spec));
}

bool Stoplist::matches(std::string_view candidate) const {
  const std::string c = normalize_term(candidate);
  if (entries_.count(c) != 0) return true;
  const std::string stripped(text::strip_trailing_punct(c));
  if (entries_.count(stripped) != 0) return true;
  if (substring_match_) {
    for (const auto& e : entries_) {
      if (c.find(e) != std::string::npos) return true;
    }
  }
  return false;
}

std::set<std::string> speaker_names(const Scene& scene) {
  std::set<std::string> names;
  for (const auto& line : scene.lines) {
    if (const auto* turn = line.turn()) names.insert(turn->first_span);
  }
  return names;
}

std::string scene_context(const Scene& scene) {
  std::string out;
  bool first = true;
  for (const auto& line : scene.lines) {
    if (line.kind() == LineKind::kHeading) continue;
    if (!first) out.push_back('\n');
    out += line.raw;
    first = false;
  }
  return out;
}

namespace {

// Context text plus, per scene line, its context line index and byte start
// (-1 for the heading).
struct ContextMap {
  std::string text;
  std::vector<int> line_index;
  std::vector<std::size_t> line_start;
};

ContextMap map_context(const Scene& scene) {
  ContextMap m;
  m.text = scene_context(scene);
  std::size_t offset = 0;
  int idx = 0;
  for (const auto& line : scene.lines) {
    if (line.kind() == LineKind::kHeading) {
      m.line_index.push_back(-1);
      m.line_start.push_back(0);
      continue;
    }
    m.line_index.push_back(idx++);
    m.line_start.push_back(offset);
    offset += line.raw.size() + 1;
  }
  return m;
}

std::string render_verbal(std::string_view speaker, const std::string& utterance) {
  std::string v(speaker);
  v += ":";
  if (!utterance.empty()) {
    v += " ";
    v += utterance;
  }
  return v;
}

class Emitter {
 public:
  Emitter(const Scene& scene, const Stoplist& stop, ExtractStats* stats)
      : scene_(scene), stop_(stop), stats_(stats), ctx_(map_context(scene)) {}

  const ContextMap& ctx() const { return ctx_; }

  void emit(KnowledgeType type, std::string_view raw_n, std::string verbal,
            std::size_t line, int segment, std::size_t begin_in_line,
            std::size_t length, std::size_t verbal_line) {
    const std::string n(text::trim(raw_n));
    const auto t = static_cast<std::size_t>(type);
    if (n.empty()) {
      if (stats_) ++stats_->empty;
      return;
    }
    if (stop_.matches(n)) {
      if (stats_) ++stats_->stoplisted[t];
      return;
    }
    KnowledgeTriple k;
    k.ktype = type;
    k.verbal = std::move(verbal);
    k.nonverbal = n;
    k.context = ctx_.text;
    k.anchor.line = ctx_.line_index[line];
    k.anchor.segment = segment;
    k.anchor.begin = ctx_.line_start[line] + begin_in_line;
    k.anchor.end = k.anchor.begin + length;
    k.verbal_line = ctx_.line_index[verbal_line];
    k.script_id = scene_.script_id;
    k.scene_id = scene_.scene_id;
    if (stats_) ++stats_->emitted[t];
    out_.push_back(std::move(k));
  }

  std::vector<KnowledgeTriple> take() { return std::move(out_); }

 private:
  const Scene& scene_;
  const Stoplist& stop_;
  ExtractStats* stats_;
  ContextMap ctx_;
  std::vector<KnowledgeTriple> out_;
};

bool is_boundary(std::string_view rest) {
  if (rest.empty()) return false;
  std::size_t pos = 0;
  return text::is_space(text::next_code_point(rest, pos));
}

}  // namespace

std::vector<KnowledgeTriple> extract_bc(const Scene& scene, const Stoplist& stop,
                                        ExtractStats* stats) {
  Emitter em(scene, stop, stats);
  for (std::size_t i = 0; i < scene.lines.size(); ++i) {
    const auto* turn = scene.lines[i].turn();
    if (turn == nullptr || !turn->name_parenthetical) continue;
    const auto& np = *turn->name_parenthetical;
    em.emit(KnowledgeType::kBc, np.text,
            render_verbal(turn->first_span, turn->utterance()), i, -1, np.offset,
            np.length, i);
  }
  return em.take();
}

std::vector<KnowledgeTriple> extract_bn(const Scene& scene, const Stoplist& stop,
                                        const ExtractConfig& cfg,
                                        ExtractStats* stats) {
  Emitter em(scene, stop, stats);
  std::vector<std::size_t> turn_lines;
  for (std::size_t i = 0; i < scene.lines.size(); ++i) {
    if (scene.lines[i].turn() != nullptr) turn_lines.push_back(i);
  }
  for (std::size_t i : turn_lines) {
    const TurnLine& turn = *scene.lines[i].turn();
    const std::string& span = turn.first_span;
    // Speaker names as attested by the other turns of the scene.
    std::set<std::string> names;
    for (std::size_t j : turn_lines) {
      if (j != i) names.insert(scene.lines[j].turn()->first_span);
    }
    if (names.count(span) != 0) continue;
    const std::string* best = nullptr;
    for (const auto& name : names) {
      if (name.empty() || name.size() >= span.size()) continue;
      if (span.compare(0, name.size(), name) != 0) continue;
      const std::string_view rest = std::string_view(span).substr(name.size());
      if (!cfg.bn_raw_prefix && !is_boundary(rest)) continue;
      if (best == nullptr || name.size() > best->size()) best = &name;
    }
    if (best == nullptr) continue;
    const std::string_view rest = std::string_view(span).substr(best->size());
    const std::size_t lead = rest.size() - text::trim_left(rest).size();
    const std::size_t begin = turn.first_span_offset + best->size() + lead;
    em.emit(KnowledgeType::kBn, rest, render_verbal(*best, turn.utterance()), i,
            -1, begin, span.size() - best->size() - lead, i);
  }
  return em.take();
}

std::vector<KnowledgeTriple> extract_inside(const Scene& scene,
                                            const Stoplist& stop,
                                            ExtractStats* stats) {
  Emitter em(scene, stop, stats);
  for (std::size_t i = 0; i < scene.lines.size(); ++i) {
    const auto* turn = scene.lines[i].turn();
    if (turn == nullptr) continue;
    for (std::size_t k = 0; k < turn->segments.size(); ++k) {
      const Segment& seg = turn->segments[k];
      if (!seg.is_parenthetical()) continue;
      em.emit(KnowledgeType::kI, seg.text,
              render_verbal(turn->first_span, turn->utterance_without(k)), i,
              static_cast<int>(k), seg.offset, seg.length, i);
    }
  }
  return em.take();
}

std::vector<KnowledgeTriple> extract_outside(const Scene& scene,
                                             const Stoplist& stop,
                                             ExtractStats* stats) {
  Emitter em(scene, stop, stats);
  std::optional<std::size_t> last_turn;
  for (std::size_t i = 0; i < scene.lines.size(); ++i) {
    const Line& line = scene.lines[i];
    if (line.turn() != nullptr) {
      last_turn = i;
      continue;
    }
    const auto* action = line.action();
    if (action == nullptr || !last_turn) continue;
    const TurnLine& turn = *scene.lines[*last_turn].turn();
    em.emit(KnowledgeType::kO, action->text,
            render_verbal(turn.first_span, turn.utterance()), i, -1, 0,
            line.raw.size(), *last_turn);
  }
  return em.take();
}

std::vector<KnowledgeTriple> extract_all(const Scene& scene,
                                         const ExtractConfig& cfg,
                                         const Stoplist& stop,
                                         ExtractStats* stats) {
  std::vector<KnowledgeTriple> all = extract_bc(scene, stop, stats);
  auto append = [&all](std::vector<KnowledgeTriple> more) {
    for (auto& t : more) all.push_back(std::move(t));
  };
  append(extract_bn(scene, stop, cfg, stats));
  append(extract_inside(scene, stop, stats));
  append(extract_outside(scene, stop, stats));
  std::stable_sort(all.begin(), all.end(),
                   [](const KnowledgeTriple& a, const KnowledgeTriple& b) {
                     return std::make_tuple(a.anchor.line, a.ktype, a.anchor.segment) <
                            std::make_tuple(b.anchor.line, b.ktype, b.anchor.segment);
                   });
  return all;
}

std::vector<KnowledgeTriple> extract_all(const std::vector<Scene>& scenes,
                                         const ExtractConfig& cfg,
                                         const Stoplist& stop,
                                         ExtractStats* stats) {
  std::vector<KnowledgeTriple> all;
  for (const auto& scene : scenes) {
    for (auto& t : extract_all(scene, cfg, stop, stats)) all.push_back(std::move(t));
  }
  return all;
}

std::string triple_to_json(const KnowledgeTriple& t) {
  json j;
  j["ktype"] = std::string(to_string(t.ktype));
  j["verbal"] = t.verbal;
  j["nonverbal"] = t.nonverbal;
  j["context"] = t.context;
  j["script_id"] = t.script_id;
  j["scene_id"] = t.scene_id;
  j["anchor"] = {{"line", t.anchor.line},
                 {"segment", t.anchor.segment},
                 {"begin", t.anchor.begin},
                 {"end", t.anchor.end}};
  j["verbal_line"] = t.verbal_line;
  return j.dump();
}

KnowledgeTriple triple_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    KnowledgeTriple t;
    const auto type = parse_knowledge_type(j.at("ktype").get<std::string>());
    if (!type) throw FormatError("unknown ktype");
    t.ktype = *type;
    t.verbal = j.at("verbal").get<std::string>();
    t.nonverbal = j.at("nonverbal").get<std::string>();
    t.context = j.at("context").get<std::string>();
    t.script_id = j.at("script_id").get<std::string>();
    t.scene_id = j.at("scene_id").get<std::string>();
    const json& a = j.at("anchor");
    t.anchor.line = a.at("line").get<int>();
    t.anchor.segment = a.at("segment").get<int>();
    t.anchor.begin = a.at("begin").get<std::size_t>();
    t.anchor.end = a.at("end").get<std::size_t>();
    t.verbal_line = j.value("verbal_line", t.anchor.line);
    if (t.anchor.begin > t.anchor.end || t.anchor.end > t.context.size()) {
      throw FormatError("anchor outside context");
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad triple record: ") + e.what());
  }
}

}  // namespace ctxk
