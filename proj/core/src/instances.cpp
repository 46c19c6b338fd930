// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/instances.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/text.hpp"

namespace ctxk {

using nlohmann::json;

void McInstance::validate() const {
  if (options.size() < 2) {
    throw FormatError("instance " + id + ": fewer than two options");
  }
  if (gold >= options.size()) {
    throw FormatError("instance " + id + ": gold index out of range");
  }
  std::vector<std::string> sorted = options;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw FormatError("instance " + id + ": duplicate options");
  }
}

PoolMap build_pools(const std::vector<KnowledgeTriple>& triples) {
  PoolMap pools;
  for (const auto& t : triples) {
    PoolKey key{t.script_id, t.ktype};
    auto [it, inserted] = pools.try_emplace(key);
    if (inserted) it->second.key = key;
    it->second.items.insert(t.nonverbal);
  }
  return pools;
}

std::string triple_key(const KnowledgeTriple& t) {
  return t.script_id + "/" + t.scene_id + "/" + std::string(to_string(t.ktype)) +
         "/" + std::to_string(t.anchor.line) + "." +
         std::to_string(t.anchor.segment);
}

namespace {

bool is_hspace(char c) { return c == ' ' || c == '\t'; }

}  // namespace

std::string remove_anchored(const KnowledgeTriple& t) {
  std::string doc = t.context;
  std::size_t begin = t.anchor.begin;
  std::size_t end = t.anchor.end;
  if (t.ktype == KnowledgeType::kO) {
    // Whole line plus one line break.
    if (end < doc.size() && doc[end] == '\n') {
      ++end;
    } else if (begin > 0 && doc[begin - 1] == '\n') {
      --begin;
    }
    doc.erase(begin, end - begin);
    return doc;
  }
  if (t.ktype == KnowledgeType::kBc || t.ktype == KnowledgeType::kBn) {
    while (begin > 0 && is_hspace(doc[begin - 1])) --begin;
    doc.erase(begin, end - begin);
    return doc;
  }
  doc.erase(begin, end - begin);
  // "a (x) b" -> "a b"; "a (x)" -> "a"; "a (x)." -> "a.".
  if (begin > 0 && is_hspace(doc[begin - 1]) &&
      (begin == doc.size() || is_hspace(doc[begin]) || doc[begin] == '\n' ||
       std::string_view(".,;:!?").find(doc[begin]) != std::string_view::npos)) {
    doc.erase(begin - 1, 1);
  }
  return doc;
}

GenerationResult triple_to_instance(const KnowledgeTriple& t,
                                    const PoolMap& pools,
                                    std::size_t n_distractors, GenRng& rng) {
  if (n_distractors < 1) {
    throw std::invalid_argument("n_distractors must be >= 1");
  }
  const auto it = pools.find(PoolKey{t.script_id, t.ktype});
  if (it == pools.end() || it->second.items.count(t.nonverbal) == 0) {
    throw std::invalid_argument("triple " + triple_key(t) + " is not in its pool");
  }
  std::vector<std::string> eligible;
  for (const auto& item : it->second.items) {
    if (item != t.nonverbal) eligible.push_back(item);
  }
  if (eligible.size() < n_distractors) {
    return Skipped{SkipReason::kInsufficientDistractors, triple_key(t)};
  }
  McInstance inst;
  inst.id = triple_key(t);
  inst.options.push_back(t.nonverbal);
  for (std::size_t idx : rng.sample_indices(eligible.size(), n_distractors)) {
    inst.options.push_back(eligible[idx]);
  }
  rng.shuffle(inst.options);
  inst.gold = static_cast<std::size_t>(
      std::find(inst.options.begin(), inst.options.end(), t.nonverbal) -
      inst.options.begin());
  inst.document = remove_anchored(t);
  inst.question = t.verbal;
  inst.source = {t.script_id, std::string(to_string(t.ktype))};
  inst.verbal_line = t.verbal_line;
  return inst;
}

GenerationSummary generate_instances(const std::vector<KnowledgeTriple>& triples,
                                     std::size_t n_distractors,
                                     std::uint64_t seed) {
  const PoolMap pools = build_pools(triples);
  GenerationSummary out;
  for (const auto& t : triples) {
    GenRng rng(seed ^ fnv1a64(triple_key(t)));
    auto result = triple_to_instance(t, pools, n_distractors, rng);
    if (auto* inst = std::get_if<McInstance>(&result)) {
      out.instances.push_back(std::move(*inst));
    } else {
      out.skipped.push_back(std::get<Skipped>(result));
    }
  }
  return out;
}

std::size_t document_length(std::string_view doc, const TruncateOptions& opt) {
  if (opt.unit == LengthUnit::kCharacters) return text::code_point_count(doc);
  return tokenize_spans(doc, opt.tokenizer).size();
}

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string cut_to_units(const std::string& s, const TruncateOptions& opt) {
  if (opt.unit == LengthUnit::kCharacters) {
    std::size_t pos = 0;
    for (std::size_t n = 0; n < opt.max_units && pos < s.size(); ++n) {
      text::next_code_point(s, pos);
    }
    return s.substr(0, pos);
  }
  const auto spans = tokenize_spans(s, opt.tokenizer);
  if (spans.size() <= opt.max_units) return s;
  return s.substr(0, spans[opt.max_units - 1].end);
}

}  // namespace

McInstance truncate_context(McInstance inst, const TruncateOptions& opt) {
  if (opt.max_units == 0) throw std::invalid_argument("max_units must be > 0");
  if (document_length(inst.document, opt) <= opt.max_units) return inst;
  std::vector<std::string> lines;
  for (std::string_view l : text::split_lines(inst.document)) lines.emplace_back(l);
  std::optional<int> v = inst.verbal_line;
  if (v && (*v < 0 || *v >= static_cast<int>(lines.size()))) v.reset();
  while (lines.size() > 1 && document_length(join_lines(lines), opt) > opt.max_units) {
    if (v && *v == static_cast<int>(lines.size()) - 1) {
      lines.erase(lines.begin());
      --*v;
    } else {
      lines.pop_back();
    }
  }
  inst.document = join_lines(lines);
  if (document_length(inst.document, opt) > opt.max_units) {
    inst.document = cut_to_units(inst.document, opt);
    inst.truncated = true;
  }
  if (inst.verbal_line) inst.verbal_line = v;
  return inst;
}

std::optional<GenericDocMode> parse_generic_doc_mode(std::string_view s) {
  if (s == "empty_doc" || s == "empty") return GenericDocMode::kEmpty;
  if (s == "relation_doc" || s == "relation") return GenericDocMode::kRelation;
  return std::nullopt;
}

GenerationResult generic_triple_to_instance(const GenericTriple& triple,
                                            const std::set<std::string>& phrase_pool,
                                            GenericDocMode mode,
                                            std::size_t n_distractors,
                                            GenRng& rng) {
  if (n_distractors < 1) {
    throw std::invalid_argument("n_distractors must be >= 1");
  }
  const std::string key =
      "generic/" + triple.subject + "|" + triple.relation + "|" + triple.object;
  std::vector<std::string> eligible;
  for (const auto& p : phrase_pool) {
    if (p != triple.subject && p != triple.object) eligible.push_back(p);
  }
  if (eligible.size() < n_distractors) {
    return Skipped{SkipReason::kInsufficientDistractors, key};
  }
  McInstance inst;
  inst.id = key;
  inst.options.push_back(triple.object);
  for (std::size_t idx : rng.sample_indices(eligible.size(), n_distractors)) {
    inst.options.push_back(eligible[idx]);
  }
  rng.shuffle(inst.options);
  inst.gold = static_cast<std::size_t>(
      std::find(inst.options.begin(), inst.options.end(), triple.object) -
      inst.options.begin());
  inst.document = mode == GenericDocMode::kRelation ? triple.relation : "";
  inst.question = triple.subject;
  inst.source = {"", "generic"};
  return inst;
}

GenerationSummary generate_generic_instances(const std::vector<GenericTriple>& triples,
                                             GenericDocMode mode,
                                             std::size_t n_distractors,
                                             std::uint64_t seed) {
  std::set<std::string> pool;
  for (const auto& t : triples) {
    pool.insert(t.subject);
    pool.insert(t.object);
  }
  GenerationSummary out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    GenRng rng(seed ^ fnv1a64(t.subject + '\x1f' + t.relation + '\x1f' + t.object));
    auto result = generic_triple_to_instance(t, pool, mode, n_distractors, rng);
    if (auto* inst = std::get_if<McInstance>(&result)) {
      inst->id = "generic/" + std::to_string(i);
      out.instances.push_back(std::move(*inst));
    } else {
      out.skipped.push_back(std::get<Skipped>(result));
    }
  }
  return out;
}

CorpusCounts corpus_stats(const std::vector<KnowledgeTriple>& triples) {
  CorpusCounts c;
  for (auto t : kAllKnowledgeTypes) c.per_kind[std::string(to_string(t))] = 0;
  for (const auto& t : triples) ++c.per_kind[std::string(to_string(t.ktype))];
  c.total = triples.size();
  return c;
}

CorpusCounts corpus_stats(const std::vector<McInstance>& instances) {
  CorpusCounts c;
  for (auto t : kAllKnowledgeTypes) c.per_kind[std::string(to_string(t))] = 0;
  for (const auto& inst : instances) ++c.per_kind[inst.source.kind];
  c.total = instances.size();
  return c;
}

std::string instance_to_json(const McInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["document"] = inst.document;
  j["question"] = inst.question;
  j["options"] = inst.options;
  j["gold"] = inst.gold;
  j["category"] = inst.category ? json(*inst.category) : json(nullptr);
  j["source"] = {{"script_id", inst.source.script_id}, {"kind", inst.source.kind}};
  j["verbal_line"] = inst.verbal_line ? json(*inst.verbal_line) : json(nullptr);
  j["truncated"] = inst.truncated;
  return j.dump();
}

McInstance instance_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    McInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.document = j.value("document", std::string());
    inst.question = j.value("question", std::string());
    inst.options = j.at("options").get<std::vector<std::string>>();
    inst.gold = j.at("gold").get<std::size_t>();
    if (j.contains("category") && !j["category"].is_null()) {
      inst.category = j["category"].get<std::string>();
    }
    if (j.contains("source") && j["source"].is_object()) {
      inst.source.script_id = j["source"].value("script_id", std::string());
      inst.source.kind = j["source"].value("kind", std::string("labeled"));
    } else {
      inst.source.kind = "labeled";
    }
    if (j.contains("verbal_line") && !j["verbal_line"].is_null()) {
      inst.verbal_line = j["verbal_line"].get<int>();
    }
    inst.truncated = j.value("truncated", false);
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad instance record: ") + e.what());
  }
}

GenericTriple generic_triple_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    return {j.at("subject").get<std::string>(), j.at("relation").get<std::string>(),
            j.at("object").get<std::string>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad generic triple record: ") + e.what());
  }
}

}  // namespace ctxk
