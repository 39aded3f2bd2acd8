#include "partisan/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "partisan/errors.hpp"
#include "partisan/text.hpp"

namespace partisan {

using nlohmann::ordered_json;

std::string_view to_string(Ideology v) noexcept {
  return v == Ideology::liberal ? "liberal" : "conservative";
}

std::string_view to_string(Source v) noexcept {
  return v == Source::real ? "real" : "generated";
}

std::string_view to_string(FeatureKind v) noexcept {
  switch (v) {
    case FeatureKind::stance:
      return "stance";
    case FeatureKind::emotion:
      return "emotion";
    case FeatureKind::moral_foundation:
      return "moral_foundation";
  }
  return "stance";
}

Ideology parse_ideology(std::string_view s) {
  if (s == "liberal") return Ideology::liberal;
  if (s == "conservative") return Ideology::conservative;
  throw ValidationError("unknown ideology '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  if (s == "real") return Source::real;
  if (s == "generated") return Source::generated;
  throw ValidationError("unknown source '" + std::string(s) + "'");
}

FeatureKind parse_feature(std::string_view s) {
  if (s == "stance") return FeatureKind::stance;
  if (s == "emotion") return FeatureKind::emotion;
  if (s == "moral_foundation") return FeatureKind::moral_foundation;
  throw ValidationError("unknown feature '" + std::string(s) + "'");
}

bool ClassSet::contains(std::string_view name) const noexcept {
  return std::find(classes.begin(), classes.end(), name) != classes.end();
}

std::size_t ClassSet::index_of(std::string_view name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) {
    throw ValidationError("label '" + std::string(name) + "' is not a " +
                          std::string(to_string(feature)) + " class");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

ClassSet stance_classes() {
  return {FeatureKind::stance, {"negative", "neutral", "positive"}, false};
}

ClassSet emotion_classes() {
  return {FeatureKind::emotion,
          {"anticipation", "joy", "love", "trust", "optimism", "anger", "disgust", "fear",
           "sadness", "pessimism", "surprise"},
          true};
}

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kMoralPairs{{
    {"care", "harm"},
    {"fairness", "cheating"},
    {"loyalty", "betrayal"},
    {"authority", "subversion"},
    {"purity", "degradation"},
}};

std::string pair_name(std::string_view virtue, std::string_view vice) {
  return std::string(virtue) + "/" + std::string(vice);
}

}  // namespace

ClassSet moral_foundation_classes(bool collapse) {
  ClassSet set{FeatureKind::moral_foundation, {}, true};
  for (const auto& [virtue, vice] : kMoralPairs) {
    if (collapse) {
      set.classes.push_back(pair_name(virtue, vice));
    } else {
      set.classes.emplace_back(virtue);
      set.classes.emplace_back(vice);
    }
  }
  return set;
}

std::string collapse_moral_label(std::string_view label) {
  for (const auto& [virtue, vice] : kMoralPairs) {
    if (label == virtue || label == vice || label == pair_name(virtue, vice)) {
      return pair_name(virtue, vice);
    }
  }
  throw ValidationError("label '" + std::string(label) + "' is not a moral_foundation class");
}

ClassRegistry::ClassRegistry(bool mf_collapse)
    : mf_collapse_(mf_collapse),
      stance_(stance_classes()),
      emotion_(emotion_classes()),
      moral_(moral_foundation_classes(mf_collapse)) {}

const ClassSet& ClassRegistry::get(FeatureKind f) const noexcept {
  switch (f) {
    case FeatureKind::stance:
      return stance_;
    case FeatureKind::emotion:
      return emotion_;
    case FeatureKind::moral_foundation:
      return moral_;
  }
  return stance_;
}

std::vector<std::string> ClassRegistry::canonical_labels(
    FeatureKind f, const std::vector<std::string>& labels) const {
  const ClassSet& set = get(f);
  std::vector<bool> present(set.size(), false);
  for (const auto& label : labels) {
    if (f == FeatureKind::moral_foundation && mf_collapse_) {
      present[set.index_of(collapse_moral_label(label))] = true;
    } else {
      present[set.index_of(label)] = true;
    }
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (present[i]) out.push_back(set.classes[i]);
  }
  if (!set.multi_label && (out.size() != 1 || labels.size() != 1)) {
    throw ValidationError(std::string(to_string(f)) + " records need exactly one label, got " +
                          std::to_string(labels.size()));
  }
  return out;
}

namespace {

const std::unordered_set<std::string_view> kKnownFields{
    "id", "text", "ideology", "source", "topic", "entities", "created_at"};

const ordered_json& require(const ordered_json& j, const char* key, const std::string& path,
                            std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path, line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const ordered_json& j, const char* key, const std::string& path,
                           std::size_t line) {
  const auto& v = require(j, key, path, line);
  if (!v.is_string()) throw ParseError(path, line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

TextInstance instance_from_json(const ordered_json& j, const std::string& path,
                                std::size_t line) {
  if (!j.is_object()) throw ParseError(path, line, "expected a JSON object");
  TextInstance t;
  t.id = require_string(j, "id", path, line);
  if (t.id.empty()) throw ParseError(path, line, "empty id");
  t.text = require_string(j, "text", path, line);
  if (trim(t.text).empty()) throw ParseError(path, line, "empty text for id '" + t.id + "'");
  try {
    t.ideology = parse_ideology(require_string(j, "ideology", path, line));
    t.source = parse_source(require_string(j, "source", path, line));
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(path, line, e.what());
  }

  if (auto it = j.find("topic"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(path, line, "field 'topic' must be a string");
    t.topic = it->get<std::string>();
  }
  if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(path, line, "field 'entities' must be an array");
    std::vector<std::string> entities;
    for (const auto& e : *it) {
      if (!e.is_string()) throw ParseError(path, line, "entities must be strings");
      entities.push_back(e.get<std::string>());
    }
    t.entities = std::move(entities);
  }
  if (auto it = j.find("created_at"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError(path, line, "field 'created_at' must be an integer");
    t.created_at = it->get<std::int64_t>();
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKnownFields.contains(it.key())) t.extra[it.key()] = it.value();
  }
  return t;
}

ordered_json instance_to_json(const TextInstance& t) {
  ordered_json j;
  j["id"] = t.id;
  j["text"] = t.text;
  j["ideology"] = to_string(t.ideology);
  j["source"] = to_string(t.source);
  if (t.topic) j["topic"] = *t.topic;
  if (t.entities) j["entities"] = *t.entities;
  if (t.created_at) j["created_at"] = *t.created_at;
  for (auto it = t.extra.begin(); it != t.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

Corpus parse_corpus(std::istream& in, std::string name, const std::string& path) {
  Corpus corpus{std::move(name), {}};
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    TextInstance t = instance_from_json(j, path, line_no);
    auto [it, inserted] = first_seen.emplace(t.id, line_no);
    if (!inserted) {
      throw ParseError(path, line_no,
                       "duplicate id '" + t.id + "' (first seen on line " +
                           std::to_string(it->second) + ")");
    }
    corpus.instances.push_back(std::move(t));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus '" + path + "'");
  return parse_corpus(in, path, path);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& t : corpus.instances) out << instance_to_json(t).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_corpus(corpus, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

Corpus filter_corpus(const Corpus& corpus, const CorpusFilter& filter) {
  Corpus out{corpus.name, {}};
  for (const auto& t : corpus.instances) {
    if (filter.ideology && t.ideology != *filter.ideology) continue;
    if (filter.source && t.source != *filter.source) continue;
    if (filter.topic && t.topic != filter.topic) continue;
    out.instances.push_back(t);
  }
  return out;
}

}  // namespace partisan
