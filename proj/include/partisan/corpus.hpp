#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace partisan {

enum class Ideology { liberal, conservative };
enum class Source { real, generated };
enum class FeatureKind { stance, emotion, moral_foundation };

inline constexpr Ideology kIdeologies[] = {Ideology::liberal, Ideology::conservative};
inline constexpr FeatureKind kFeatures[] = {FeatureKind::stance, FeatureKind::emotion,
                                            FeatureKind::moral_foundation};

std::string_view to_string(Ideology v) noexcept;
std::string_view to_string(Source v) noexcept;
std::string_view to_string(FeatureKind v) noexcept;

// Parsers accept the lowercase wire names only and throw ValidationError otherwise.
Ideology parse_ideology(std::string_view s);
Source parse_source(std::string_view s);
FeatureKind parse_feature(std::string_view s);

// Ordered label space of one feature.
struct ClassSet {
  FeatureKind feature{};
  std::vector<std::string> classes;
  bool multi_label = false;

  std::size_t size() const noexcept { return classes.size(); }
  bool contains(std::string_view name) const noexcept;
  // Throws ValidationError if `name` is not a class of this set.
  std::size_t index_of(std::string_view name) const;
};

ClassSet stance_classes();
ClassSet emotion_classes();
// Ten poles by default; `collapse` merges each virtue/vice pair into one
// "virtue/vice" class (five classes).
ClassSet moral_foundation_classes(bool collapse = false);

// Maps a ten-pole moral foundation label onto its collapsed "virtue/vice"
// class. Labels that are already collapsed pass through. Throws on unknown labels.
std::string collapse_moral_label(std::string_view label);

// Label spaces for all three features under one configuration.
class ClassRegistry {
 public:
  explicit ClassRegistry(bool mf_collapse = false);

  const ClassSet& get(FeatureKind f) const noexcept;
  bool mf_collapsed() const noexcept { return mf_collapse_; }

  // Checks a label list against the feature's class set and cardinality rule.
  // Under MF collapse, ten-pole labels are accepted and folded (logical OR).
  // Returns the labels in class-set order, deduplicated.
  std::vector<std::string> canonical_labels(FeatureKind f,
                                            const std::vector<std::string>& labels) const;

 private:
  bool mf_collapse_;
  ClassSet stance_;
  ClassSet emotion_;
  ClassSet moral_;
};

struct TextInstance {
  std::string id;
  std::string text;
  Ideology ideology = Ideology::liberal;
  Source source = Source::real;
  std::optional<std::string> topic;
  std::optional<std::vector<std::string>> entities;
  std::optional<std::int64_t> created_at;
  // Unknown fields, carried through serialization untouched.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  friend bool operator==(const TextInstance&, const TextInstance&) = default;
};

struct Corpus {
  std::string name;
  std::vector<TextInstance> instances;

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Validates one decoded JSON object. `line` is used for error reporting only.
TextInstance instance_from_json(const nlohmann::ordered_json& j, const std::string& path,
                                std::size_t line);
nlohmann::ordered_json instance_to_json(const TextInstance& t);

// One JSON object per line; blank lines are skipped. Throws ParseError naming the
// offending line for malformed JSON, duplicate ids, unknown enum values, or empty text.
Corpus parse_corpus(std::istream& in, std::string name, const std::string& path = {});
Corpus load_corpus(const std::string& path);

void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::string& path);

struct CorpusFilter {
  std::optional<Ideology> ideology;
  std::optional<std::string> topic;
  std::optional<Source> source;
};

// Keeps instances matching every set predicate, in their original order.
Corpus filter_corpus(const Corpus& corpus, const CorpusFilter& filter);

}  // namespace partisan
