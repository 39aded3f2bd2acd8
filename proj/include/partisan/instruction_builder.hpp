#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "partisan/corpus.hpp"
#include "partisan/presets.hpp"

namespace partisan {

struct IdeologyTerms {
  std::array<std::string, 3> liberal{"liberal", "left", "Democratic"};
  std::array<std::string, 3> conservative{"conservative", "right", "Conservative"};

  const std::array<std::string, 3>& for_side(Ideology side) const noexcept {
    return side == Ideology::liberal ? liberal : conservative;
  }
};

// {TERM} and {ENTITY} are substituted once each.
struct InstructionTemplates {
  std::string with_entity = "Write a tweet expressing a {TERM} perspective regarding {ENTITY}.";
  std::string without_entity = "Write a tweet expressing a {TERM} perspective.";
};

struct InstructionExample {
  std::string instruction;
  std::string output;
  Ideology ideology = Ideology::liberal;
  std::optional<std::string> entity;
  std::string instance_id;

  friend bool operator==(const InstructionExample&, const InstructionExample&) = default;
};

// Entity occurrence counts over a corpus after the letter and count filters.
struct EntityStats {
  std::map<std::string, std::int64_t> counts;

  bool contains(const std::string& entity) const { return counts.contains(entity); }
  std::size_t size() const noexcept { return counts.size(); }
};

// Aggregates pre-extracted `entities` lists. Every list element is one
// occurrence. Entities with fewer than `min_letters` alphabetic code points or
// fewer than `min_count` occurrences are dropped.
EntityStats compute_entity_stats(const Corpus& corpus, std::size_t min_letters = 2,
                                 std::int64_t min_count = 100);

std::string render_template(const std::string& tmpl, const std::string& term,
                            const std::optional<std::string>& entity);

// Samples one ideology term for the instance's side and, when the instance
// carries entities that survive `stats`, one of those entities. Both draws are
// uniform and depend only on `seed`.
InstructionExample build_instruction(const TextInstance& instance, const EntityStats& stats,
                                     const IdeologyTerms& terms, std::uint64_t seed,
                                     const InstructionTemplates& templates = {});

// One {"instruction","output","id"} line per instance. Instance i is built with
// derive_seed(seed, id), so the file depends only on (corpus, stats, terms, seed).
std::size_t write_tuning_set(const Corpus& corpus, const EntityStats& stats,
                             const IdeologyTerms& terms, std::uint64_t seed, std::ostream& out,
                             const InstructionTemplates& templates = {});
std::size_t export_tuning_set(const Corpus& corpus, const EntityStats& stats,
                              const IdeologyTerms& terms, std::uint64_t seed,
                              const std::string& path, const InstructionTemplates& templates = {});

struct ProbePrompt {
  InstructionExample example;  // output is empty; instance_id is "<issue>/<ideology>/<repeat>/<index>"
  std::string issue;
  int repeat = 0;
  int index = 0;
  std::uint64_t seed = 0;  // seed of this repeat, for grouping downstream generations

  friend bool operator==(const ProbePrompt&, const ProbePrompt&) = default;
};

struct ProbeOptions {
  int per_issue = 100;
  int repeats = 10;
};

// For every issue and both ideologies, per_issue x repeats prompts using the
// entity template with the issue's generation framing as the entity.
std::vector<ProbePrompt> build_probe_prompts(const std::vector<IssuePreset>& issues,
                                             const IdeologyTerms& terms,
                                             const ProbeOptions& opts, std::uint64_t seed,
                                             const InstructionTemplates& templates = {});

nlohmann::ordered_json probe_to_json(const ProbePrompt& p);
std::size_t write_probe_prompts(const std::vector<ProbePrompt>& prompts, std::ostream& out);

}  // namespace partisan
