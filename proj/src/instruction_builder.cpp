#include "partisan/instruction_builder.hpp"

#include <fstream>
#include <set>

#include "partisan/errors.hpp"
#include "partisan/random.hpp"
#include "partisan/text.hpp"

namespace partisan {

EntityStats compute_entity_stats(const Corpus& corpus, std::size_t min_letters,
                                 std::int64_t min_count) {
  std::map<std::string, std::int64_t> raw;
  for (const auto& t : corpus.instances) {
    if (!t.entities) continue;
    for (const auto& e : *t.entities) ++raw[e];
  }
  EntityStats stats;
  for (auto& [entity, count] : raw) {
    if (count < min_count) continue;
    if (count_letters(entity) < min_letters) continue;
    stats.counts.emplace(entity, count);
  }
  return stats;
}

namespace {

void replace_once(std::string& s, std::string_view key, const std::string& value) {
  auto pos = s.find(key);
  if (pos != std::string::npos) s.replace(pos, key.size(), value);
}

}  // namespace

std::string render_template(const std::string& tmpl, const std::string& term,
                            const std::optional<std::string>& entity) {
  std::string out = tmpl;
  // Entity first, so an entity text containing "{TERM}" is left alone.
  if (entity) replace_once(out, "{ENTITY}", *entity);
  replace_once(out, "{TERM}", term);
  return out;
}

InstructionExample build_instruction(const TextInstance& instance, const EntityStats& stats,
                                     const IdeologyTerms& terms, std::uint64_t seed,
                                     const InstructionTemplates& templates) {
  Rng rng(seed);
  const auto& side = terms.for_side(instance.ideology);
  const std::string& term = side[uniform_index(rng, side.size())];

  std::vector<std::string> candidates;
  if (instance.entities) {
    std::set<std::string> seen;
    for (const auto& e : *instance.entities) {
      if (stats.contains(e) && seen.insert(e).second) candidates.push_back(e);
    }
  }

  InstructionExample ex;
  ex.output = instance.text;
  ex.ideology = instance.ideology;
  ex.instance_id = instance.id;
  if (!candidates.empty()) {
    ex.entity = candidates[uniform_index(rng, candidates.size())];
    ex.instruction = render_template(templates.with_entity, term, ex.entity);
  } else {
    ex.instruction = render_template(templates.without_entity, term, std::nullopt);
  }
  return ex;
}

std::size_t write_tuning_set(const Corpus& corpus, const EntityStats& stats,
                             const IdeologyTerms& terms, std::uint64_t seed, std::ostream& out,
                             const InstructionTemplates& templates) {
  std::size_t n = 0;
  for (const auto& t : corpus.instances) {
    const auto ex = build_instruction(t, stats, terms, derive_seed(seed, t.id), templates);
    nlohmann::ordered_json j;
    j["instruction"] = ex.instruction;
    j["output"] = ex.output;
    j["id"] = ex.instance_id;
    out << j.dump() << '\n';
    ++n;
  }
  return n;
}

std::size_t export_tuning_set(const Corpus& corpus, const EntityStats& stats,
                              const IdeologyTerms& terms, std::uint64_t seed,
                              const std::string& path, const InstructionTemplates& templates) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  const std::size_t n = write_tuning_set(corpus, stats, terms, seed, out, templates);
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
  return n;
}

std::vector<ProbePrompt> build_probe_prompts(const std::vector<IssuePreset>& issues,
                                             const IdeologyTerms& terms,
                                             const ProbeOptions& opts, std::uint64_t seed,
                                             const InstructionTemplates& templates) {
  if (opts.per_issue < 1 || opts.repeats < 1) {
    throw ValidationError("per_issue and repeats must both be >= 1");
  }
  std::vector<ProbePrompt> out;
  out.reserve(issues.size() * 2 * static_cast<std::size_t>(opts.per_issue) *
              static_cast<std::size_t>(opts.repeats));
  for (const auto& issue : issues) {
    const std::uint64_t issue_seed = derive_seed(seed, issue.issue);
    for (Ideology side : kIdeologies) {
      const auto& side_terms = terms.for_side(side);
      for (int r = 0; r < opts.repeats; ++r) {
        const std::uint64_t repeat_seed =
            derive_seed(issue_seed, static_cast<std::uint64_t>(r) * 2 +
                                        (side == Ideology::liberal ? 0 : 1));
        Rng rng(repeat_seed);
        for (int i = 0; i < opts.per_issue; ++i) {
          ProbePrompt p;
          p.issue = issue.issue;
          p.repeat = r;
          p.index = i;
          p.seed = repeat_seed;
          p.example.ideology = side;
          p.example.entity = issue.generation_framing;
          p.example.instance_id = issue.issue + "/" + std::string(to_string(side)) + "/" +
                                  std::to_string(r) + "/" + std::to_string(i);
          const std::string& term = side_terms[uniform_index(rng, side_terms.size())];
          p.example.instruction = render_template(templates.with_entity, term, p.example.entity);
          out.push_back(std::move(p));
        }
      }
    }
  }
  return out;
}

nlohmann::ordered_json probe_to_json(const ProbePrompt& p) {
  nlohmann::ordered_json j;
  j["instruction"] = p.example.instruction;
  j["ideology"] = to_string(p.example.ideology);
  j["issue"] = p.issue;
  j["repeat"] = p.repeat;
  return j;
}

std::size_t write_probe_prompts(const std::vector<ProbePrompt>& prompts, std::ostream& out) {
  for (const auto& p : prompts) out << probe_to_json(p).dump() << '\n';
  return prompts.size();
}

}  // namespace partisan
