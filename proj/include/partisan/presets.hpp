#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "partisan/issue_tagger.hpp"

namespace partisan {

// How one issue is phrased when prompting a generator versus when asking an
// annotator for stance. The two usually coincide.
struct IssuePreset {
  std::string issue;
  std::string generation_framing;
  std::string stance_target;

  friend bool operator==(const IssuePreset&, const IssuePreset&) = default;
};

// Names of bundled preset groups: "covid", "abortion", "congress".
std::vector<std::string> preset_names();

// Throws ValidationError for an unknown group.
std::vector<IssuePreset> issue_presets(std::string_view group);
std::vector<IssueLexicon> preset_lexicons(std::string_view group);

IssuePreset issue_preset_from_json(const nlohmann::json& j);
nlohmann::ordered_json issue_preset_to_json(const IssuePreset& p);
// A JSON array of issue presets, or a single object.
std::vector<IssuePreset> load_issue_presets(const std::string& path);

}  // namespace partisan
