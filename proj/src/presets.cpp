#include "partisan/presets.hpp"

#include <fstream>

#include "partisan/errors.hpp"

namespace partisan {

namespace {

struct LexiconSeed {
  const char* issue;
  std::vector<const char*> terms;
};

// Seed vocabularies per issue. Weights are uniform; rebuild with
// extract-terms on local data for data-driven weights.
const std::vector<LexiconSeed>& covid_seeds() {
  static const std::vector<LexiconSeed> seeds{
      {"origins",
       {"wuhan", "lab leak", "wuhan lab", "virology", "wuhan institute", "bat", "wet market",
        "gain of function", "chinese virus", "origin of covid", "covid origins"}},
      {"lockdowns",
       {"lockdown", "lockdowns", "stay at home", "stay home", "shelter in place", "reopen",
        "reopening", "shutdown", "quarantine", "curfew"}},
      {"masking",
       {"mask", "masks", "masking", "face covering", "mask mandate", "mask mandates", "n95",
        "wear a mask", "maskup", "unmask"}},
      {"education",
       {"school", "schools", "school closures", "remote learning", "reopen schools", "teachers",
        "students", "classroom", "in person learning", "online classes"}},
      {"vaccines",
       {"vaccine", "vaccines", "vaccinated", "vaccination", "pfizer", "moderna", "booster",
        "vaccine mandate", "antivax", "johnson and johnson"}},
  };
  return seeds;
}

const std::vector<LexiconSeed>& abortion_seeds() {
  static const std::vector<LexiconSeed> seeds{
      {"religion", {"god", "church", "sin", "pray", "prayer", "bible", "catholic", "christian", "faith", "jesus"}},
      {"autonomy",
       {"my body my choice", "bodily autonomy", "body autonomy", "choice", "pro choice",
        "reproductive rights", "reproductive freedom", "her body", "womens rights"}},
      {"fetal",
       {"fetus", "unborn", "heartbeat", "personhood", "fetal personhood", "baby", "babies",
        "life begins", "conception", "pro life"}},
      {"health",
       {"maternal health", "womens health", "health care", "healthcare", "miscarriage",
        "ectopic", "doctor", "doctors", "hospital", "maternal mortality"}},
      {"exception",
       {"rape", "incest", "exception", "exceptions", "viability", "life of the mother",
        "late term", "weeks", "fetal viability", "medical emergency"}},
  };
  return seeds;
}

const std::vector<LexiconSeed>& congress_seeds() {
  static const std::vector<LexiconSeed> seeds{
      {"abortion", {"abortion", "planned parenthood", "roe", "pro life", "pro choice", "unborn"}},
      {"aca",
       {"affordable care act", "obamacare", "aca", "health care", "healthcare", "repeal and replace",
        "preexisting conditions"}},
      {"guns",
       {"gun", "guns", "gun violence", "second amendment", "2a", "nra", "background checks",
        "firearm", "firearms", "assault weapons"}},
      {"immigration",
       {"immigration", "immigrants", "border", "border wall", "daca", "dreamers", "refugees",
        "deportation", "amnesty", "sanctuary"}},
      {"lgbtq",
       {"lgbt", "lgbtq", "gay", "lesbian", "transgender", "marriage equality", "pride",
        "same sex", "lovewins"}},
      {"terrorism",
       {"isis", "isil", "terrorism", "terrorist", "terrorists", "jihad", "al qaeda",
        "counterterrorism", "extremism"}},
  };
  return seeds;
}

const std::vector<LexiconSeed>& seeds_for(std::string_view group) {
  if (group == "covid") return covid_seeds();
  if (group == "abortion") return abortion_seeds();
  if (group == "congress") return congress_seeds();
  throw ValidationError("unknown preset group '" + std::string(group) + "'");
}

}  // namespace

std::vector<std::string> preset_names() { return {"covid", "abortion", "congress"}; }

std::vector<IssuePreset> issue_presets(std::string_view group) {
  if (group == "covid") {
    return {
        {"origins", "COVID-19 origins", "origins of COVID-19 as a leak from a virology research lab"},
        {"lockdowns", "COVID-19 lockdowns", "COVID-19 lockdowns"},
        {"masking", "COVID-19 mask mandates", "COVID-19 mask mandates"},
        {"education", "school closures during COVID-19", "school closures during COVID-19"},
        {"vaccines", "COVID-19 vaccines", "COVID-19 vaccines"},
    };
  }
  if (group == "abortion") {
    return {
        {"religion", "religion and abortion", "religion and abortion"},
        {"autonomy", "bodily autonomy and abortion", "bodily autonomy and abortion"},
        {"fetal", "fetal personhood", "fetal personhood"},
        {"health", "women's health and abortion", "women's health and abortion"},
        {"exception", "exceptions to abortion bans and fetal viability",
         "exceptions to abortion bans and fetal viability"},
    };
  }
  if (group == "congress") {
    return {
        {"abortion", "abortion", "abortion"},
        {"aca", "the Affordable Care Act", "the Affordable Care Act"},
        {"guns", "gun control", "gun control"},
        {"immigration", "immigration", "immigration"},
        {"lgbtq", "LGBTQ rights", "LGBTQ rights"},
        {"terrorism", "terrorism", "terrorism"},
    };
  }
  throw ValidationError("unknown preset group '" + std::string(group) + "'");
}

std::vector<IssueLexicon> preset_lexicons(std::string_view group) {
  std::vector<IssueLexicon> out;
  for (const auto& seed : seeds_for(group)) {
    std::vector<WeightedTerm> terms;
    for (const char* t : seed.terms) terms.push_back({t, 1.0});
    out.emplace_back(seed.issue, std::move(terms));
  }
  return out;
}

IssuePreset issue_preset_from_json(const nlohmann::json& j) {
  try {
    IssuePreset p;
    p.issue = j.at("issue").get<std::string>();
    p.generation_framing = j.at("generation_framing").get<std::string>();
    p.stance_target = j.value("stance_target", p.generation_framing);
    if (p.issue.empty() || p.generation_framing.empty() || p.stance_target.empty()) {
      throw ValidationError("issue preset fields must be non-empty");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad issue preset JSON: ") + e.what());
  }
}

nlohmann::ordered_json issue_preset_to_json(const IssuePreset& p) {
  nlohmann::ordered_json j;
  j["issue"] = p.issue;
  j["generation_framing"] = p.generation_framing;
  j["stance_target"] = p.stance_target;
  return j;
}

std::vector<IssuePreset> load_issue_presets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open issue preset file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  std::vector<IssuePreset> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(issue_preset_from_json(item));
  } else {
    out.push_back(issue_preset_from_json(j));
  }
  return out;
}

}  // namespace partisan
