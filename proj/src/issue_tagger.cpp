#include "partisan/issue_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "partisan/errors.hpp"
#include "partisan/text.hpp"

namespace partisan {

namespace {

struct NgramCounts {
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
};

NgramCounts count_ngrams(const Corpus& corpus, int max_ngram) {
  NgramCounts out;
  for (const auto& t : corpus.instances) {
    const auto tokens = tokenize(t.text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::string gram;
      for (int n = 1; n <= max_ngram && i + n <= tokens.size(); ++n) {
        if (n > 1) gram += ' ';
        gram += tokens[i + n - 1];
        ++out.counts[gram];
        ++out.total;
      }
    }
  }
  return out;
}

void validate(const Corpus& fg, const Corpus& bg, const DistinctiveTermOptions& opts) {
  if (fg.empty() || bg.empty()) throw ValidationError("distinctive terms need non-empty corpora");
  if (opts.max_ngram < 1 || opts.max_ngram > 3) throw ValidationError("max_ngram must be 1, 2 or 3");
  if (opts.top_k < 1) throw ValidationError("top_k must be >= 1");
  if (!(opts.prior_strength > 0.0) || !std::isfinite(opts.prior_strength)) {
    throw ValidationError("prior_strength must be a positive finite number");
  }
}

}  // namespace

std::vector<TermScore> score_terms(const Corpus& foreground, const Corpus& background,
                                   const DistinctiveTermOptions& opts) {
  validate(foreground, background, opts);
  const NgramCounts fg = count_ngrams(foreground, opts.max_ngram);
  const NgramCounts bg = count_ngrams(background, opts.max_ngram);
  if (fg.total == 0 || bg.total == 0) throw ValidationError("a corpus has no tokens");

  std::set<std::string> vocab;
  for (const auto& [w, _] : fg.counts) vocab.insert(w);
  for (const auto& [w, _] : bg.counts) vocab.insert(w);

  if (vocab.size() < 2) throw ValidationError("log-odds are undefined over a one-term vocabulary");
  const double a0 = static_cast<double>(vocab.size());
  const double n_fg = static_cast<double>(fg.total);
  const double n_bg = static_cast<double>(bg.total);

  std::vector<TermScore> scores;
  scores.reserve(vocab.size());
  for (const auto& w : vocab) {
    const auto fit = fg.counts.find(w);
    const auto bit = bg.counts.find(w);
    const std::int64_t c_fg = fit == fg.counts.end() ? 0 : fit->second;
    const std::int64_t c_bg = bit == bg.counts.end() ? 0 : bit->second;
    const double y_fg = static_cast<double>(c_fg);
    const double y_bg = static_cast<double>(c_bg);
    const double alpha = opts.prior_strength * (y_fg + y_bg) / (n_fg + n_bg) * a0;

    const double rest_fg = n_fg + a0 - y_fg - alpha;
    const double rest_bg = n_bg + a0 - y_bg - alpha;
    if (!(rest_fg > 0.0) || !(rest_bg > 0.0)) {
      throw ValidationError("prior_strength too large: prior mass exceeds corpus mass for '" + w + "'");
    }
    const double delta = std::log((y_fg + alpha) / rest_fg) - std::log((y_bg + alpha) / rest_bg);
    const double variance = 1.0 / (y_fg + alpha) + 1.0 / (y_bg + alpha);
    scores.push_back({w, delta / std::sqrt(variance), c_fg, c_bg});
  }
  return scores;
}

std::vector<TermScore> extract_distinctive_terms(const Corpus& foreground,
                                                 const Corpus& background,
                                                 const DistinctiveTermOptions& opts) {
  std::vector<TermScore> scores = score_terms(foreground, background, opts);
  std::erase_if(scores, [](const TermScore& s) { return s.count_fg < 1; });
  std::stable_sort(scores.begin(), scores.end(), [](const TermScore& a, const TermScore& b) {
    if (a.zeta != b.zeta) return a.zeta > b.zeta;
    return a.term < b.term;
  });
  if (scores.size() > opts.top_k) scores.resize(opts.top_k);
  return scores;
}

IssueLexicon::IssueLexicon(std::string issue, std::vector<WeightedTerm> terms, bool case_sensitive)
    : issue_(std::move(issue)), case_sensitive_(case_sensitive) {
  if (issue_.empty()) throw ValidationError("lexicon issue name is empty");
  if (terms.empty()) throw ValidationError("lexicon '" + issue_ + "' has no terms");
  std::set<std::string> seen;
  for (auto& t : terms) {
    if (!case_sensitive_) t.term = to_lower_utf8(t.term);
    auto toks = tokenize(t.term, {.lowercase = !case_sensitive_});
    if (toks.empty()) throw ValidationError("lexicon '" + issue_ + "' has an empty term");
    if (!std::isfinite(t.weight)) throw ValidationError("lexicon '" + issue_ + "' has a non-finite weight");
    if (!seen.insert(t.term).second) {
      throw ValidationError("lexicon '" + issue_ + "' repeats term '" + t.term + "'");
    }
    tokens_.push_back(std::move(toks));
    terms_.push_back(std::move(t));
  }
}

IssueLexicon lexicon_from_json(const nlohmann::json& j) {
  try {
    std::vector<WeightedTerm> terms;
    for (const auto& t : j.at("terms")) {
      if (t.is_string()) {
        terms.push_back({t.get<std::string>(), 1.0});
      } else {
        terms.push_back({t.at("term").get<std::string>(), t.value("weight", 1.0)});
      }
    }
    return IssueLexicon(j.at("issue").get<std::string>(), std::move(terms),
                        j.value("case_sensitive", false));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad lexicon JSON: ") + e.what());
  }
}

nlohmann::ordered_json lexicon_to_json(const IssueLexicon& lex) {
  nlohmann::ordered_json j;
  j["issue"] = lex.issue();
  j["case_sensitive"] = lex.case_sensitive();
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& t : lex.terms()) {
    j["terms"].push_back({{"term", t.term}, {"weight", t.weight}});
  }
  return j;
}

std::vector<IssueLexicon> load_lexicons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open lexicon file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  std::vector<IssueLexicon> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(lexicon_from_json(item));
  } else {
    out.push_back(lexicon_from_json(j));
  }
  return out;
}

IssueLexicon lexicon_from_terms(const std::string& issue, const std::vector<TermScore>& terms) {
  std::vector<WeightedTerm> weighted;
  weighted.reserve(terms.size());
  for (const auto& t : terms) weighted.push_back({t.term, t.zeta});
  return IssueLexicon(issue, std::move(weighted));
}

TagPolicy parse_tag_policy(std::string_view s) {
  if (s == "all_matching") return TagPolicy::all_matching;
  if (s == "best_single") return TagPolicy::best_single;
  throw ValidationError("unknown tagging policy '" + std::string(s) + "'");
}

namespace {

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::vector<IssueMatch> match_issues(std::string_view text,
                                     const std::vector<IssueLexicon>& lexicons) {
  std::vector<std::string> folded;
  std::vector<std::string> cased;
  bool have_folded = false;
  bool have_cased = false;

  std::vector<IssueMatch> matches;
  for (std::size_t li = 0; li < lexicons.size(); ++li) {
    const auto& lex = lexicons[li];
    const std::vector<std::string>* tokens = nullptr;
    if (lex.case_sensitive()) {
      if (!have_cased) cased = tokenize(text, {.lowercase = false}), have_cased = true;
      tokens = &cased;
    } else {
      if (!have_folded) folded = tokenize(text), have_folded = true;
      tokens = &folded;
    }
    bool hit = false;
    double sum = 0.0;
    for (std::size_t ti = 0; ti < lex.terms().size(); ++ti) {
      if (contains_run(*tokens, lex.term_tokens()[ti])) {
        hit = true;
        sum += lex.terms()[ti].weight;
      }
    }
    if (hit) matches.push_back({li, sum});
  }
  return matches;
}

Corpus tag_issues(const Corpus& corpus, const std::vector<IssueLexicon>& lexicons,
                  TagPolicy policy) {
  if (lexicons.empty()) throw ValidationError("tag_issues needs at least one lexicon");
  Corpus out{corpus.name, {}};
  out.instances.reserve(corpus.size());
  for (const auto& t : corpus.instances) {
    const auto matches = match_issues(t.text, lexicons);
    TextInstance tagged = t;
    tagged.topic.reset();
    if (matches.empty()) {
      out.instances.push_back(std::move(tagged));
      continue;
    }
    if (policy == TagPolicy::all_matching) {
      for (const auto& m : matches) {
        TextInstance copy = tagged;
        copy.topic = lexicons[m.lexicon_index].issue();
        out.instances.push_back(std::move(copy));
      }
    } else {
      const IssueMatch* best = &matches.front();
      for (const auto& m : matches) {
        if (m.weight_sum > best->weight_sum) best = &m;
      }
      tagged.topic = lexicons[best->lexicon_index].issue();
      out.instances.push_back(std::move(tagged));
    }
  }
  return out;
}

}  // namespace partisan
