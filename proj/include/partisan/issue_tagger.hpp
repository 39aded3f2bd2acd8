#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "partisan/corpus.hpp"

namespace partisan {

struct TermScore {
  std::string term;
  double zeta = 0.0;
  std::int64_t count_fg = 0;
  std::int64_t count_bg = 0;
};

struct DistinctiveTermOptions {
  int max_ngram = 1;  // 1..3
  std::size_t top_k = 50;
  double prior_strength = 1.0;
};

// Weighted log-odds-ratio z-score of every n-gram seen in either corpus,
// with an informative Dirichlet prior built from the pooled counts:
//
//   a0    = |vocabulary|
//   a_w   = prior_strength * (y_fg + y_bg) / (n_fg + n_bg) * a0
//   delta = ln((y_fg + a_w) / (n_fg + a0 - y_fg - a_w))
//         - ln((y_bg + a_w) / (n_bg + a0 - y_bg - a_w))
//   zeta  = delta / sqrt(1 / (y_fg + a_w) + 1 / (y_bg + a_w))
//
// n-grams never cross instance boundaries. Returned in lexicographic term order.
// Swapping the corpora negates every zeta exactly.
std::vector<TermScore> score_terms(const Corpus& foreground, const Corpus& background,
                                   const DistinctiveTermOptions& opts);

// Terms present in the foreground, ranked by descending zeta (ties broken
// lexicographically), truncated to top_k. A top_k beyond the vocabulary
// returns the full ranking. Throws ValidationError on an empty corpus or bad options.
std::vector<TermScore> extract_distinctive_terms(const Corpus& foreground,
                                                 const Corpus& background,
                                                 const DistinctiveTermOptions& opts);

struct WeightedTerm {
  std::string term;
  double weight = 1.0;
};

class IssueLexicon {
 public:
  // Normalizes terms (lowercased unless case_sensitive) and rejects empty or
  // duplicate terms.
  IssueLexicon(std::string issue, std::vector<WeightedTerm> terms, bool case_sensitive = false);

  const std::string& issue() const noexcept { return issue_; }
  const std::vector<WeightedTerm>& terms() const noexcept { return terms_; }
  bool case_sensitive() const noexcept { return case_sensitive_; }
  // Token sequence of each term, parallel to terms().
  const std::vector<std::vector<std::string>>& term_tokens() const noexcept { return tokens_; }

 private:
  std::string issue_;
  std::vector<WeightedTerm> terms_;
  bool case_sensitive_;
  std::vector<std::vector<std::string>> tokens_;
};

IssueLexicon lexicon_from_json(const nlohmann::json& j);
nlohmann::ordered_json lexicon_to_json(const IssueLexicon& lex);
// Accepts either one lexicon object or an array of them.
std::vector<IssueLexicon> load_lexicons(const std::string& path);

// Builds a lexicon from ranked terms, weight = zeta.
IssueLexicon lexicon_from_terms(const std::string& issue, const std::vector<TermScore>& terms);

enum class TagPolicy { all_matching, best_single };

TagPolicy parse_tag_policy(std::string_view s);

struct IssueMatch {
  std::size_t lexicon_index = 0;
  double weight_sum = 0.0;
};

// Lexicons whose terms occur in `text` (whole tokens, phrases as contiguous
// token runs), in lexicon order. Each distinct matched term contributes its
// weight once.
std::vector<IssueMatch> match_issues(std::string_view text,
                                     const std::vector<IssueLexicon>& lexicons);

// Sets each instance's topic from the lexicons. Unmatched instances end up
// with no topic. all_matching emits one copy of an instance per matched issue;
// best_single keeps the highest weight sum, ties going to the earlier lexicon.
Corpus tag_issues(const Corpus& corpus, const std::vector<IssueLexicon>& lexicons,
                  TagPolicy policy = TagPolicy::best_single);

}  // namespace partisan
