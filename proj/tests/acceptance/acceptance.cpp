// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "partisan/annotate.hpp"
#include "partisan/cli.hpp"
#include "partisan/corpus.hpp"
#include "partisan/instruction_builder.hpp"
#include "partisan/issue_tagger.hpp"
#include "partisan/metrics.hpp"
#include "partisan/presets.hpp"
#include "support/mock_chat_server.hpp"
#include "support/temp_dir.hpp"

using namespace partisan;

namespace {

const std::string kFixtures = PARTISAN_FIXTURE_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

int cli_run(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "partisan");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

std::vector<nlohmann::json> jsonl(const std::string& path) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(test_support::slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

// ---- KLD kernel -------------------------------------------------------------

long double oracle_kld(const std::vector<double>& p, const std::vector<double>& q, long double eps) {
  const long double m = static_cast<long double>(p.size());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double ps = (p[i] + eps) / (1.0L + m * eps);
    const long double qs = (q[i] + eps) / (1.0L + m * eps);
    if (ps > 0.0L) sum += ps * std::log(ps / qs);
  }
  return sum;
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(m);
  for (auto& x : v) x = u(rng) < 0.25 ? 0.0 : u(rng);
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[rng() % m] = 1.0;
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

Verdict kld_kernel() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 2 + rng() % 11;
    const auto p = random_distribution(rng, m);
    const auto q = random_distribution(rng, m);
    const double got = kl_divergence(p, q);
    const double want = static_cast<double>(oracle_kld(p, q, 1e-6L));
    worst = std::max(worst, std::abs(got - want));
    v.require(std::abs(got - want) <= 1e-12, "oracle mismatch " + fmt(got) + " vs " + fmt(want));
    v.require(got >= -1e-12, "negative divergence");
    v.require(kl_divergence(p, p) == 0.0, "KLD(p,p) != 0");
    v.require(kl_divergence(q, q) == 0.0, "KLD(q,q) != 0");
  }
  const std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  const double worked = kl_divergence(p, q, {0.0});
  v.require(std::abs(worked - 0.5108) <= 5e-5, "worked example gave " + fmt(worked));
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 1.0, "took " + fmt(elapsed) + "s");
  if (v.pass) {
    v.detail = "1000 pairs, max |err| " + fmt(worst) + ", worked example " + fmt(worked) + ", " +
               fmt(elapsed) + "s";
  }
  return v;
}

// ---- tendency accuracy ------------------------------------------------------

std::vector<int> oracle_tendency(const std::array<std::vector<double>, 4>& v) {
  std::vector<int> acc;
  for (std::size_t i = 0; i < v[0].size(); ++i) {
    const double real = v[0][i] - v[1][i];
    const double model = v[2][i] - v[3][i];
    const int rs = real > 0 ? 1 : (real < 0 ? -1 : 0);
    const int ms = model > 0 ? 1 : (model < 0 ? -1 : 0);
    acc.push_back(rs == ms ? 1 : 0);
  }
  return acc;
}

Verdict tendency() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  int ties = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 2 + rng() % 11;
    std::array<std::vector<double>, 4> vecs;
    for (auto& vec : vecs) {
      vec.resize(m);
      for (auto& x : vec) x = static_cast<double>(rng() % 9) / 8.0;  // coarse grid so ties occur
    }
    for (std::size_t k = 0; k < m; ++k) ties += vecs[0][k] == vecs[1][k];

    const auto want = oracle_tendency(vecs);
    const auto r = tendency_accuracy(vecs[0], vecs[1], vecs[2], vecs[3]);
    const double overall = static_cast<double>(std::accumulate(want.begin(), want.end(), 0)) /
                           static_cast<double>(m);
    v.require(r.per_class == want, "per-class mismatch at case " + std::to_string(i));
    v.require(r.overall == overall, "overall mismatch at case " + std::to_string(i));

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::array<std::vector<double>, 4> permuted;
    for (int k = 0; k < 4; ++k) {
      for (std::size_t j = 0; j < m; ++j) permuted[k].push_back(vecs[k][perm[j]]);
    }
    const auto rp = tendency_accuracy(permuted[0], permuted[1], permuted[2], permuted[3]);
    v.require(rp.overall == r.overall, "permutation changed overall at case " + std::to_string(i));

    const double c = scale(rng);
    std::array<std::vector<double>, 4> scaled = vecs;
    for (auto& vec : scaled) {
      for (auto& x : vec) x *= c;
    }
    const auto rs = tendency_accuracy(scaled[0], scaled[1], scaled[2], scaled[3]);
    v.require(rs.per_class == r.per_class, "scaling changed result at case " + std::to_string(i));
  }
  if (v.pass) v.detail = "1000 cases, " + std::to_string(ties) + " real-side ties, permutation and scaling invariant";
  return v;
}

// ---- distribution construction ----------------------------------------------

Verdict distributions() {
  Verdict v;
  std::size_t cases = 0, degenerate = 0;
  double worst_sum = 0.0;
  for (std::size_t m = 2; m <= 4; ++m) {
    ClassSet cs{FeatureKind::emotion, {}, true};
    for (std::size_t i = 0; i < m; ++i) cs.classes.push_back("c" + std::to_string(i));
    const std::size_t subsets = std::size_t{1} << m;
    std::vector<std::vector<std::string>> subset_labels(subsets);
    for (std::size_t s = 0; s < subsets; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        if (s & (std::size_t{1} << i)) subset_labels[s].push_back(cs.classes[i]);
      }
    }
    for (std::size_t n = 1; n <= 8; ++n) {
      // Every multiset of n label subsets, as a nondecreasing index sequence.
      std::vector<std::size_t> idx(n, 0);
      for (;;) {
        ++cases;
        std::vector<std::int64_t> count(m, 0);
        std::vector<std::vector<std::string>> labels;
        labels.reserve(n);
        for (auto s : idx) {
          labels.push_back(subset_labels[s]);
          for (std::size_t i = 0; i < m; ++i) count[i] += (s >> i) & 1;
        }
        const std::int64_t total = std::accumulate(count.begin(), count.end(), std::int64_t{0});
        if (total == 0) {
          ++degenerate;
          bool threw = false;
          try {
            distribution_from_labels(cs, labels);
          } catch (const DegenerateDistribution&) {
            threw = true;
          }
          v.require(threw, "all-empty labels did not raise DegenerateDistribution");
        } else {
          const auto d = distribution_from_labels(cs, labels);
          double sum = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            const double raw = static_cast<double>(count[i]) / static_cast<double>(n);
            const double norm = static_cast<double>(count[i]) / static_cast<double>(total);
            v.require(d.counts[i] == count[i] && d.raw[i] == raw && d.normalized[i] == norm,
                      "mismatch for M=" + std::to_string(m) + " N=" + std::to_string(n));
            sum += d.normalized[i];
          }
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
          v.require(std::abs(sum - 1.0) <= 1e-9, "normalized sum off by " + fmt(sum - 1.0));
        }
        std::size_t k = n;
        while (k > 0 && idx[k - 1] == subsets - 1) --k;
        if (k == 0) break;
        const std::size_t next = idx[k - 1] + 1;
        for (std::size_t j = k - 1; j < n; ++j) idx[j] = next;
      }
    }
  }

  // The corpus-level path on random cells agrees with the same counting.
  std::mt19937_64 rng(9);
  const ClassSet emo = emotion_classes();
  for (int trial = 0; trial < 300; ++trial) {
    Corpus c;
    AnnotationStore store;
    const std::size_t n = 1 + rng() % 8;
    std::vector<std::int64_t> count(emo.size(), 0);
    for (std::size_t k = 0; k < n; ++k) {
      TextInstance t;
      t.id = "x" + std::to_string(k);
      t.text = "t";
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < emo.size(); ++i) {
        if (rng() % 4 == 0) {
          labels.push_back(emo.classes[i]);
          ++count[i];
        }
      }
      c.instances.push_back(t);
      store.add({t.id, FeatureKind::emotion, labels, "a", std::nullopt});
    }
    if (std::accumulate(count.begin(), count.end(), std::int64_t{0}) == 0) continue;
    const auto d = class_distribution(c, store, FeatureKind::emotion, Cell{}, ClassRegistry{});
    v.require(d.counts == count, "corpus-level counts disagree");
  }
  if (v.pass) {
    v.detail = std::to_string(cases) + " exhaustive cases (" + std::to_string(degenerate) +
               " degenerate), max |sum-1| " + fmt(worst_sum);
  }
  return v;
}

// ---- end-to-end fixture -----------------------------------------------------

Verdict end_to_end() {
  Verdict v;
  const auto t0 = Clock::now();
  const std::string study = kFixtures + "/mini_study";
  test_support::TempDir dir;
  std::string log;
  v.require(cli_run({"evaluate", "--config", study + "/config.json", "--output-dir", dir.file("o")}, &log) == 0,
            "evaluate failed: " + log);
  v.require(cli_run({"report", "--config", study + "/config.json", "--output-dir", dir.file("o")}, &log) == 0,
            "report failed: " + log);
  if (!v.pass) return v;

  const auto got = jsonl(dir.file("o/results.jsonl"));
  const auto want = jsonl(study + "/expected_results.jsonl");
  v.require(got.size() == want.size(), "row count " + std::to_string(got.size()));
  for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
    v.require(got[i] == want[i], "row " + std::to_string(i) + " differs: " + got[i].dump());
    const double a = got[i]["value"].get<double>(), b = want[i]["value"].get<double>();
    v.require(std::memcmp(&a, &b, sizeof a) == 0, "value bits differ at row " + std::to_string(i));
  }
  const std::string md = test_support::slurp(dir.file("o/report.md"));
  v.require(md == test_support::slurp(study + "/expected_report.md"), "markdown differs from oracle");
  v.require(md.find("|  | masking | **0.67** | **0.67** |") != std::string::npos, "tendency tie not double bold");

  // Bold flags in the JSON bundle equal a naive argmin/argmax scan of the oracle rows.
  const auto bundle = nlohmann::json::parse(test_support::slurp(dir.file("o/report.json")));
  std::size_t flags = 0;
  for (const auto& table : bundle["tables"]) {
    const bool kld = table["kind"] == "kld";
    for (const auto& cell : table["cells"]) {
      std::optional<double> best;
      for (const auto& r : want) {
        if (r["feature"] != table["feature"] || r["metric"] != table["kind"] || r["dataset"] != cell["dataset"] ||
            r["topic"] != cell["topic"] || (kld && r["ideology"] != cell["ideology"])) {
          continue;
        }
        const double x = r["value"].get<double>();
        if (!best || (kld ? x < *best : x > *best)) best = x;
      }
      v.require(best.has_value(), "cell without oracle rows");
      v.require(cell["best"].get<bool>() == (cell["value"].get<double>() == *best), "best flag mismatch");
      ++flags;
    }
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 5.0, "took " + fmt(elapsed) + "s");
  if (v.pass) {
    v.detail = std::to_string(got.size()) + " rows bit-exact, " + std::to_string(flags) + " best flags checked, " +
               fmt(elapsed) + "s";
  }
  return v;
}

// ---- probes -----------------------------------------------------------------

Verdict probe_count() {
  Verdict v;
  const auto issues = issue_presets("covid");
  v.require(issues.size() == 5, "covid preset has " + std::to_string(issues.size()) + " issues");
  const auto prompts = build_probe_prompts(issues, {}, {100, 10}, 2024);
  std::map<std::pair<std::string, Ideology>, int> per;
  std::map<std::tuple<std::string, Ideology, int>, int> per_repeat;
  for (const auto& p : prompts) {
    ++per[{p.issue, p.example.ideology}];
    ++per_repeat[{p.issue, p.example.ideology, p.repeat}];
  }
  v.require(prompts.size() == 10000, "got " + std::to_string(prompts.size()) + " prompts");
  v.require(per.size() == 10, "cells " + std::to_string(per.size()));
  for (const auto& [k, n] : per) v.require(n == 1000, k.first + " has " + std::to_string(n));
  for (const auto& [k, n] : per_repeat) v.require(n == 100, "repeat group of " + std::to_string(n));
  if (v.pass) v.detail = "10000 prompts, 1000 per (issue, ideology), 100 per repeat";
  return v;
}

// ---- ideology term sampling ---------------------------------------------------

Verdict term_sampling() {
  Verdict v;
  const int draws = 30000;
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  const IdeologyTerms terms;
  double worst = 0.0;
  for (Ideology side : kIdeologies) {
    std::map<std::string, int> freq;
    TextInstance t;
    t.id = "x";
    t.text = "y";
    t.ideology = side;
    for (int s = 0; s < draws; ++s) {
      const auto ex = build_instruction(t, {}, terms, static_cast<std::uint64_t>(s));
      const std::string head = "Write a tweet expressing a ";
      const auto end = ex.instruction.find(" perspective.");
      v.require(ex.instruction.rfind(head, 0) == 0 && end != std::string::npos, "unexpected: " + ex.instruction);
      if (!v.pass) return v;
      ++freq[ex.instruction.substr(head.size(), end - head.size())];
    }
    const auto& expected = terms.for_side(side);
    v.require(freq.size() == 3, "saw " + std::to_string(freq.size()) + " distinct terms");
    for (const auto& term : expected) {
      const double dev = std::abs(freq[term] - draws * p) / sigma;
      worst = std::max(worst, dev);
      v.require(dev <= 3.0, term + " drawn " + std::to_string(freq[term]) + " times");
    }
  }
  if (v.pass) v.detail = "30000 draws per side, max deviation " + fmt(worst) + " sigma";
  return v;
}

// ---- stance annotator -------------------------------------------------------

Verdict stance_annotator() {
  Verdict v;
  const std::string scenarios = kFixtures + "/mock_chat/scenarios.json";
  const std::string sentence =
      "Given the following statement and the target, infer the stance of the statement towards the target. "
      "Answer with only one word: neutral, positive, or negative.";

  test_support::MockChatServer server(scenarios);
  EndpointConfig endpoint;
  endpoint.url = server.url();
  HttpChatClient client(endpoint);
  StanceAnnotationOptions opts;
  opts.annotator = "mock";
  opts.sleep = [](double) {};
  const std::map<std::string, std::string> targets{{"covid", "COVID-19 lockdowns"}};

  auto make = [](const std::vector<std::string>& texts) {
    Corpus c;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      TextInstance t;
      t.id = "s" + std::to_string(i);
      t.text = texts[i];
      t.topic = "covid";
      c.instances.push_back(t);
    }
    return c;
  };

  // Retry: two server errors, then a parseable answer.
  AnnotationStore store;
  auto r = annotate_stances(make({"Lockdowns crushed small businesses"}), targets, client, opts, store);
  v.require(r.records.size() == 1 && r.records[0].labels[0] == "positive", "retry did not yield positive");
  v.require(server.requests_for("Lockdowns crushed small businesses") == 3, "retry used " +
            std::to_string(server.requests_for("Lockdowns crushed small businesses")) + " requests");
  const std::string content = server.bodies().at(0)["messages"][0]["content"];
  v.require(content.substr(0, sentence.size()) == sentence && content[sentence.size()] == '\n',
            "prompt sentence not byte-exact");
  v.require(server.bodies().at(0)["temperature"] == 0, "temperature not 0");

  // Resume: 3 of 5 done, then exactly 2 more requests; a third run sends none.
  test_support::TempDir dir;
  const auto path = dir.file("ann.jsonl");
  const auto five = make({"Masks save lives", "Masks save lives", "Masks save lives", "Masks save lives",
                          "Masks save lives"});
  {
    Corpus first;
    first.instances.assign(five.instances.begin(), five.instances.begin() + 3);
    AnnotationStore s;
    AnnotationWriter w(path, true);
    annotate_stances(first, targets, client, opts, s, &w);
  }
  const auto before = server.requests();
  AnnotationStore resumed = load_annotations(path);
  {
    AnnotationWriter w(path, true);
    annotate_stances(five, targets, client, opts, resumed, &w);
  }
  v.require(server.requests() - before == 2, "resume sent " + std::to_string(server.requests() - before));
  AnnotationStore again = load_annotations(path);
  const auto mid = server.requests();
  {
    AnnotationWriter w(path, true);
    annotate_stances(five, targets, client, opts, again, &w);
  }
  v.require(server.requests() == mid, "idempotent rerun sent requests");
  AnnotationStore once;
  annotate_stances(five, targets, client, opts, once);
  v.require(load_annotations(path).records() == once.records(), "resumed store differs from a single run");

  // Exit code 3 when a skip remains.
  std::string corpus;
  for (const auto& [id, text] : std::vector<std::pair<std::string, std::string>>{
           {"a", "Masks save lives"}, {"b", "The lab leak theory deserves a hearing"}}) {
    corpus += nlohmann::json{{"id", id}, {"text", text}, {"ideology", "liberal"}, {"source", "real"},
                             {"topic", "origins"}}.dump() + "\n";
  }
  dir.write("corpus.jsonl", corpus);
  std::string log;
  const int code = cli_run({"annotate-stance", "--input", dir.file("corpus.jsonl"), "--issue-preset", "covid",
                            "--endpoint", server.url(), "--annotations", dir.file("cli.jsonl"), "--output-dir",
                            dir.file("o")},
                           &log);
  v.require(code == cli::kExitPartial, "exit code " + std::to_string(code) + ": " + log);
  v.require(jsonl(dir.file("o/skips.jsonl")).size() == 1, "expected one skip record");
  if (v.pass) v.detail = "prompt byte-exact, retry 3 requests, resume 2 then 0 requests, exit 3 on skip";
  return v;
}

// ---- entity filtering -------------------------------------------------------

Verdict entity_filtering() {
  Verdict v;
  const Corpus c = load_corpus(kFixtures + "/entities.jsonl");
  std::map<std::string, std::int64_t> raw;
  for (const auto& t : c.instances) {
    for (const auto& e : *t.entities) ++raw[e];
  }
  v.require(raw == std::map<std::string, std::int64_t>{{"Obama", 99}, {"Q", 150}, {"Trump", 150}, {"Xi", 150}},
            "fixture counts changed");
  const auto stats = compute_entity_stats(c, 2, 100);
  v.require(stats.counts == std::map<std::string, std::int64_t>{{"Trump", 150}, {"Xi", 150}},
            "survivors differ");

  test_support::TempDir dir;
  std::string log;
  v.require(cli_run({"build-tuning-set", "--input", kFixtures + "/entities.jsonl", "--seed", "5", "--output-dir",
                     dir.file("o")},
                    &log) == 0,
            "build-tuning-set failed: " + log);
  std::set<std::string> referenced;
  for (const auto& row : jsonl(dir.file("o/tuning_set.jsonl"))) {
    const std::string s = row["instruction"];
    const auto at = s.find(" regarding ");
    if (at != std::string::npos) referenced.insert(s.substr(at + 11, s.size() - at - 12));
  }
  v.require(referenced == std::set<std::string>{"Trump", "Xi"}, "instructions reference filtered entities");
  if (v.pass) v.detail = "{Trump:150, Xi:150} survive; Obama (99) and Q (1 letter) excluded";
  return v;
}

// ---- distinctive terms ------------------------------------------------------

Verdict distinctive_terms() {
  Verdict v;
  std::mt19937_64 rng(3);
  const std::vector<std::string> words{"mask", "mandate", "vaccine", "lab", "leak", "school", "open", "close",
                                       "tax", "wall", "#masks4all", "Pfizer"};
  auto random_corpus = [&](const std::string& prefix) {
    Corpus c;
    const std::size_t n = 1 + rng() % 10;
    for (std::size_t i = 0; i < n; ++i) {
      TextInstance t;
      t.id = prefix + std::to_string(i);
      for (std::size_t k = 0, len = 1 + rng() % 12; k < len; ++k) t.text += words[rng() % words.size()] + " ";
      if (i == 0) t.text += words[0] + " " + words[1];  // at least two distinct terms
      c.instances.push_back(t);
    }
    return c;
  };
  std::size_t scored = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Corpus fg = random_corpus("f"), bg = random_corpus("b");
    DistinctiveTermOptions opts;
    opts.max_ngram = 1 + trial % 3;
    opts.prior_strength = 0.25 * static_cast<double>(1 + trial % 4);
    const auto ab = score_terms(fg, bg, opts);
    const auto ba = score_terms(bg, fg, opts);
    v.require(ab.size() == ba.size(), "vocabulary differs under swap");
    for (std::size_t i = 0; i < std::min(ab.size(), ba.size()); ++i) {
      v.require(ab[i].term == ba[i].term && ab[i].zeta == -ba[i].zeta, "not antisymmetric for " + ab[i].term);
    }
    for (const auto& s : score_terms(fg, fg, opts)) v.require(s.zeta == 0.0, "self-score nonzero for " + s.term);
    scored += ab.size();
  }
  if (v.pass) v.detail = "300 corpus pairs, " + std::to_string(scored) + " terms exactly antisymmetric, self-scores 0";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"kld_kernel", kld_kernel},
      {"tendency_accuracy", tendency},
      {"distribution_construction", distributions},
      {"end_to_end_fixture", end_to_end},
      {"probe_count", probe_count},
      {"ideology_term_sampling", term_sampling},
      {"stance_annotator", stance_annotator},
      {"entity_filtering", entity_filtering},
      {"distinctive_terms", distinctive_terms},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
