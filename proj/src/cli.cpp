#include "partisan/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "partisan/annotate.hpp"
#include "partisan/corpus.hpp"
#include "partisan/errors.hpp"
#include "partisan/evaluate.hpp"
#include "partisan/format.hpp"
#include "partisan/instruction_builder.hpp"
#include "partisan/issue_tagger.hpp"
#include "partisan/presets.hpp"
#include "partisan/report.hpp"
#include "partisan/version.hpp"

namespace partisan::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Exit code 3: the run finished but left work undone.
class PartialRun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- flags ------------------------------------------------------------------

struct Flags {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  bool mf_collapse = false;
  std::optional<std::string> kld_direction;
  std::optional<std::string> log_base;
  std::optional<double> tie_tolerance;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<int> max_inflight;
  std::optional<int> max_retries;
  std::optional<std::string> input;
  std::vector<std::string> lexicons;
  std::optional<std::string> lexicon_preset;
  std::optional<std::string> policy;
  std::optional<std::string> foreground;
  std::optional<std::string> background;
  std::optional<int> max_ngram;
  std::optional<int> top_k;
  std::optional<double> prior_strength;
  std::optional<std::string> issue;
  std::optional<std::string> issues;
  std::optional<std::string> issue_preset;
  std::optional<int> per_issue;
  std::optional<int> repeats;
  std::optional<long long> min_count;
  std::optional<int> min_letters;
  std::optional<std::string> annotations;
  std::optional<std::string> results;
};

// ---- config -----------------------------------------------------------------

std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

void resolve_at(ordered_json& j, const std::vector<std::string>& keys, const fs::path& base) {
  ordered_json* node = &j;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object() || !node->contains(keys[i])) return;
    node = &(*node)[keys[i]];
  }
  if (!node->is_object() || !node->contains(keys.back())) return;
  auto& v = (*node)[keys.back()];
  if (v.is_string()) {
    v = resolve(v.get<std::string>(), base);
  } else if (v.is_array()) {
    for (auto& e : v) {
      if (e.is_string()) e = resolve(e.get<std::string>(), base);
    }
  }
}

ordered_json load_config(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  ordered_json cfg;
  try {
    cfg = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  if (!cfg.is_object()) throw ValidationError(path + ": config must be a JSON object");

  const fs::path base = fs::path(path).parent_path();
  for (const auto& keys : std::vector<std::vector<std::string>>{{"output_dir"},
                                                                {"input"},
                                                                {"lexicons"},
                                                                {"issues"},
                                                                {"terms", "foreground"},
                                                                {"terms", "background"},
                                                                {"annotator", "annotations"},
                                                                {"study", "annotations"},
                                                                {"report", "results"}}) {
    resolve_at(cfg, keys, base);
  }
  if (cfg.contains("study") && cfg["study"].contains("datasets")) {
    for (auto& ds : cfg["study"]["datasets"]) {
      resolve_at(ds, {"real"}, base);
      if (ds.contains("generated") && ds["generated"].is_object()) {
        for (auto& [method, p] : ds["generated"].items()) {
          if (p.is_string()) p = resolve(p.get<std::string>(), base);
        }
      }
    }
  }
  return cfg;
}

template <typename T>
void set_if(ordered_json& j, const std::vector<std::string>& keys, const std::optional<T>& v) {
  if (!v) return;
  ordered_json* node = &j;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
  (*node)[keys.back()] = *v;
}

ordered_json effective_config(const Flags& f) {
  ordered_json cfg = load_config(f.config);
  set_if(cfg, {"output_dir"}, f.output_dir);
  set_if(cfg, {"seed"}, f.seed);
  if (f.mf_collapse) cfg["mf_collapse"] = true;
  set_if(cfg, {"metrics", "epsilon"}, f.epsilon);
  set_if(cfg, {"metrics", "kld_direction"}, f.kld_direction);
  set_if(cfg, {"metrics", "log_base"}, f.log_base);
  set_if(cfg, {"metrics", "tie_tolerance"}, f.tie_tolerance);
  set_if(cfg, {"annotator", "endpoint"}, f.endpoint);
  set_if(cfg, {"annotator", "model"}, f.model);
  set_if(cfg, {"annotator", "max_inflight"}, f.max_inflight);
  set_if(cfg, {"annotator", "max_retries"}, f.max_retries);
  set_if(cfg, {"annotator", "annotations"}, f.annotations);
  set_if(cfg, {"input"}, f.input);
  if (!f.lexicons.empty()) cfg["lexicons"] = f.lexicons;
  set_if(cfg, {"lexicon_preset"}, f.lexicon_preset);
  set_if(cfg, {"tag_policy"}, f.policy);
  set_if(cfg, {"terms", "foreground"}, f.foreground);
  set_if(cfg, {"terms", "background"}, f.background);
  set_if(cfg, {"terms", "max_ngram"}, f.max_ngram);
  set_if(cfg, {"terms", "top_k"}, f.top_k);
  set_if(cfg, {"terms", "prior_strength"}, f.prior_strength);
  set_if(cfg, {"terms", "issue"}, f.issue);
  set_if(cfg, {"issues"}, f.issues);
  set_if(cfg, {"issue_preset"}, f.issue_preset);
  set_if(cfg, {"probes", "per_issue"}, f.per_issue);
  set_if(cfg, {"probes", "repeats"}, f.repeats);
  set_if(cfg, {"entities", "min_count"}, f.min_count);
  set_if(cfg, {"entities", "min_letters"}, f.min_letters);
  set_if(cfg, {"report", "results"}, f.results);
  return cfg;
}

// Typed reads with validation errors that name the key.
template <typename T>
T get_or(const ordered_json& cfg, const std::vector<std::string>& keys, T fallback) {
  const ordered_json* node = &cfg;
  std::string dotted;
  for (const auto& k : keys) {
    dotted += (dotted.empty() ? "" : ".") + k;
    if (!node->is_object() || !node->contains(k)) return fallback;
    node = &(*node)[k];
  }
  try {
    return node->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config key '" + dotted + "' has the wrong type");
  }
}

std::string require_path(const ordered_json& cfg, const std::vector<std::string>& keys,
                         const char* flag) {
  auto p = get_or<std::string>(cfg, keys, "");
  if (p.empty()) {
    std::string dotted;
    for (const auto& k : keys) dotted += (dotted.empty() ? "" : ".") + k;
    throw ValidationError("missing input: set '" + dotted + "' in the config or pass " + flag);
  }
  if (!fs::exists(p)) throw ValidationError("input not found: '" + p + "'");
  return p;
}

std::uint64_t require_seed(const ordered_json& cfg) {
  if (!cfg.contains("seed")) throw ValidationError("this subcommand samples; pass --seed or set 'seed'");
  return get_or<std::uint64_t>(cfg, {"seed"}, 0);
}

// ---- run context ------------------------------------------------------------

class Run {
 public:
  Run(std::string subcommand, ordered_json cfg)
      : subcommand_(std::move(subcommand)), cfg_(std::move(cfg)) {
    out_dir_ = get_or<std::string>(cfg_, {"output_dir"}, "partisan-out");
    cfg_["output_dir"] = out_dir_;
  }

  const ordered_json& cfg() const { return cfg_; }

  fs::path output(const std::string& name) {
    fs::create_directories(out_dir_);
    fs::path p = fs::path(out_dir_) / name;
    outputs_.push_back(p.string());
    return p;
  }

  void input(const std::string& path) { inputs_.insert(path); }

  void write_manifest() {
    ordered_json m;
    m["tool"] = "partisan";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["config"] = cfg_;
    m["config_hash"] = config_hash();
    m["inputs"] = ordered_json::array();
    for (const auto& p : inputs_) m["inputs"].push_back({{"path", p}, {"sha256", sha256_file(p)}});
    m["outputs"] = ordered_json::array();
    for (const auto& p : outputs_) {
      if (fs::exists(p)) m["outputs"].push_back({{"path", p}, {"sha256", sha256_file(p)}});
    }
    fs::create_directories(out_dir_);
    std::ofstream out(fs::path(out_dir_) / ("manifest-" + subcommand_ + ".json"), std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) throw IoError("cannot write manifest in '" + out_dir_ + "'");
  }

  std::string config_hash() const { return sha256_hex(cfg_.dump()); }

 private:
  std::string subcommand_;
  ordered_json cfg_;
  std::string out_dir_;
  std::set<std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

void close_checked(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

Corpus load_input(Run& run, const char* flag = "--input") {
  const auto path = require_path(run.cfg(), {"input"}, flag);
  run.input(path);
  return load_corpus(path);
}

IdeologyTerms ideology_terms(const ordered_json& cfg) {
  IdeologyTerms terms;
  if (!cfg.contains("ideology_terms")) return terms;
  auto read_side = [&](const char* side, std::array<std::string, 3>& dst) {
    auto v = get_or<std::vector<std::string>>(cfg, {"ideology_terms", side}, {});
    if (v.empty()) return;
    if (v.size() != 3) throw ValidationError(std::string("ideology_terms.") + side + " needs exactly 3 terms");
    std::copy(v.begin(), v.end(), dst.begin());
  };
  read_side("liberal", terms.liberal);
  read_side("conservative", terms.conservative);
  return terms;
}

InstructionTemplates templates(const ordered_json& cfg) {
  InstructionTemplates t;
  t.with_entity = get_or<std::string>(cfg, {"templates", "with_entity"}, t.with_entity);
  t.without_entity = get_or<std::string>(cfg, {"templates", "without_entity"}, t.without_entity);
  return t;
}

std::vector<IssuePreset> issues_from(Run& run) {
  const auto& cfg = run.cfg();
  if (auto path = get_or<std::string>(cfg, {"issues"}, ""); !path.empty()) {
    if (!fs::exists(path)) throw ValidationError("input not found: '" + path + "'");
    run.input(path);
    return load_issue_presets(path);
  }
  if (auto preset = get_or<std::string>(cfg, {"issue_preset"}, ""); !preset.empty()) {
    return issue_presets(preset);
  }
  throw ValidationError("no issues: pass --issues FILE or --issue-preset NAME");
}

MetricOptions metric_options(const ordered_json& cfg) {
  MetricOptions m;
  m.epsilon = get_or<double>(cfg, {"metrics", "epsilon"}, m.epsilon);
  m.tie_tolerance = get_or<double>(cfg, {"metrics", "tie_tolerance"}, m.tie_tolerance);
  m.direction = parse_kld_direction(get_or<std::string>(cfg, {"metrics", "kld_direction"}, "gen-vs-real"));
  m.log_base = parse_log_base(get_or<std::string>(cfg, {"metrics", "log_base"}, "e"));
  if (!(m.epsilon >= 0.0)) throw ValidationError("metrics.epsilon must be >= 0");
  if (!(m.tie_tolerance >= 0.0)) throw ValidationError("metrics.tie_tolerance must be >= 0");
  return m;
}

struct LoadedStudy {
  Study study;
  AnnotationStore store;
};

LoadedStudy load_study(Run& run) {
  const auto& cfg = run.cfg();
  if (!cfg.contains("study")) throw ValidationError("config has no 'study' section");
  const auto& s = cfg["study"];
  LoadedStudy out;
  out.study.methods = get_or<std::vector<std::string>>(cfg, {"study", "methods"}, {});
  if (out.study.methods.empty()) throw ValidationError("study.methods must list at least one method");
  if (s.contains("features")) {
    out.study.features.clear();
    for (const auto& f : get_or<std::vector<std::string>>(cfg, {"study", "features"}, {})) {
      out.study.features.push_back(parse_feature(f));
    }
  }
  for (const auto& [feature, annotator] :
       get_or<std::map<std::string, std::string>>(cfg, {"study", "annotators"}, {})) {
    out.study.annotators[parse_feature(feature)] = annotator;
  }

  std::vector<AnnotationStore> stores;
  for (const auto& p : get_or<std::vector<std::string>>(cfg, {"study", "annotations"}, {})) {
    if (!fs::exists(p)) throw ValidationError("input not found: '" + p + "'");
    run.input(p);
    stores.push_back(load_annotations(p));
  }
  out.store = merge_annotations(stores);

  if (!s.contains("datasets") || !s["datasets"].is_array() || s["datasets"].empty()) {
    throw ValidationError("study.datasets must be a non-empty array");
  }
  for (const auto& d : s["datasets"]) {
    StudyDataset ds;
    try {
      ds.name = d.at("name").get<std::string>();
      ds.topics = d.at("topics").get<std::vector<std::string>>();
      const auto real = d.at("real").get<std::string>();
      if (!fs::exists(real)) throw ValidationError("input not found: '" + real + "'");
      run.input(real);
      ds.real = load_corpus(real);
      for (const auto& method : out.study.methods) {
        const auto gen = d.at("generated").at(method).get<std::string>();
        if (!fs::exists(gen)) throw ValidationError("input not found: '" + gen + "'");
        run.input(gen);
        ds.generated.emplace(method, load_corpus(gen));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad study.datasets entry: ") + e.what());
    }
    out.study.datasets.push_back(std::move(ds));
  }
  return out;
}

std::string iso8601_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string generated_at(const ordered_json& cfg) {
  if (auto v = get_or<std::string>(cfg, {"report", "generated_at"}, ""); !v.empty()) return v;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    try {
      return iso8601_utc(static_cast<std::time_t>(std::stoll(epoch)));
    } catch (const std::exception&) {
      throw ValidationError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  return iso8601_utc(std::time(nullptr));
}

// ---- subcommands ------------------------------------------------------------

ordered_json cmd_ingest(Run& run) {
  const Corpus corpus = load_input(run);
  const auto path = run.output("corpus.jsonl");
  auto out = open_out(path);
  write_corpus(corpus, out);
  close_checked(out, path);

  ordered_json by_ideology = ordered_json::object();
  ordered_json by_source = ordered_json::object();
  std::map<std::string, std::int64_t> by_topic;
  for (Ideology i : kIdeologies) by_ideology[std::string(to_string(i))] = 0;
  for (const auto& t : corpus.instances) {
    by_ideology[std::string(to_string(t.ideology))] = by_ideology[std::string(to_string(t.ideology))].get<int>() + 1;
    const std::string src(to_string(t.source));
    by_source[src] = by_source.value(src, 0) + 1;
    if (t.topic) ++by_topic[*t.topic];
  }
  return {{"n", corpus.size()}, {"by_ideology", by_ideology}, {"by_source", by_source},
          {"by_topic", by_topic}, {"output", path.string()}};
}

ordered_json cmd_tag_issues(Run& run) {
  const auto& cfg = run.cfg();
  const Corpus corpus = load_input(run);
  std::vector<IssueLexicon> lexicons;
  for (const auto& p : get_or<std::vector<std::string>>(cfg, {"lexicons"}, {})) {
    if (!fs::exists(p)) throw ValidationError("input not found: '" + p + "'");
    run.input(p);
    for (auto& lex : load_lexicons(p)) lexicons.push_back(std::move(lex));
  }
  if (auto preset = get_or<std::string>(cfg, {"lexicon_preset"}, ""); !preset.empty()) {
    for (auto& lex : preset_lexicons(preset)) lexicons.push_back(std::move(lex));
  }
  if (lexicons.empty()) throw ValidationError("no lexicons: pass --lexicon FILE or --lexicon-preset NAME");
  const TagPolicy policy = parse_tag_policy(get_or<std::string>(cfg, {"tag_policy"}, "best_single"));

  const Corpus tagged = tag_issues(corpus, lexicons, policy);
  const auto path = run.output("tagged.jsonl");
  auto out = open_out(path);
  write_corpus(tagged, out);
  close_checked(out, path);

  std::map<std::string, std::int64_t> by_topic;
  std::int64_t untagged = 0;
  for (const auto& t : tagged.instances) {
    if (t.topic) {
      ++by_topic[*t.topic];
    } else {
      ++untagged;
    }
  }
  return {{"n_in", corpus.size()}, {"n_out", tagged.size()}, {"by_topic", by_topic},
          {"untagged", untagged}, {"output", path.string()}};
}

ordered_json cmd_extract_terms(Run& run) {
  const auto& cfg = run.cfg();
  const auto fg_path = require_path(cfg, {"terms", "foreground"}, "--foreground");
  const auto bg_path = require_path(cfg, {"terms", "background"}, "--background");
  run.input(fg_path);
  run.input(bg_path);
  DistinctiveTermOptions opts;
  opts.max_ngram = get_or<int>(cfg, {"terms", "max_ngram"}, opts.max_ngram);
  const int top_k = get_or<int>(cfg, {"terms", "top_k"}, static_cast<int>(opts.top_k));
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
  opts.top_k = static_cast<std::size_t>(top_k);
  opts.prior_strength = get_or<double>(cfg, {"terms", "prior_strength"}, opts.prior_strength);
  const auto issue = get_or<std::string>(cfg, {"terms", "issue"}, "issue");

  const auto terms = extract_distinctive_terms(load_corpus(fg_path), load_corpus(bg_path), opts);

  const auto terms_path = run.output("terms.jsonl");
  auto out = open_out(terms_path);
  for (const auto& t : terms) {
    ordered_json j;
    j["term"] = t.term;
    j["zeta"] = t.zeta;
    j["count_fg"] = t.count_fg;
    j["count_bg"] = t.count_bg;
    out << j.dump() << '\n';
  }
  close_checked(out, terms_path);

  const auto lex_path = run.output("lexicon.json");
  auto lex_out = open_out(lex_path);
  lex_out << lexicon_to_json(lexicon_from_terms(issue, terms)).dump(2) << '\n';
  close_checked(lex_out, lex_path);

  ordered_json top = ordered_json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(terms.size(), 10); ++i) top.push_back(terms[i].term);
  return {{"n_terms", terms.size()}, {"top", top}, {"output", terms_path.string()},
          {"lexicon", lex_path.string()}};
}

ordered_json cmd_build_tuning_set(Run& run) {
  const auto& cfg = run.cfg();
  const std::uint64_t seed = require_seed(cfg);
  const Corpus corpus = load_input(run);
  const auto min_letters = get_or<int>(cfg, {"entities", "min_letters"}, 2);
  const auto min_count = get_or<long long>(cfg, {"entities", "min_count"}, 100);
  if (min_letters < 0 || min_count < 0) throw ValidationError("entity thresholds must be >= 0");
  const EntityStats stats = compute_entity_stats(corpus, static_cast<std::size_t>(min_letters), min_count);

  const auto path = run.output("tuning_set.jsonl");
  auto out = open_out(path);
  const auto n = write_tuning_set(corpus, stats, ideology_terms(cfg), seed, out, templates(cfg));
  close_checked(out, path);

  const auto stats_path = run.output("entity_stats.json");
  auto stats_out = open_out(stats_path);
  stats_out << ordered_json(stats.counts).dump(2) << '\n';
  close_checked(stats_out, stats_path);

  return {{"count", n}, {"entities", stats.size()}, {"output", path.string()}};
}

ordered_json cmd_build_probes(Run& run) {
  const auto& cfg = run.cfg();
  const std::uint64_t seed = require_seed(cfg);
  const auto issues = issues_from(run);
  ProbeOptions opts;
  opts.per_issue = get_or<int>(cfg, {"probes", "per_issue"}, opts.per_issue);
  opts.repeats = get_or<int>(cfg, {"probes", "repeats"}, opts.repeats);
  const auto prompts = build_probe_prompts(issues, ideology_terms(cfg), opts, seed, templates(cfg));

  const auto path = run.output("probes.jsonl");
  auto out = open_out(path);
  write_probe_prompts(prompts, out);
  close_checked(out, path);

  std::map<std::string, std::int64_t> per_cell;
  for (const auto& p : prompts) ++per_cell[p.issue + "/" + std::string(to_string(p.example.ideology))];
  return {{"count", prompts.size()}, {"per_issue_ideology", per_cell}, {"output", path.string()}};
}

ordered_json cmd_annotate_stance(Run& run) {
  const auto& cfg = run.cfg();
  const Corpus corpus = load_input(run);
  std::map<std::string, std::string> targets;
  for (const auto& p : issues_from(run)) targets[p.issue] = p.stance_target;

  EndpointConfig endpoint = EndpointConfig::from_env();
  endpoint.url = get_or<std::string>(cfg, {"annotator", "endpoint"}, endpoint.url);
  endpoint.model = get_or<std::string>(cfg, {"annotator", "model"}, endpoint.model);
  endpoint.timeout_s = get_or<double>(cfg, {"annotator", "timeout_s"}, endpoint.timeout_s);

  StanceAnnotationOptions opts;
  opts.annotator = get_or<std::string>(cfg, {"annotator", "name"}, endpoint.model);
  opts.max_inflight = get_or<int>(cfg, {"annotator", "max_inflight"}, opts.max_inflight);
  opts.retry.max_retries = get_or<int>(cfg, {"annotator", "max_retries"}, opts.retry.max_retries);
  opts.retry.backoff_base_s = get_or<double>(cfg, {"annotator", "backoff_base_s"}, opts.retry.backoff_base_s);
  opts.retry.jitter = get_or<double>(cfg, {"annotator", "jitter"}, opts.retry.jitter);
  if (opts.max_inflight < 1) throw ValidationError("max_inflight must be >= 1");
  if (opts.retry.max_retries < 0) throw ValidationError("max_retries must be >= 0");

  std::string ann_path = get_or<std::string>(cfg, {"annotator", "annotations"}, "");
  if (ann_path.empty()) ann_path = run.output("annotations.jsonl").string();
  fs::create_directories(fs::path(ann_path).parent_path().empty() ? fs::path(".") : fs::path(ann_path).parent_path());
  AnnotationStore store = load_annotations_if_exists(ann_path);

  HttpChatClient client(endpoint);
  AnnotationWriter sink(ann_path, /*append=*/true);
  const auto result = annotate_stances(corpus, targets, client, opts, store, &sink);

  const auto skips_path = run.output("skips.jsonl");
  auto out = open_out(skips_path);
  for (const auto& s : result.skips) out << skip_to_json(s).dump() << '\n';
  close_checked(out, skips_path);

  ordered_json summary{{"annotated", result.records.size()},
                       {"skipped", result.skips.size()},
                       {"already_annotated", result.already_annotated},
                       {"requests", result.requests},
                       {"annotator", opts.annotator},
                       {"annotations", ann_path},
                       {"skips", skips_path.string()}};
  return summary;
}

ordered_json cmd_distributions(Run& run) {
  auto loaded = load_study(run);
  const ClassRegistry registry(get_or<bool>(run.cfg(), {"mf_collapse"}, false));
  const auto dists = study_distributions(loaded.study, loaded.store, registry);
  const auto path = run.output("distributions.csv");
  const auto n = export_distributions(dists, path.string());
  return {{"distributions", dists.size()}, {"rows", n}, {"output", path.string()}};
}

StudyResults evaluate_from_config(Run& run) {
  auto loaded = load_study(run);
  const ClassRegistry registry(get_or<bool>(run.cfg(), {"mf_collapse"}, false));
  return evaluate_study(loaded.study, loaded.store, registry, metric_options(run.cfg()));
}

ordered_json cmd_evaluate(Run& run) {
  const auto results = evaluate_from_config(run);
  const auto path = run.output("results.jsonl");
  auto out = open_out(path);
  write_results(results.rows, out);
  close_checked(out, path);
  const auto dist_path = run.output("distributions.csv");
  export_distributions(results.distributions, dist_path.string());
  return {{"rows", results.rows.size()}, {"output", path.string()}, {"distributions", dist_path.string()}};
}

ordered_json cmd_report(Run& run) {
  const auto& cfg = run.cfg();
  std::vector<EvaluationRow> rows;
  if (auto p = get_or<std::string>(cfg, {"report", "results"}, ""); !p.empty()) {
    if (!fs::exists(p)) throw ValidationError("input not found: '" + p + "'");
    run.input(p);
    std::ifstream in(p, std::ios::binary);
    rows = read_results(in, p);
  } else {
    rows = evaluate_from_config(run).rows;
  }
  const auto methods = get_or<std::vector<std::string>>(cfg, {"study", "methods"}, {});
  const auto formats = get_or<std::vector<std::string>>(cfg, {"report", "formats"}, {"markdown", "csv", "json"});
  for (const auto& f : formats) {
    if (f != "markdown" && f != "csv" && f != "json") throw ValidationError("unknown report format '" + f + "'");
  }
  const auto bundle = build_report(rows, methods, generated_at(cfg), run.config_hash());
  const auto wants = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };

  ordered_json written = ordered_json::array();
  if (wants("markdown")) {
    const auto p = run.output("report.md");
    auto out = open_out(p);
    out << bundle.markdown;
    close_checked(out, p);
    written.push_back(p.string());
  }
  if (wants("csv")) {
    for (const auto& [name, table] : bundle.tables) {
      const auto p = run.output(name + ".csv");
      auto out = open_out(p);
      out << table.csv;
      close_checked(out, p);
      written.push_back(p.string());
    }
  }
  if (wants("json")) {
    const auto p = run.output("report.json");
    auto out = open_out(p);
    out << bundle.json.dump(2) << '\n';
    close_checked(out, p);
    written.push_back(p.string());
  }
  return {{"tables", bundle.tables.size()}, {"outputs", written}};
}

// ---- wiring -----------------------------------------------------------------

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration; flags override its values");
  sub->add_option("--output-dir", f.output_dir, "Directory for artifacts and the run manifest [partisan-out]");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Partisan alignment toolkit: compare ideology-conditioned text with real partisan discourse",
               "partisan"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  using Handler = ordered_json (*)(Run&);
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus JSONL and write a normalized copy");
  add_common(ingest, f);
  ingest->add_option("--input", f.input, "Corpus JSONL");
  commands.emplace_back(ingest, cmd_ingest);

  auto* tag = app.add_subcommand("tag-issues", "Assign issue topics by lexicon matching");
  add_common(tag, f);
  tag->add_option("--input", f.input, "Corpus JSONL");
  tag->add_option("--lexicon", f.lexicons, "Lexicon JSON file (repeatable)");
  tag->add_option("--lexicon-preset", f.lexicon_preset, "Bundled lexicons: covid, abortion, congress");
  tag->add_option("--policy", f.policy, "all_matching or best_single [best_single]");
  commands.emplace_back(tag, cmd_tag_issues);

  auto* terms = app.add_subcommand("extract-terms", "Rank distinctive n-grams of a foreground corpus");
  add_common(terms, f);
  terms->add_option("--foreground", f.foreground, "Foreground corpus JSONL");
  terms->add_option("--background", f.background, "Background corpus JSONL");
  terms->add_option("--max-ngram", f.max_ngram, "Longest n-gram, 1-3 [1]");
  terms->add_option("--top-k", f.top_k, "Number of terms to keep [50]");
  terms->add_option("--prior-strength", f.prior_strength, "Dirichlet prior scale [1.0]");
  terms->add_option("--issue", f.issue, "Issue name for the emitted lexicon [issue]");
  commands.emplace_back(terms, cmd_extract_terms);

  auto* tuning = app.add_subcommand("build-tuning-set", "Render instruction/output pairs for finetuning");
  add_common(tuning, f);
  tuning->add_option("--input", f.input, "Corpus JSONL with optional entities");
  tuning->add_option("--seed", f.seed, "Sampling seed (required)");
  tuning->add_option("--min-count", f.min_count, "Minimum entity occurrences [100]");
  tuning->add_option("--min-letters", f.min_letters, "Minimum letters per entity [2]");
  commands.emplace_back(tuning, cmd_build_tuning_set);

  auto* probes = app.add_subcommand("build-probes", "Render ideology-conditioned probe prompts per issue");
  add_common(probes, f);
  probes->add_option("--issues", f.issues, "Issue preset JSON file");
  probes->add_option("--issue-preset", f.issue_preset, "Bundled issues: covid, abortion, congress");
  probes->add_option("--seed", f.seed, "Sampling seed (required)");
  probes->add_option("--per-issue", f.per_issue, "Prompts per issue, ideology and repeat [100]");
  probes->add_option("--repeats", f.repeats, "Generation repeats [10]");
  commands.emplace_back(probes, cmd_build_probes);

  auto* annotate = app.add_subcommand("annotate-stance", "Label stances through a chat-completions endpoint");
  add_common(annotate, f);
  annotate->add_option("--input", f.input, "Topic-tagged corpus JSONL");
  annotate->add_option("--issues", f.issues, "Issue preset JSON file supplying stance targets");
  annotate->add_option("--issue-preset", f.issue_preset, "Bundled issues: covid, abortion, congress");
  annotate->add_option("--endpoint", f.endpoint, "Chat-completions URL [$ANNOTATOR_ENDPOINT]");
  annotate->add_option("--model", f.model, "Model name [$ANNOTATOR_MODEL or gpt-3.5-turbo]");
  annotate->add_option("--max-inflight", f.max_inflight, "Concurrent requests [4]");
  annotate->add_option("--max-retries", f.max_retries, "Retries per instance [3]");
  annotate->add_option("--annotations", f.annotations, "Annotation JSONL to resume and append to");
  commands.emplace_back(annotate, cmd_annotate_stance);

  auto* dists = app.add_subcommand("distributions", "Export per-cell class distributions as long CSV");
  add_common(dists, f);
  dists->add_flag("--mf-collapse", f.mf_collapse, "Merge moral foundation virtue/vice pairs");
  commands.emplace_back(dists, cmd_distributions);

  for (auto* sub : {app.add_subcommand("evaluate", "Compute KL divergence and class tendency accuracy"),
                    app.add_subcommand("report", "Render KLD and tendency tables")}) {
    add_common(sub, f);
    sub->add_option("--epsilon", f.epsilon, "KLD smoothing mass [1e-6]");
    sub->add_flag("--mf-collapse", f.mf_collapse, "Merge moral foundation virtue/vice pairs");
    sub->add_option("--kld-direction", f.kld_direction, "gen-vs-real or real-vs-gen [gen-vs-real]")
        ->check(CLI::IsMember({"gen-vs-real", "real-vs-gen"}));
    sub->add_option("--log-base", f.log_base, "e or 2 [e]")->check(CLI::IsMember({"e", "2"}));
    sub->add_option("--tie-tolerance", f.tie_tolerance, "Sign tie tolerance [0]");
    commands.emplace_back(sub, sub->get_name() == "evaluate" ? cmd_evaluate : cmd_report);
  }
  app.get_subcommand("report")->add_option("--results", f.results, "results.jsonl from evaluate");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (auto& [sub, handler] : commands) {
      if (!sub->parsed()) continue;
      Run r(sub->get_name(), effective_config(f));
      ordered_json summary;
      int code = kExitOk;
      try {
        summary = handler(r);
        if (summary.contains("skipped") && summary["skipped"].get<std::size_t>() > 0) code = kExitPartial;
      } catch (...) {
        throw;
      }
      r.write_manifest();
      ordered_json line{{"subcommand", sub->get_name()}, {"status", code == kExitOk ? "ok" : "partial"}};
      line["config_hash"] = r.config_hash();
      line["summary"] = summary;
      out << line.dump() << '\n';
      return code;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace partisan::cli
