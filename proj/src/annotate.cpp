#include "partisan/annotate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <thread>

#include "partisan/text.hpp"

namespace partisan {

// ---- records ----------------------------------------------------------------

void validate_record(const AnnotationRecord& r) {
  if (r.instance_id.empty()) throw ValidationError("annotation has an empty instance_id");
  if (r.annotator.empty()) throw ValidationError("annotation for '" + r.instance_id + "' has no annotator");

  static const ClassSet stance = stance_classes();
  static const ClassSet emotion = emotion_classes();
  static const ClassSet moral = moral_foundation_classes(false);
  static const ClassSet moral_pairs = moral_foundation_classes(true);

  std::set<std::string> seen;
  for (const auto& label : r.labels) {
    bool ok = false;
    switch (r.feature) {
      case FeatureKind::stance:
        ok = stance.contains(label);
        break;
      case FeatureKind::emotion:
        ok = emotion.contains(label);
        break;
      case FeatureKind::moral_foundation:
        ok = moral.contains(label) || moral_pairs.contains(label);
        break;
    }
    if (!ok) {
      throw ValidationError("annotation for '" + r.instance_id + "' has label '" + label +
                            "' outside the " + std::string(to_string(r.feature)) + " classes");
    }
    if (!seen.insert(label).second) {
      throw ValidationError("annotation for '" + r.instance_id + "' repeats label '" + label + "'");
    }
  }
  if (r.feature == FeatureKind::stance && r.labels.size() != 1) {
    throw ValidationError("stance annotation for '" + r.instance_id + "' must have exactly one label");
  }
  if (r.confidence) {
    if (r.confidence->size() != r.labels.size()) {
      throw ValidationError("annotation for '" + r.instance_id + "' has " +
                            std::to_string(r.confidence->size()) + " confidences for " +
                            std::to_string(r.labels.size()) + " labels");
    }
    for (double c : *r.confidence) {
      if (!(c >= 0.0 && c <= 1.0)) {
        throw ValidationError("annotation for '" + r.instance_id + "' has confidence outside [0,1]");
      }
    }
  }
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  AnnotationRecord r;
  try {
    r.instance_id = j.at("instance_id").get<std::string>();
    r.feature = parse_feature(j.at("feature").get<std::string>());
    r.labels = j.at("labels").get<std::vector<std::string>>();
    r.annotator = j.at("annotator").get<std::string>();
    if (auto it = j.find("confidence"); it != j.end() && !it->is_null()) {
      r.confidence = it->get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad annotation record: ") + e.what());
  }
  validate_record(r);
  return r;
}

nlohmann::ordered_json record_to_json(const AnnotationRecord& r) {
  nlohmann::ordered_json j;
  j["instance_id"] = r.instance_id;
  j["feature"] = to_string(r.feature);
  j["labels"] = r.labels;
  j["annotator"] = r.annotator;
  if (r.confidence) j["confidence"] = *r.confidence;
  return j;
}

// ---- store ------------------------------------------------------------------

bool AnnotationStore::same_labels(const AnnotationRecord& a, const AnnotationRecord& b) {
  auto la = a.labels;
  auto lb = b.labels;
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  return la == lb;
}

bool AnnotationStore::add(AnnotationRecord r) {
  validate_record(r);
  Key key{r.instance_id, r.feature, r.annotator};
  auto it = records_.find(key);
  if (it != records_.end()) {
    if (!same_labels(it->second, r)) {
      throw AnnotationConflict({r.instance_id}, "conflicting " + std::string(to_string(r.feature)) +
                                                    " annotations for '" + r.instance_id +
                                                    "' by '" + r.annotator + "'");
    }
    return false;
  }
  annotators_[{r.instance_id, r.feature}].push_back(r.annotator);
  records_.emplace(std::move(key), std::move(r));
  return true;
}

const AnnotationRecord* AnnotationStore::find(const std::string& instance_id, FeatureKind f,
                                              const std::string& annotator) const {
  auto it = records_.find(Key{instance_id, f, annotator});
  return it == records_.end() ? nullptr : &it->second;
}

const AnnotationRecord* AnnotationStore::lookup(const std::string& instance_id, FeatureKind f,
                                                const std::optional<std::string>& annotator) const {
  if (annotator) return find(instance_id, f, *annotator);
  auto it = annotators_.find({instance_id, f});
  if (it == annotators_.end()) return nullptr;
  if (it->second.size() > 1) {
    throw ValidationError("instance '" + instance_id + "' has " + std::to_string(it->second.size()) +
                          " " + std::string(to_string(f)) +
                          " annotators; choose one explicitly");
  }
  return find(instance_id, f, it->second.front());
}

std::vector<AnnotationRecord> AnnotationStore::records() const {
  std::vector<AnnotationRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, r] : records_) out.push_back(r);
  return out;
}

AnnotationStore parse_annotations(std::istream& in, const std::string& path) {
  AnnotationStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      store.add(record_from_json(j));
    } catch (const AnnotationConflict&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return store;
}

AnnotationStore load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open annotations '" + path + "'");
  return parse_annotations(in, path);
}

AnnotationStore load_annotations_if_exists(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return parse_annotations(in, path);
}

AnnotationStore merge_annotations(const std::vector<AnnotationStore>& stores) {
  AnnotationStore merged;
  std::vector<std::string> conflicts;
  for (const auto& s : stores) {
    for (const auto& r : s.records()) {
      try {
        merged.add(r);
      } catch (const AnnotationConflict& e) {
        conflicts.push_back(e.instance_ids().front());
      }
    }
  }
  if (!conflicts.empty()) {
    std::sort(conflicts.begin(), conflicts.end());
    conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
    std::string list;
    for (const auto& id : conflicts) list += (list.empty() ? "" : ", ") + id;
    throw AnnotationConflict(conflicts, "conflicting annotations for: " + list);
  }
  return merged;
}

void write_annotations(const AnnotationStore& store, std::ostream& out) {
  for (const auto& r : store.records()) out << record_to_json(r).dump() << '\n';
}

AnnotationWriter::AnnotationWriter(const std::string& path, bool append)
    : out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)), path_(path) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void AnnotationWriter::write(const AnnotationRecord& r) {
  const std::string line = record_to_json(r).dump() + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw IoError("write failed for '" + path_ + "'");
}

// ---- stance prompt ----------------------------------------------------------

std::string render_stance_prompt(const StanceRequest& req) {
  if (trim(req.statement).empty()) throw ValidationError("stance request has an empty statement");
  if (trim(req.target).empty()) throw ValidationError("stance request has an empty target");
  std::string out(kStanceInstruction);
  out += "\nStatement: ";
  out += req.statement;
  out += "\nTarget: ";
  out += req.target;
  return out;
}

std::string parse_stance_response(std::string_view raw) {
  static constexpr std::string_view kWords[] = {"negative", "neutral", "positive"};
  std::string s = to_lower_utf8(trim(raw));
  std::string_view head = s;
  while (!head.empty() && std::ispunct(static_cast<unsigned char>(head.back()))) {
    head.remove_suffix(1);
  }
  for (auto w : kWords) {
    if (head == w) return std::string(w);
  }
  std::set<std::string_view> found;
  for (const auto& tok : tokenize(s)) {
    for (auto w : kWords) {
      if (tok == w) found.insert(w);
    }
  }
  if (found.size() != 1) throw UnparseableStance(std::string(raw));
  return std::string(*found.begin());
}

// ---- chat endpoint ----------------------------------------------------------

EndpointConfig EndpointConfig::from_env(EndpointConfig base) {
  if (const char* v = std::getenv("ANNOTATOR_ENDPOINT"); v && *v) base.url = v;
  if (const char* v = std::getenv("ANNOTATOR_MODEL"); v && *v) base.model = v;
  if (const char* v = std::getenv("ANNOTATOR_TOKEN"); v && *v) base.token = v;
  return base;
}

nlohmann::ordered_json build_chat_request(const std::string& model, const std::string& prompt) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  j["temperature"] = 0;
  return j;
}

nlohmann::ordered_json skip_to_json(const SkipRecord& s) {
  nlohmann::ordered_json j;
  j["instance_id"] = s.instance_id;
  j["reason"] = s.reason;
  j["attempts"] = s.attempts;
  j["last_response"] = s.last_response;
  return j;
}

namespace {

double jitter_factor(double jitter) {
  if (jitter <= 0.0) return 1.0;
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return 1.0 + jitter * std::generate_canonical<double, 53>(rng);
}

struct Outcome {
  std::optional<std::string> label;
  SkipRecord skip;
  int requests = 0;
};

Outcome annotate_one(const TextInstance& t, const std::string& target, ChatClient& client,
                     const StanceAnnotationOptions& opts) {
  const std::string prompt = render_stance_prompt({t.text, target});
  const auto& policy = opts.retry;
  Outcome out;
  out.skip.instance_id = t.id;
  double next_delay = policy.backoff_base_s;
  const int max_attempts = 1 + std::max(0, policy.max_retries);

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    ChatReply reply = client.complete(prompt);
    ++out.requests;
    out.skip.attempts = attempt;
    double wait = next_delay * jitter_factor(policy.jitter);
    switch (reply.status) {
      case ChatReply::Status::ok:
        try {
          out.label = parse_stance_response(reply.content);
          return out;
        } catch (const UnparseableStance& e) {
          out.skip.reason = "unparseable response";
          out.skip.last_response = e.raw();
          wait = 0.0;
        }
        break;
      case ChatReply::Status::rate_limited:
        out.skip.reason = "rate limited (HTTP 429)";
        if (reply.retry_after_s > 0.0) wait = std::min(reply.retry_after_s, policy.max_retry_after_s);
        break;
      case ChatReply::Status::transient:
        out.skip.reason = reply.error.empty() ? "transient failure" : reply.error;
        break;
      case ChatReply::Status::fatal:
        out.skip.reason = reply.error.empty() ? "request rejected" : reply.error;
        return out;
    }
    if (attempt < max_attempts && wait > 0.0) {
      if (opts.sleep) {
        opts.sleep(wait);
      } else {
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
    }
    if (reply.status != ChatReply::Status::ok) next_delay *= policy.backoff_factor;
  }
  return out;
}

}  // namespace

StanceRunResult annotate_stances(const Corpus& corpus,
                                 const std::map<std::string, std::string>& target_by_topic,
                                 ChatClient& client, const StanceAnnotationOptions& opts,
                                 AnnotationStore& store, AnnotationWriter* sink) {
  if (opts.annotator.empty()) throw ValidationError("annotator tag is empty");
  std::vector<std::string> missing;
  for (const auto& t : corpus.instances) {
    if (!t.topic) {
      missing.push_back(t.id + " (no topic)");
    } else if (!target_by_topic.contains(*t.topic)) {
      missing.push_back(t.id + " (topic '" + *t.topic + "')");
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("no stance target for: " + list);
  }

  StanceRunResult result;
  std::vector<const TextInstance*> pending;
  std::set<std::string> queued;
  for (const auto& t : corpus.instances) {
    if (store.contains(t.id, FeatureKind::stance, opts.annotator) || !queued.insert(t.id).second) {
      ++result.already_annotated;
    } else {
      pending.push_back(&t);
    }
  }

  std::vector<Outcome> outcomes(pending.size());
  std::atomic<std::size_t> next{0};
  std::mutex store_mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        const TextInstance& t = *pending[i];
        outcomes[i] = annotate_one(t, target_by_topic.at(*t.topic), client, opts);
        if (outcomes[i].label) {
          AnnotationRecord r{t.id, FeatureKind::stance, {*outcomes[i].label}, opts.annotator, {}};
          std::lock_guard lock(store_mu);
          store.add(r);
          if (sink) sink->write(r);
        }
      } catch (...) {
        std::lock_guard lock(store_mu);
        if (!failure) failure = std::current_exception();
        next.store(pending.size());
        return;
      }
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opts.max_inflight)), pending.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < n_threads; ++k) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < pending.size(); ++i) {
    result.requests += static_cast<std::size_t>(outcomes[i].requests);
    if (outcomes[i].label) {
      result.records.push_back(
          {pending[i]->id, FeatureKind::stance, {*outcomes[i].label}, opts.annotator, {}});
    } else {
      result.skips.push_back(outcomes[i].skip);
    }
  }
  return result;
}

}  // namespace partisan
